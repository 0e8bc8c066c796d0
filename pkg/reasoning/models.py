from django.db import models


class PipelineRun(models.Model):
    STATUS_CHOICES = [
        ('pending', 'In Attesa'),
        ('processing', 'In Elaborazione'),
        ('completed', 'Completato'),
        ('failed', 'Fallito'),
    ]

    name = models.CharField(max_length=200, verbose_name="Nome")
    # set di domande in JSON lines (output del comando filter)
    input_path = models.CharField(max_length=500, verbose_name="Set di Domande")
    output_path = models.CharField(max_length=500, blank=True, verbose_name="File delle Tracce")
    config_json = models.JSONField(default=dict, verbose_name="Configurazione")
    status = models.CharField(max_length=20, choices=STATUS_CHOICES, default='pending', verbose_name="Stato")
    created_at = models.DateTimeField(auto_now_add=True, verbose_name="Creato il")
    updated_at = models.DateTimeField(auto_now=True, verbose_name="Aggiornato il")

    # Statistiche
    total_questions = models.IntegerField(default=0, verbose_name="Domande Totali")
    processed_questions = models.IntegerField(default=0, verbose_name="Domande Processate")
    answered_count = models.IntegerField(default=0, verbose_name="Risposte Prodotte")
    # codice di errore -> conteggio
    error_counts = models.JSONField(default=dict, blank=True, verbose_name="Tassonomia Errori")

    error_message = models.TextField(blank=True, null=True, verbose_name="Messaggio Errore")
    # classe dell'eccezione che ha interrotto la run
    error_type = models.CharField(max_length=100, blank=True, default="", verbose_name="Tipo Errore")
    task_id = models.CharField(max_length=255, blank=True, null=True, verbose_name="Task ID")

    class Meta:
        ordering = ['-created_at']
        verbose_name = "Esecuzione Pipeline"
        verbose_name_plural = "Esecuzioni Pipeline"

    def __str__(self):
        return f"{self.name} - {self.get_status_display()}"

    @property
    def progress_percentage(self):
        if self.total_questions > 0:
            return int((self.processed_questions / self.total_questions) * 100)
        return 0


class TraceRecord(models.Model):
    """Traccia di una singola domanda"""
    run = models.ForeignKey(PipelineRun, on_delete=models.CASCADE, related_name='traces')
    position = models.IntegerField(verbose_name="Posizione")
    question_id = models.CharField(max_length=100, verbose_name="ID Domanda")
    template_id = models.CharField(max_length=50, verbose_name="Template")
    error_code = models.CharField(max_length=40, default="none", verbose_name="Codice Errore")
    final_answer = models.CharField(max_length=100, blank=True, null=True, verbose_name="Risposta")
    payload = models.JSONField(default=dict, verbose_name="Traccia Completa")

    class Meta:
        ordering = ['position']
        verbose_name = "Traccia"
        verbose_name_plural = "Tracce"
        indexes = [
            models.Index(fields=['run', 'position']),
        ]

    def __str__(self):
        return f"{self.question_id} [{self.template_id}] {self.error_code}"
