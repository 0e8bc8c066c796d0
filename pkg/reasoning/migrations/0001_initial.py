import django.db.models.deletion
from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='PipelineRun',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('name', models.CharField(max_length=200, verbose_name='Nome')),
                ('input_path', models.CharField(max_length=500, verbose_name='Set di Domande')),
                ('output_path', models.CharField(blank=True, max_length=500, verbose_name='File delle Tracce')),
                ('config_json', models.JSONField(default=dict, verbose_name='Configurazione')),
                ('status', models.CharField(choices=[('pending', 'In Attesa'), ('processing', 'In Elaborazione'), ('completed', 'Completato'), ('failed', 'Fallito')], default='pending', max_length=20, verbose_name='Stato')),
                ('created_at', models.DateTimeField(auto_now_add=True, verbose_name='Creato il')),
                ('updated_at', models.DateTimeField(auto_now=True, verbose_name='Aggiornato il')),
                ('total_questions', models.IntegerField(default=0, verbose_name='Domande Totali')),
                ('processed_questions', models.IntegerField(default=0, verbose_name='Domande Processate')),
                ('answered_count', models.IntegerField(default=0, verbose_name='Risposte Prodotte')),
                ('error_counts', models.JSONField(blank=True, default=dict, verbose_name='Tassonomia Errori')),
                ('error_message', models.TextField(blank=True, null=True, verbose_name='Messaggio Errore')),
                ('task_id', models.CharField(blank=True, max_length=255, null=True, verbose_name='Task ID')),
            ],
            options={
                'verbose_name': 'Esecuzione Pipeline',
                'verbose_name_plural': 'Esecuzioni Pipeline',
                'ordering': ['-created_at'],
            },
        ),
        migrations.CreateModel(
            name='TraceRecord',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('position', models.IntegerField(verbose_name='Posizione')),
                ('question_id', models.CharField(max_length=100, verbose_name='ID Domanda')),
                ('template_id', models.CharField(max_length=50, verbose_name='Template')),
                ('error_code', models.CharField(default='none', max_length=40, verbose_name='Codice Errore')),
                ('final_answer', models.CharField(blank=True, max_length=100, null=True, verbose_name='Risposta')),
                ('payload', models.JSONField(default=dict, verbose_name='Traccia Completa')),
                ('run', models.ForeignKey(on_delete=django.db.models.deletion.CASCADE, related_name='traces', to='reasoning.pipelinerun')),
            ],
            options={
                'verbose_name': 'Traccia',
                'verbose_name_plural': 'Tracce',
                'ordering': ['position'],
                'indexes': [models.Index(fields=['run', 'position'], name='reasoning_t_run_id_5c1e2a_idx')],
            },
        ),
    ]
