from django.apps import AppConfig

class ReasoningConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "reasoning"
    verbose_name = "Template di ragionamento"
