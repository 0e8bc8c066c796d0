from django.db import migrations, models


class Migration(migrations.Migration):

    dependencies = [
        ('reasoning', '0001_initial'),
    ]

    operations = [
        migrations.AddField(
            model_name='pipelinerun',
            name='error_type',
            field=models.CharField(blank=True, default='', max_length=100, verbose_name='Tipo Errore'),
        ),
    ]
