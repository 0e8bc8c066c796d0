import logging
from pathlib import Path

from django.core.management.base import BaseCommand, CommandError

from reasoning.models import PipelineRun
from reasoning.tasks import build_collaborators, process_pipeline_run

from ._common import add_config_argument, command_errors, exit_code_for_name, load_config

logger = logging.getLogger(__name__)


class Command(BaseCommand):
    help = "Risponde alle domande con il template scelto; esecuzione diretta o in background su Celery"

    def add_arguments(self, parser):
        add_config_argument(parser)
        parser.add_argument("--input", required=True, help="Set di domande JSON lines")
        parser.add_argument("--output", help="File delle tracce")
        parser.add_argument("--name", default="", help="Nome della run")
        parser.add_argument("--template", help="Id del template oppure 'auto' (selettore a trigrammi)")
        parser.add_argument("--pointer-weights", help="File .npz della testa a 4 puntatori")
        parser.add_argument("--reader", choices=("local", "http"), help="Backend del reader")
        parser.add_argument("--parallelism", type=int, help="Domande elaborate in parallelo")
        parser.add_argument(
            "--max-length", type=int,
            help="Limite di token per encoder e reader",
        )
        parser.add_argument(
            "--background", action="store_true",
            help="Accoda la run al worker Celery invece di eseguirla qui",
        )

    def handle(self, *args, **options):
        config = load_config(options, **{
            "template": options["template"],
            "pointer.weights": options["pointer_weights"],
            "reader.backend": options["reader"],
            "parallelism": options["parallelism"],
            "encoder.max_length": options["max_length"],
            "reader.max_length": options["max_length"],
        })
        output = Path(options["output"] or Path(config.paths.output_dir) / "traces.jsonl")

        # pesi, parser e reader mancanti emergono qui, prima di creare la run
        with command_errors():
            if not Path(options["input"]).exists():
                raise FileNotFoundError(f"set di domande non trovato: {options['input']}")
            if not options["background"]:
                build_collaborators(config)

        run = PipelineRun.objects.create(
            name=options["name"] or Path(options["input"]).stem,
            input_path=str(options["input"]),
            output_path=str(output),
            config_json=config.to_dict(),
        )

        if options["background"]:
            async_result = process_pipeline_run.delay(run.id)
            run.task_id = async_result.id
            run.save(update_fields=["task_id", "updated_at"])
            self.stdout.write(self.style.SUCCESS(f"Run {run.id} accodata (task {async_result.id})"))
            return

        process_pipeline_run.apply(args=[run.id])
        run.refresh_from_db()
        if run.status == "failed":
            raise CommandError(
                f"run {run.id} fallita: {run.error_message}",
                returncode=exit_code_for_name(run.error_type),
            )

        self.stdout.write(f"domande {run.total_questions}, risposte {run.answered_count}")
        for code, count in run.error_counts.items():
            if count:
                self.stdout.write(f"{code:<24} {count}")
        self.stdout.write(self.style.SUCCESS(f"Run {run.id}: tracce in {output}"))
