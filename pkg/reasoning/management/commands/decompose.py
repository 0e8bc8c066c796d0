from pathlib import Path

from django.core.management.base import BaseCommand

from reasoning.tasks import execute_pipeline

from ._common import add_config_argument, command_errors, load_config


class Command(BaseCommand):
    help = "Predice i puntatori e riscrive ogni domanda in due sotto-domande (tracce JSON lines)"

    def add_arguments(self, parser):
        add_config_argument(parser)
        parser.add_argument("--input", required=True, help="Set di domande JSON lines")
        parser.add_argument("--output", help="File delle tracce di decomposizione")

    def handle(self, *args, **options):
        config = load_config(options)
        output = Path(options["output"] or Path(config.paths.output_dir) / "decompositions.jsonl")

        with command_errors():
            result = execute_pipeline(config, options["input"], output, with_reader=False)

        for code, count in result.summary()["errors"].items():
            if count:
                self.stdout.write(f"{code:<24} {count}")
        self.stdout.write(self.style.SUCCESS(f"{len(result.traces)} tracce scritte in {output}"))
