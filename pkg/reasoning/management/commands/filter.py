import json
import logging
from pathlib import Path

from django.core.management.base import BaseCommand, CommandError

from reasoning.ingest import (
    comparative_steps,
    export_question_set,
    filter_number_answers,
    filter_predicted_type,
    filter_trigram,
    load_drop,
    load_question_set,
)
from reasoning.tasks import load_parser

from ._common import USAGE_ERROR, add_config_argument, command_errors, load_config

logger = logging.getLogger(__name__)


class Command(BaseCommand):
    help = "Applica la cascata di filtri a un file DROP e scrive il set di domande (JSON lines)"

    def add_arguments(self, parser):
        add_config_argument(parser)
        parser.add_argument("--drop", help="File DROP (JSON); default paths.drop_file")
        parser.add_argument("--input", help="Set di domande JSON lines già filtrato")
        parser.add_argument("--output", help="File JSON lines di uscita")
        parser.add_argument("--number-only", action="store_true", help="Solo risposte numeriche")
        parser.add_argument("--comparative", action="store_true", help="Solo domande con JJR/RBR")
        parser.add_argument("--trigram", action="store_true", help="Solo trigrammi di sottrazione")
        parser.add_argument(
            "--predicted-types",
            help="JSON {question_id: tipo} prodotto da un classificatore esterno",
        )
        parser.add_argument(
            "--allowed-type", action="append", dest="allowed_types",
            help="Tipo ammesso con --predicted-types (default addition_subtraction)",
        )

    def handle(self, *args, **options):
        config = load_config(options, **{"paths.drop_file": options["drop"]})

        with command_errors():
            if options["input"]:
                qs = load_question_set(options["input"])
            else:
                config.require_paths("drop_file")
                qs = load_drop(config.paths.drop_file)

            steps = [("input", len(qs))]
            if options["number_only"]:
                qs = filter_number_answers(qs)
                steps.append(("number_answer", len(qs)))
            if options["comparative"]:
                with_comparative, qs = comparative_steps(qs, load_parser(config))
                steps.append(("comparative", len(with_comparative)))
                steps.append(("comparative_not_after_or", len(qs)))
            if options["predicted_types"]:
                path = Path(options["predicted_types"])
                if not path.exists():
                    raise CommandError(f"file dei tipi predetti non trovato: {path}",
                                       returncode=USAGE_ERROR)
                predictions = json.loads(path.read_text(encoding="utf-8"))
                qs = filter_predicted_type(
                    qs, predictions, options["allowed_types"] or ("addition_subtraction",)
                )
                steps.append(("predicted_type", len(qs)))
            if options["trigram"]:
                qs = filter_trigram(qs)
                steps.append(("trigram", len(qs)))

            output = Path(options["output"] or Path(config.paths.output_dir) / "questions.jsonl")
            output.parent.mkdir(parents=True, exist_ok=True)
            export_question_set(qs, output)

        summary = {"steps": [{"filter": name, "count": n} for name, n in steps],
                   "provenance": list(qs.provenance)}
        summary_path = output.with_suffix(".summary.json")
        summary_path.write_text(json.dumps(summary, indent=2), encoding="utf-8")

        previous = None
        for name, n in steps:
            delta = "" if previous is None else f" (-{previous - n})"
            self.stdout.write(f"{name:<26} {n}{delta}")
            previous = n
        self.stdout.write(self.style.SUCCESS(f"{len(qs)} domande scritte in {output}"))
