import dataclasses
import logging
from pathlib import Path

import numpy as np
from django.core.management.base import BaseCommand, CommandError

from reasoning.evaluation import (
    aggregate_reports,
    entity_overlap_metrics,
    pointer_metrics,
    pointer_spans,
    write_report,
)
from reasoning.exceptions import AlignmentError, InvalidPointersError, OverLengthError
from reasoning.ingest import load_pointer_annotations
from reasoning.pointer import LearnedPointerModel, save_head
from reasoning.tasks import build_encoder, head_path
from reasoning.training import train_pointer_head

from ._common import USAGE_ERROR, add_config_argument, command_errors, load_config

logger = logging.getLogger(__name__)

# predizione mancata: nessun indice coincide con il gold
MISSING = (-1, -1, -1, -1)


def split_annotations(annotations, dev_fraction: float):
    """Split fisso (indipendente dal seed) tra addestramento e valutazione."""
    order = np.random.default_rng(0).permutation(len(annotations))
    n_dev = int(round(dev_fraction * len(annotations)))
    dev = [annotations[i] for i in sorted(order[:n_dev])]
    train = [annotations[i] for i in sorted(order[n_dev:])]
    return train, dev


class Command(BaseCommand):
    help = "Addestra la testa a 4 puntatori, un file di pesi per seed, e valuta sullo split tenuto da parte"

    def add_arguments(self, parser):
        add_config_argument(parser)
        parser.add_argument("--annotations", help="File di annotazioni delimitate da '#'")
        parser.add_argument("--seeds", nargs="+", type=int, help="Seed (default da configurazione)")
        parser.add_argument("--epochs", type=int)
        parser.add_argument("--dev-fraction", type=float)

    def handle(self, *args, **options):
        config = load_config(options, **{
            "paths.annotations": options["annotations"],
            "seeds": options["seeds"],
            "train.epochs": options["epochs"],
            "train.dev_fraction": options["dev_fraction"],
        })
        if not config.seeds:
            raise CommandError("nessun seed configurato", returncode=USAGE_ERROR)

        with command_errors():
            config.require_paths("annotations")
            annotations = load_pointer_annotations(config.paths.annotations)
            train, dev = split_annotations(annotations, config.train.dev_fraction)
            if not dev:
                logger.warning("Split di valutazione vuoto: valuto sui dati di addestramento")
                dev = train
            self.stdout.write(f"{len(train)} annotazioni di addestramento, {len(dev)} di valutazione")

            pointer_reports, overlap_reports = [], []
            for seed in config.seeds:
                train_config = dataclasses.replace(config.train, seed=seed)
                encoder = build_encoder(config)
                head = train_pointer_head(train, encoder, train_config)

                path = head_path(config, seed)
                if head.metadata["finetuned_encoder"] and hasattr(encoder, "save"):
                    encoder_dir = path.with_name(f"{path.stem}_encoder")
                    encoder.save(encoder_dir)
                    head.metadata["encoder_dir"] = str(encoder_dir)
                saved = save_head(head, path)
                self.stdout.write(f"seed {seed}: pesi in {saved}")

                model = LearnedPointerModel(encoder, head)
                preds = []
                for ann in dev:
                    try:
                        preds.append(model.predict(ann.question_text).indices)
                    except (InvalidPointersError, AlignmentError, OverLengthError) as exc:
                        logger.warning("Predizione mancata per %r: %s", ann.question_text, exc)
                        preds.append(MISSING)
                golds = [ann.pointers for ann in dev]
                pointer_reports.append(pointer_metrics(preds, golds))
                overlap_reports.append(entity_overlap_metrics(
                    [pointer_spans(p) if p != MISSING else (set(), set()) for p in preds],
                    [pointer_spans(g) for g in golds],
                ))

            pointer_report = aggregate_reports(pointer_reports)
            overlap_report = aggregate_reports(overlap_reports)
            reports = Path(config.paths.reports_dir)
            write_report(pointer_report, reports / "pointer_report.json", reports / "pointer_report.csv")
            write_report(overlap_report, reports / "overlap_report.json", reports / "overlap_report.csv")

        r = pointer_report
        self.stdout.write(
            f"p1 {r.p1}  p2 {r.p2}  p3 {r.p3}  p4 {r.p4}  all {r.all}  ({r.seeds} seed)"
        )
        self.stdout.write(self.style.SUCCESS(
            f"entity1 F1 {overlap_report.entity1.f1}  entity2 F1 {overlap_report.entity2.f1}"
        ))
