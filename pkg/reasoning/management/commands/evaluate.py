import json
import logging
from pathlib import Path

import jsonlines
from django.core.management.base import BaseCommand

from reasoning.evaluation import (
    MetricCell,
    SpacyVectors,
    StaticVectors,
    accuracy_summary,
    aggregate_reports,
    aggregate_similarity,
    entity_overlap_metrics,
    exact_match_accuracy,
    pointer_metrics_seeds,
    pointer_spans,
    similarity_report,
    write_report,
)
from reasoning.exceptions import ConfigurationError
from reasoning.ingest import (
    load_gold_decompositions,
    load_pointer_annotations,
    load_question_set,
    load_relabel_overlay,
)
from reasoning.tasks import load_parser
from reasoning.templates import TemplateTrace
from reasoning.words import detokenize, tokenize_words

from ._common import add_config_argument, command_errors, load_config

logger = logging.getLogger(__name__)

MISSING = (-1, -1, -1, -1)


def read_traces(path):
    with jsonlines.open(path) as reader:
        return [TemplateTrace.from_dict(row) for row in reader]


class Command(BaseCommand):
    help = "Calcola accuratezza exact match e, se disponibili i gold, metriche di puntatori e decomposizioni"

    def add_arguments(self, parser):
        add_config_argument(parser)
        parser.add_argument("--traces", nargs="+", required=True,
                            help="File di tracce JSON lines (uno per seed)")
        parser.add_argument("--input", required=True, help="Set di domande con le risposte gold")
        parser.add_argument("--annotations", help="Puntatori gold per le metriche dei puntatori")
        parser.add_argument("--gold-decompositions", help="Sotto-domande gold (JSON lines)")
        parser.add_argument("--relabel", help="Correzioni delle etichette (lista JSON)")
        parser.add_argument("--vectors", help="Vettori statici JSON {parola: vettore}; default spaCy")
        parser.add_argument("--name", default="eval", help="Prefisso dei file di report")

    def handle(self, *args, **options):
        config = load_config(options, **{
            "paths.annotations": options["annotations"],
            "paths.gold_decompositions": options["gold_decompositions"],
            "paths.relabel_overlay": options["relabel"],
        })
        reports = Path(config.paths.reports_dir)
        name = options["name"]

        with command_errors():
            qs = load_question_set(options["input"])
            golds = {q.id: q.gold_answer.number for q in qs}
            overlay = None
            if config.paths.relabel_overlay:
                config.require_paths("relabel_overlay")
                overlay = load_relabel_overlay(config.paths.relabel_overlay)
            runs = [read_traces(path) for path in options["traces"]]

            accuracies = []
            for k, traces in enumerate(runs):
                report = exact_match_accuracy(traces, golds, overlay)
                accuracies.append(report)
                suffix = f"_{k}" if len(runs) > 1 else ""
                write_report(report, reports / f"{name}_accuracy{suffix}.json",
                             reports / f"{name}_accuracy{suffix}.csv")
                self.stdout.write(
                    f"[{k}] accuratezza {report.accuracy:.1f} ({report.correct}/{report.total})"
                    + (f", senza rietichettate {report.relabeled_accuracy:.1f},"
                       f" predizioni uguali alle etichette scartate {report.mislabeled_match}"
                       if overlay is not None else "")
                )
            if len(runs) > 1:
                summary = accuracy_summary(accuracies)
                (reports / f"{name}_accuracy_summary.json").write_text(
                    json.dumps(summary, indent=2), encoding="utf-8"
                )
                self.stdout.write(f"accuratezza media {MetricCell.of([r.accuracy for r in accuracies])}")

            if config.paths.annotations:
                config.require_paths("annotations")
                self._pointer_reports(runs, load_pointer_annotations(config.paths.annotations),
                                      reports, name)

            if config.paths.gold_decompositions:
                config.require_paths("gold_decompositions")
                gold_decomp = load_gold_decompositions(config.paths.gold_decompositions)
                vectors = self._vectors(config, options["vectors"])
                sims = []
                for k, traces in enumerate(runs):
                    pairs = [
                        (gold_decomp[t.question_id], t.decomposition.subquestions)
                        for t in traces
                        if t.question_id in gold_decomp and t.decomposition is not None
                    ]
                    sim = similarity_report(
                        [(g[0], d[0]) for g, d in pairs], [(g[1], d[1]) for g, d in pairs], vectors
                    )
                    sims.append(sim)
                    suffix = f"_{k}" if len(runs) > 1 else ""
                    write_report(sim, reports / f"{name}_similarity{suffix}.json",
                                 reports / f"{name}_similarity{suffix}.csv")
                    self.stdout.write(
                        f"[{k}] similarità su {sim.q1.pairs} coppie (non misurabili {sim.q1.undefined})"
                    )
                if len(runs) > 1:
                    write_report(aggregate_similarity(sims),
                                 reports / f"{name}_similarity_summary.json",
                                 reports / f"{name}_similarity_summary.csv")

        self.stdout.write(self.style.SUCCESS(f"Report scritti in {reports}"))

    def _vectors(self, config, path):
        if path:
            return StaticVectors.from_file(path)
        if config.parser.adapter != "spacy":
            raise ConfigurationError("servono --vectors o l'adattatore spacy per la similarità")
        return SpacyVectors(load_parser(config).vocab)

    def _pointer_reports(self, runs, annotations, reports: Path, name: str):
        by_text = {detokenize(tokenize_words(a.question_text)): a.pointers for a in annotations}
        keyed = [{detokenize(tokenize_words(t.question)): t for t in traces} for traces in runs]
        # le domande annotate della prima run fissano l'insieme di confronto
        texts = [text for text in keyed[0] if text in by_text]
        golds = [tuple(by_text[text]) for text in texts]
        pred_sets = [[_indices(traces.get(text)) for text in texts] for traces in keyed]

        pointer_report = pointer_metrics_seeds(pred_sets, golds)
        overlap_report = aggregate_reports([
            entity_overlap_metrics(
                [pointer_spans(p) if p != MISSING else (set(), set()) for p in preds],
                [pointer_spans(g) for g in golds],
            )
            for preds in pred_sets
        ])
        write_report(pointer_report, reports / f"{name}_pointers.json", reports / f"{name}_pointers.csv")
        write_report(overlap_report, reports / f"{name}_overlap.json", reports / f"{name}_overlap.csv")
        self.stdout.write(f"puntatori: all {pointer_report.all} su {pointer_report.items} domande")


def _indices(trace):
    if trace is None or trace.pointers is None:
        return MISSING
    return tuple(trace.pointers.indices)
