# reasoning/tasks.py
from celery import shared_task, states
from celery.exceptions import Ignore

from .models import PipelineRun, TraceRecord

import jsonlines
from pathlib import Path
from functools import lru_cache
import logging
from typing import List, Optional, Tuple

from .config import PipelineConfig
from .encoders import ContextualEncoder, MockEncoder, TransformerEncoder
from .exceptions import ConfigurationError
from .ingest import load_gold_decompositions, load_pointer_annotations, load_question_set
from .parsing import ScriptedAnalyzer, SpacyAnalyzer
from .pointer import AnnotatedPointerModel, LearnedPointerModel, load_head
from .readers import HttpReader, MockReader, TransformersReader
from .templates import ErrorCode, PipelineResult, run_pipeline

logger = logging.getLogger(__name__)

TRACE_BATCH_SIZE = 512


# ---- Collaboratori: caricati una sola volta per processo ----


def _make_encoder(backend: str, model: str, max_length: int, device: str) -> ContextualEncoder:
    if backend == "mock":
        return MockEncoder(max_length=max_length)
    if backend == "transformer":
        return TransformerEncoder(model, max_length=max_length, device=device)
    raise ConfigurationError(f"encoder sconosciuto: {backend}")


@lru_cache(maxsize=4)
def _load_encoder(backend: str, model: str, max_length: int, device: str) -> ContextualEncoder:
    return _make_encoder(backend, model, max_length, device)


def build_encoder(config: PipelineConfig, model: Optional[str] = None) -> ContextualEncoder:
    """Istanza nuova a ogni chiamata, fuori dalla cache."""
    enc = config.encoder
    return _make_encoder(enc.backend, model or enc.model, enc.max_length, config.device)


def load_encoder(config: PipelineConfig, model: Optional[str] = None) -> ContextualEncoder:
    enc = config.encoder
    return _load_encoder(enc.backend, model or enc.model, enc.max_length, config.device)


@lru_cache(maxsize=4)
def _load_parser(adapter: str, model: str, parses_file: Optional[str]):
    if adapter == "spacy":
        return SpacyAnalyzer(model)
    if adapter == "scripted":
        if not parses_file or not Path(parses_file).exists():
            raise ConfigurationError(f"file dei parse mancante: {parses_file}")
        with jsonlines.open(parses_file) as reader:
            return ScriptedAnalyzer.from_records(list(reader))
    raise ConfigurationError(f"adattatore di parsing sconosciuto: {adapter}")


def load_parser(config: PipelineConfig):
    p = config.parser
    return _load_parser(p.adapter, p.model, p.parses_file)


@lru_cache(maxsize=4)
def _load_reader(backend, model, endpoint, max_length, timeout, retries, spans_file, device):
    if backend == "mock":
        if spans_file:
            return MockReader.from_file(spans_file, max_length)
        return MockReader(max_length=max_length)
    if backend == "local":
        return TransformersReader(model, max_length=max_length, device=device)
    if backend == "http":
        return HttpReader(endpoint, max_length=max_length, timeout=timeout, retries=retries)
    raise ConfigurationError(f"reader sconosciuto: {backend}")


def load_reader(config: PipelineConfig):
    r = config.reader
    return _load_reader(
        r.backend, r.model, r.endpoint, r.max_length, r.timeout, r.retries,
        r.spans_file, config.device,
    )


def head_path(config: PipelineConfig, seed: Optional[int] = None) -> Path:
    if config.pointer.weights:
        return Path(config.pointer.weights)
    seed = config.seeds[0] if seed is None else seed
    return Path(config.paths.weights_dir) / f"pointer_seed{seed}.npz"


def load_pointer_model(config: PipelineConfig, seed: Optional[int] = None):
    if config.pointer.source == "annotated":
        config.require_paths("annotations")
        return AnnotatedPointerModel(load_pointer_annotations(config.paths.annotations))
    if config.pointer.source != "learned":
        raise ConfigurationError(f"sorgente dei puntatori sconosciuta: {config.pointer.source}")

    head = load_head(head_path(config, seed))
    # encoder fine-tuned salvato accanto alla testa
    encoder_dir = head.metadata.get("encoder_dir")
    if encoder_dir and config.encoder.backend == "transformer" and Path(encoder_dir).is_dir():
        encoder = load_encoder(config, model=encoder_dir)
    else:
        encoder = load_encoder(config)
    if head.hidden_size != encoder.hidden_size:
        raise ConfigurationError(
            f"pesi per h={head.hidden_size}, encoder con h={encoder.hidden_size}"
        )
    return LearnedPointerModel(encoder, head)


def build_collaborators(config: PipelineConfig, with_reader: bool = True) -> Tuple:
    """Tutti i collaboratori, prima di qualsiasi lavoro: errori di configurazione subito."""
    pointer_model = load_pointer_model(config)
    parser = load_parser(config)
    reader = load_reader(config) if with_reader else None
    return pointer_model, parser, reader


def write_traces(result: PipelineResult, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with jsonlines.open(path, mode="w") as writer:
        writer.write_all(t.to_dict() for t in result.traces)
    return path


def execute_pipeline(config: PipelineConfig, questions_path, output_path,
                     progress=None, with_reader: bool = True) -> PipelineResult:
    qs = load_question_set(questions_path)
    pointer_model, parser, reader = build_collaborators(config, with_reader)
    gold = None
    if with_reader and config.paths.gold_decompositions:
        config.require_paths("gold_decompositions")
        gold = load_gold_decompositions(config.paths.gold_decompositions)

    result = run_pipeline(
        qs, pointer_model, parser, reader,
        template=config.template,
        parallelism=config.parallelism,
        gold_decompositions=gold,
        progress=progress,
    )
    write_traces(result, output_path)
    return result


@shared_task(bind=True)
def process_pipeline_run(self, run_id: int):
    """
    Esegue il pipeline per un PipelineRun registrato.

    - Carica configurazione e set di domande
    - Esegue il template su ogni domanda (parallelismo da configurazione)
    - Scrive le tracce in JSON lines e le salva a DB in batch
    - Aggiorna progress, tassonomia degli errori e stato
    """
    run = None
    try:
        run = PipelineRun.objects.get(id=run_id)
        run.status = "processing"
        run.processed_questions = 0
        run.answered_count = 0
        run.error_message = ""
        run.error_type = ""
        run.save(
            update_fields=[
                "status",
                "processed_questions",
                "answered_count",
                "error_message",
                "error_type",
                "updated_at",
            ]
        )

        config = PipelineConfig.from_dict(run.config_json)

        def progress(done: int, total: int):
            if run.total_questions != total:
                run.total_questions = total
                run.save(update_fields=["total_questions", "updated_at"])
            if done % 10 == 0 or done == total:
                run.processed_questions = done
                run.save(update_fields=["processed_questions", "updated_at"])
                if not self.request.is_eager:
                    self.update_state(
                        state="PROGRESS",
                        meta={"processed": done, "total": total, "percent": run.progress_percentage},
                    )

        result = execute_pipeline(config, run.input_path, run.output_path, progress=progress)

        batch: List[TraceRecord] = []
        for position, trace in enumerate(result.traces):
            batch.append(
                TraceRecord(
                    run=run,
                    position=position,
                    question_id=trace.question_id,
                    template_id=trace.template_id,
                    error_code=trace.error_code.value,
                    final_answer=trace.final_answer,
                    payload=trace.to_dict(),
                )
            )
            if len(batch) >= TRACE_BATCH_SIZE:
                TraceRecord.objects.bulk_create(batch, batch_size=TRACE_BATCH_SIZE)
                batch = []
        if batch:
            TraceRecord.objects.bulk_create(batch, batch_size=TRACE_BATCH_SIZE)

        summary = result.summary()
        run.status = "completed"
        run.total_questions = summary["total"]
        run.processed_questions = summary["total"]
        run.answered_count = summary["answered"]
        run.error_counts = {k: v for k, v in summary["errors"].items() if k != ErrorCode.NONE.value}
        run.save(
            update_fields=[
                "status",
                "total_questions",
                "processed_questions",
                "answered_count",
                "error_counts",
                "updated_at",
            ]
        )

        return {"status": "completed", **summary}

    except Exception as e:
        logger.exception("Errore durante process_pipeline_run(%s): %s", run_id, e)
        try:
            if run is None:
                run = PipelineRun.objects.get(id=run_id)
            run.status = "failed"
            run.error_message = f"{type(e).__name__}: {e}"
            run.error_type = type(e).__name__
            run.save(update_fields=["status", "error_message", "error_type", "updated_at"])
        except Exception as inner:
            logger.error(
                "Impossibile salvare lo stato di failure per la run %s: %s", run_id, inner
            )

        if not self.request.is_eager:
            self.update_state(state=states.FAILURE, meta={"error": str(e)})
        raise Ignore()
