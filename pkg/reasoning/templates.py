"""
Template di ragionamento: ogni tipo di ragionamento ha un solo template,
che sa come decomporre la domanda e come combinare le risposte parziali.
Viene fornito il template di sottrazione, con traccia completa di ogni fase.
"""
from __future__ import annotations

import enum
import logging
import threading
import time
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from decimal import Decimal
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from tqdm import tqdm

from .decomposer import Decomposition, QuestionChunks, generate_subquestions
from .exceptions import (
    AlignmentError,
    ConfigurationError,
    InvalidDecompositionError,
    InvalidPointersError,
    OverLengthError,
    ReaderError,
    TransportError,
)
from .ingest import Passage, Question, QuestionSet, TRIGRAM_PREFIXES
from .pointer import PointerPrediction
from .readers import PartialAnswer
from .words import tokenize_words

logger = logging.getLogger(__name__)

UNSUPPORTED = "unsupported"


class ErrorCode(str, enum.Enum):
    NONE = "none"
    INVALID_POINTERS = "invalid_pointers"
    INVALID_DECOMPOSITION = "invalid_decomposition"
    OVER_LENGTH = "over_length"
    MISSING_OPERAND = "missing_operand"
    UNSUPPORTED = "unsupported"


def subtract_op(a: Decimal, b: Decimal) -> Decimal:
    return abs(a - b)


def format_answer(value: Decimal) -> str:
    """Decimale senza zeri finali: 3.0 -> "3", 3.50 -> "3.5"."""
    text = format(value.normalize(), "f")
    return "0" if text in ("-0", "") else text


@dataclass(frozen=True)
class ReasoningTemplate:
    id: str
    operation: str
    arity: int
    decompose: Callable[[str, PointerPrediction, object], Decomposition]
    combine: Callable[[Sequence[Decimal]], Decimal]

    def assemble(self, operands: Sequence[Decimal]) -> Decimal:
        if len(operands) != self.arity:
            raise ValueError(f"{self.id}: attesi {self.arity} operandi, ricevuti {len(operands)}")
        return self.combine(operands)


SUBTRACTION = ReasoningTemplate(
    id="subtraction",
    operation="absolute_difference",
    arity=2,
    decompose=generate_subquestions,
    combine=lambda ops: subtract_op(ops[0], ops[1]),
)


class TemplateRegistry:
    """Un template per tipo di ragionamento: id unici."""

    def __init__(self, templates: Iterable[ReasoningTemplate] = ()):
        self._templates: Dict[str, ReasoningTemplate] = {}
        for t in templates:
            self.register(t)

    def register(self, template: ReasoningTemplate) -> None:
        if template.id in self._templates or template.id == UNSUPPORTED:
            raise ConfigurationError(f"template già registrato: {template.id}")
        self._templates[template.id] = template

    def get(self, template_id: str) -> ReasoningTemplate:
        try:
            return self._templates[template_id]
        except KeyError:
            raise ConfigurationError(f"template sconosciuto: {template_id}") from None

    def __contains__(self, template_id: str) -> bool:
        return template_id in self._templates

    def ids(self) -> List[str]:
        return list(self._templates)


def default_registry() -> TemplateRegistry:
    return TemplateRegistry([SUBTRACTION])


class TrigramSelector:
    """
    Selettore provvisorio a trigrammi iniziali (il classificatore del tipo di
    ragionamento non è implementato). Prefisso sconosciuto -> "unsupported".
    """

    def __init__(self, table: Optional[Mapping[Tuple[str, str, str], str]] = None):
        self.table = dict(table or {prefix: SUBTRACTION.id for prefix in TRIGRAM_PREFIXES})

    def __call__(self, question: str) -> str:
        head = tuple(w.lower() for w in tokenize_words(question.strip())[:3])
        return self.table.get(head, UNSUPPORTED)


def select_template(question: str, registry: Optional[TemplateRegistry] = None) -> str:
    registry = registry or default_registry()
    if not registry.ids():
        raise ConfigurationError("registro dei template vuoto")
    template_id = TrigramSelector()(question)
    return template_id if template_id in registry else UNSUPPORTED


@dataclass
class TemplateTrace:
    question_id: str
    question: str
    template_id: str
    pointers: Optional[PointerPrediction] = None
    decomposition: Optional[Decomposition] = None
    partial_answers: List[PartialAnswer] = field(default_factory=list)
    operation: Optional[str] = None
    final_answer: Optional[str] = None
    timings: Dict[str, float] = field(default_factory=dict)
    error_code: ErrorCode = ErrorCode.NONE
    error_message: str = ""

    @property
    def ok(self) -> bool:
        return self.error_code is ErrorCode.NONE

    def fail(self, code: ErrorCode, exc: Exception) -> "TemplateTrace":
        self.error_code = code
        self.error_message = str(exc)
        logger.debug("Domanda %s fallita (%s): %s", self.question_id, code.value, exc)
        return self

    def to_dict(self) -> Dict:
        return {
            "question_id": self.question_id,
            "question": self.question,
            "template_id": self.template_id,
            "pointers": (
                {"indices": list(self.pointers.indices), "joint_prob": self.pointers.joint_prob}
                if self.pointers else None
            ),
            "decomposition": self.decomposition.to_dict() if self.decomposition else None,
            "partial_answers": [pa.to_dict() for pa in self.partial_answers],
            "operation": self.operation,
            "final_answer": self.final_answer,
            "timings": self.timings,
            "error_code": self.error_code.value,
            "error_message": self.error_message,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "TemplateTrace":
        pointers = None
        if data.get("pointers"):
            pointers = PointerPrediction(tuple(data["pointers"]["indices"]),
                                         data["pointers"]["joint_prob"])
        decomposition = None
        if data.get("decomposition"):
            d = data["decomposition"]
            chunks = None
            if d.get("chunks") and pointers:
                chunks = QuestionChunks(
                    **{k: tuple(v) for k, v in d["chunks"].items()},
                    pointers=pointers.indices,
                )
            decomposition = Decomposition(
                d["q1"], d["q2"], chunks,
                tuple(tuple(pair) for pair in d.get("removed_words", ())),
            )
        partials = [
            PartialAnswer(
                pa["span"],
                tuple(pa["char_range"]) if pa.get("char_range") else None,
                pa["confidence"],
                Decimal(pa["number"]) if pa.get("number") is not None else None,
            )
            for pa in data.get("partial_answers", ())
        ]
        return cls(
            question_id=data["question_id"],
            question=data.get("question", ""),
            template_id=data["template_id"],
            pointers=pointers,
            decomposition=decomposition,
            partial_answers=partials,
            operation=data.get("operation"),
            final_answer=data.get("final_answer"),
            timings=dict(data.get("timings", {})),
            error_code=ErrorCode(data.get("error_code", "none")),
            error_message=data.get("error_message", ""),
        )


class _Stopwatch:
    def __init__(self, timings: Dict[str, float], stage: str):
        self.timings, self.stage = timings, stage

    def __enter__(self):
        self.start = time.perf_counter()

    def __exit__(self, *exc):
        self.timings[self.stage] = time.perf_counter() - self.start
        return False


def _answer_and_assemble(trace: TemplateTrace, subquestions: Sequence[str], passage: Passage,
                         template: ReasoningTemplate, reader) -> TemplateTrace:
    with _Stopwatch(trace.timings, "reader"):
        for sub in subquestions:
            try:
                partial = reader.answer(sub, passage.text)
            except OverLengthError as exc:
                return trace.fail(ErrorCode.OVER_LENGTH, exc)
            except TransportError:
                raise
            except ReaderError as exc:
                return trace.fail(ErrorCode.MISSING_OPERAND, exc)
            trace.partial_answers.append(partial)

    missing = [pa.span_text for pa in trace.partial_answers if pa.number is None]
    if missing:
        return trace.fail(ErrorCode.MISSING_OPERAND, ValueError(f"nessun numero in {missing}"))

    with _Stopwatch(trace.timings, "assemble"):
        trace.operation = template.operation
        value = template.assemble([pa.number for pa in trace.partial_answers])
        trace.final_answer = format_answer(value)
    return trace


def decompose_question(question: Question, template: ReasoningTemplate,
                       pointer_model, parser) -> TemplateTrace:
    """Solo le fasi puntatori e riscrittura."""
    trace = TemplateTrace(question.id, question.text, template.id)

    with _Stopwatch(trace.timings, "pointers"):
        try:
            trace.pointers = pointer_model.predict(question.text)
        except OverLengthError as exc:
            return trace.fail(ErrorCode.OVER_LENGTH, exc)
        except (InvalidPointersError, AlignmentError) as exc:
            return trace.fail(ErrorCode.INVALID_POINTERS, exc)

    with _Stopwatch(trace.timings, "decompose"):
        try:
            parse = parser.parse(tokenize_words(question.text))
            trace.decomposition = template.decompose(question.text, trace.pointers, parse)
        except (InvalidDecompositionError, KeyError, IndexError) as exc:
            return trace.fail(ErrorCode.INVALID_DECOMPOSITION, exc)
    return trace


def apply_template(question: Question, passage: Passage, template: ReasoningTemplate,
                   pointer_model, parser, reader) -> TemplateTrace:
    """puntatori -> sotto-domande -> reader -> primo numero -> operazione."""
    trace = decompose_question(question, template, pointer_model, parser)
    if not trace.ok:
        return trace
    return _answer_and_assemble(
        trace, trace.decomposition.subquestions, passage, template, reader
    )


def answer_from_subquestions(question: Question, passage: Passage, template: ReasoningTemplate,
                             subquestions: Sequence[str], reader) -> TemplateTrace:
    """Variante con decomposizione gold: niente puntatori né riscrittura."""
    trace = TemplateTrace(question.id, question.text, template.id)
    q1, q2 = subquestions
    trace.decomposition = Decomposition(q1, q2, None)
    return _answer_and_assemble(trace, subquestions, passage, template, reader)


class _Serialized:
    """Proxy che serializza le chiamate a un collaboratore non thread-safe."""

    def __init__(self, target, lock: threading.Lock):
        self._target, self._lock = target, lock

    def __getattr__(self, name):
        attr = getattr(self._target, name)
        if not callable(attr):
            return attr

        def locked(*args, **kwargs):
            with self._lock:
                return attr(*args, **kwargs)

        return locked


@dataclass
class PipelineResult:
    traces: List[TemplateTrace]
    taxonomy: Counter

    def summary(self) -> Dict:
        return {
            "total": len(self.traces),
            "answered": self.taxonomy.get(ErrorCode.NONE.value, 0),
            "errors": {code.value: self.taxonomy.get(code.value, 0) for code in ErrorCode},
        }


def run_pipeline(
    qs: QuestionSet,
    pointer_model,
    parser,
    reader,
    *,
    template: str = SUBTRACTION.id,
    registry: Optional[TemplateRegistry] = None,
    parallelism: int = 1,
    gold_decompositions: Optional[Mapping[str, Tuple[str, str]]] = None,
    progress: Optional[Callable[[int, int], None]] = None,
) -> PipelineResult:
    """
    Una traccia per domanda, nell'ordine di ingresso. `template="auto"` usa
    il selettore a trigrammi; con `gold_decompositions` salta puntatori e
    riscrittura per le domande presenti. Senza `reader` si ferma dopo la
    riscrittura (tracce di sola decomposizione).
    """
    registry = registry or default_registry()
    if template != "auto":
        registry.get(template)

    collaborators = []
    for obj in (pointer_model, parser, reader):
        if obj is not None and parallelism > 1 and not getattr(obj, "concurrent_safe", False):
            obj = _Serialized(obj, threading.Lock())
        collaborators.append(obj)
    pointer_model, parser, reader = collaborators

    def one(question: Question) -> TemplateTrace:
        template_id = select_template(question.text, registry) if template == "auto" else template
        if template_id == UNSUPPORTED:
            trace = TemplateTrace(question.id, question.text, UNSUPPORTED)
            return trace.fail(ErrorCode.UNSUPPORTED, ValueError("nessun template per la domanda"))
        chosen = registry.get(template_id)
        if reader is None:
            return decompose_question(question, chosen, pointer_model, parser)
        passage = qs.passage_of(question)
        if gold_decompositions and question.id in gold_decompositions:
            return answer_from_subquestions(
                question, passage, chosen, gold_decompositions[question.id], reader
            )
        return apply_template(question, passage, chosen, pointer_model, parser, reader)

    traces: List[TemplateTrace] = []
    total = len(qs)
    with ThreadPoolExecutor(max_workers=parallelism) as pool:
        for trace in tqdm(pool.map(one, qs.items), total=total, desc="pipeline", disable=None):
            traces.append(trace)
            if progress:
                progress(len(traces), total)

    taxonomy = Counter(t.error_code.value for t in traces)
    logger.info(
        "Pipeline: %d domande, %d risposte, errori %s",
        total, taxonomy.get(ErrorCode.NONE.value, 0),
        {k: v for k, v in taxonomy.items() if k != ErrorCode.NONE.value},
    )
    return PipelineResult(traces, taxonomy)
