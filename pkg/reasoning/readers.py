"""
Reader single-hop intercambiabili: dato (sotto-domanda, passaggio)
restituiscono uno span estratto dal passaggio. Dallo span si ricava il
primo numero, operando del template.
"""
from __future__ import annotations

import json
import logging
import re
import threading
from abc import ABC, abstractmethod
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from pathlib import Path
from typing import Mapping, Optional, Tuple

import requests
from requests.adapters import HTTPAdapter
from urllib3.util.retry import Retry

from .exceptions import ConfigurationError, OverLengthError, ReaderError, TransportError
from .words import tokenize_words

logger = logging.getLogger(__name__)

# segno opzionale solo a inizio testo o dopo spazio/parentesi, valuta opzionale,
# cifre con eventuali gruppi di migliaia, parte decimale opzionale
_NUMBER_RE = re.compile(
    r"(?:(?<![^\s(\[])(?P<sign>[-+−]))?"
    r"[$€£¥]?"
    r"(?P<int>\d{1,3}(?:,\d{3})+(?!\d)|\d+)"
    r"(?P<frac>\.\d+)?"
)


def extract_first_number(span_text: str) -> Optional[Decimal]:
    """Valore del numero più a sinistra nello span, None se non ce ne sono."""
    m = _NUMBER_RE.search(span_text)
    if m is None:
        return None
    literal = m.group("int").replace(",", "") + (m.group("frac") or "")
    try:
        value = Decimal(literal)
    except InvalidOperation:
        return None
    return -value if m.group("sign") in ("-", "−") else value


@dataclass(frozen=True)
class PartialAnswer:
    span_text: str
    char_range: Optional[Tuple[int, int]]
    confidence: float
    number: Optional[Decimal] = None

    @classmethod
    def from_span(cls, passage: str, start: Optional[int], end: Optional[int],
                  span_text: str, confidence: float) -> "PartialAnswer":
        if start is not None and end is not None:
            if passage[start:end] != span_text:
                raise ReaderError(f"offset [{start}, {end}) non corrispondono allo span {span_text!r}")
            char_range = (start, end)
        else:
            start = passage.find(span_text)
            if not span_text or start < 0:
                raise ReaderError(f"span {span_text!r} assente dal passaggio")
            char_range = (start, start + len(span_text))
        return cls(span_text, char_range, float(confidence), extract_first_number(span_text))

    def to_dict(self):
        return {
            "span": self.span_text,
            "char_range": list(self.char_range) if self.char_range else None,
            "confidence": self.confidence,
            "number": str(self.number) if self.number is not None else None,
        }


class ReaderBackend(ABC):
    """Reader estrattivo a span singolo."""

    max_length: int
    concurrent_safe: bool = False

    @abstractmethod
    def answer(self, question: str, passage: str) -> PartialAnswer:
        ...

    def __str__(self) -> str:
        return f"{self.__class__.__name__}(max_length={self.max_length})"


class MockReader(ReaderBackend):
    """
    Span piantati per sotto-domanda; senza voce restituisce l'intero
    passaggio con confidenza 1. La lunghezza è contata in parole.
    """

    concurrent_safe = True

    def __init__(self, spans: Optional[Mapping[str, str]] = None, max_length: int = 512):
        self.spans = dict(spans or {})
        self.max_length = max_length

    @classmethod
    def from_file(cls, path, max_length: int = 512) -> "MockReader":
        path = Path(path)
        if not path.exists():
            raise ConfigurationError(f"Tabella degli span non trovata: {path}")
        return cls(json.loads(path.read_text(encoding="utf-8")), max_length)

    def answer(self, question: str, passage: str) -> PartialAnswer:
        length = len(tokenize_words(question)) + len(tokenize_words(passage))
        if length > self.max_length:
            raise OverLengthError(length, self.max_length)
        span = self.spans.get(question, passage)
        return PartialAnswer.from_span(passage, None, None, span, 1.0)


class TransformersReader(ReaderBackend):
    """Modello estrattivo pre-addestrato (fine-tuned su SQuAD) in-process."""

    def __init__(self, model_name: str, max_length: int = 512, device: str = "cpu"):
        from transformers import AutoTokenizer, pipeline

        try:
            self.tokenizer = AutoTokenizer.from_pretrained(model_name, use_fast=True)
            self.pipe = pipeline(
                "question-answering",
                model=model_name,
                tokenizer=self.tokenizer,
                device=0 if device == "cuda" else -1,
            )
        except OSError as exc:
            raise ConfigurationError(f"Modello del reader non disponibile: {model_name}") from exc
        self.max_length = min(max_length, self.tokenizer.model_max_length)
        self._lock = threading.Lock()

    def answer(self, question: str, passage: str) -> PartialAnswer:
        length = len(self.tokenizer(question, passage, truncation=False)["input_ids"])
        if length > self.max_length:
            raise OverLengthError(length, self.max_length)
        with self._lock:
            out = self.pipe(question=question, context=passage, max_seq_len=self.max_length)
        return PartialAnswer.from_span(passage, out["start"], out["end"], out["answer"], out["score"])


class HttpReader(ReaderBackend):
    """
    Client per un servizio QA remoto.
    POST JSON {question, passage} -> {span, start, end, score}.
    """

    concurrent_safe = True

    def __init__(self, endpoint: str, max_length: int = 512, timeout: float = 30.0,
                 retries: int = 3, session: Optional[requests.Session] = None):
        self.endpoint = endpoint
        self.max_length = max_length
        self.timeout = timeout
        self.session = session or requests.Session()
        retry = Retry(
            total=retries,
            backoff_factor=0.5,
            status_forcelist=(429, 500, 502, 503, 504),
            allowed_methods=frozenset({"POST"}),
        )
        self.session.mount("http://", HTTPAdapter(max_retries=retry))
        self.session.mount("https://", HTTPAdapter(max_retries=retry))

    def answer(self, question: str, passage: str) -> PartialAnswer:
        length = len(tokenize_words(question)) + len(tokenize_words(passage))
        if length > self.max_length:
            raise OverLengthError(length, self.max_length)
        try:
            resp = self.session.post(
                self.endpoint,
                json={"question": question, "passage": passage},
                timeout=self.timeout,
            )
            resp.raise_for_status()
            result = resp.json()
        except (requests.RequestException, ValueError) as exc:
            logger.error("Reader remoto %s non raggiungibile: %s", self.endpoint, exc)
            raise TransportError(f"{self.endpoint}: {exc}") from exc
        if not isinstance(result, dict):
            raise ReaderError(f"{self.endpoint}: risposta non valida ({type(result).__name__})")
        if result.get("error") == "over_length":
            raise OverLengthError(length, self.max_length)
        return PartialAnswer.from_span(
            passage, result.get("start"), result.get("end"), result.get("span", ""),
            result.get("score", 0.0),
        )
