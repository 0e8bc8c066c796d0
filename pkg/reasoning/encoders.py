"""
Encoder contestuali per il pointer model: U = encoder(S) in R^{n x h}.

L'allineamento sub-token -> parola è costruito dagli offset di carattere,
mai confrontando le stringhe dei token ("80-yard" spezzato in tre sub-token
torna sempre alla stessa parola).
"""
from __future__ import annotations

import logging
import re
import zlib
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Iterator, List, Optional, Sequence, Tuple

import numpy as np
import torch

from .exceptions import AlignmentError, ConfigurationError, OverLengthError
from .words import tokenize_words, word_spans

logger = logging.getLogger(__name__)

Span = Tuple[int, int]


@dataclass(frozen=True)
class TokenizedQuestion:
    words: Tuple[str, ...]
    subtokens: Tuple[str, ...]
    # indice di parola per ogni sub-token, None per i token speciali
    alignment: Tuple[Optional[int], ...]
    encoding: Any = field(default=None, compare=False, repr=False)

    @property
    def n(self) -> int:
        return len(self.subtokens)

    def first_subtoken(self, word: int) -> int:
        for k, w in enumerate(self.alignment):
            if w == word:
                return k
        raise AlignmentError(f"la parola {word} ({self.words[word]!r}) non ha sub-token")

    def last_subtoken(self, word: int) -> int:
        for k in range(self.n - 1, -1, -1):
            if self.alignment[k] == word:
                return k
        raise AlignmentError(f"la parola {word} ({self.words[word]!r}) non ha sub-token")


@dataclass(frozen=True)
class EmbeddingMatrix:
    values: np.ndarray

    def __post_init__(self):
        if self.values.ndim != 2 or not np.all(np.isfinite(self.values)):
            raise ConfigurationError("embedding non finiti o non bidimensionali")

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def h(self) -> int:
        return self.values.shape[1]


def align_offsets(words: Sequence[Span], subtokens: Sequence[Optional[Span]]) -> Tuple[Optional[int], ...]:
    """Parola che contiene il primo carattere di ogni sub-token."""
    owner = {}
    for w, (start, end) in enumerate(words):
        for c in range(start, end):
            owner[c] = w
    alignment = []
    for span in subtokens:
        if span is None or span[1] <= span[0]:
            alignment.append(None)
            continue
        alignment.append(owner.get(span[0]))
    return tuple(alignment)


class ContextualEncoder(ABC):
    hidden_size: int
    max_length: int
    concurrent_safe = False

    @abstractmethod
    def tokenize(self, question_text: str) -> TokenizedQuestion:
        ...

    @abstractmethod
    def embed(self, tokenized: TokenizedQuestion) -> torch.Tensor:
        """Tensore (n, h); conserva il grafo se l'encoder è in training."""

    def parameters(self) -> Iterator[torch.nn.Parameter]:
        return iter(())

    def train(self, mode: bool = True) -> None:
        pass

    def encode(self, question_text: str) -> Tuple[TokenizedQuestion, EmbeddingMatrix]:
        if not question_text.strip():
            raise ValueError("domanda vuota")
        tokenized = self.tokenize(question_text)
        with torch.no_grad():
            values = self.embed(tokenized).detach().cpu().numpy().astype(np.float64)
        return tokenized, EmbeddingMatrix(values)

    def _check_length(self, n: int) -> None:
        if n > self.max_length:
            raise OverLengthError(n, self.max_length, "domanda")


class MockEncoder(ContextualEncoder):
    """
    Encoder deterministico per i test: one-hot di posizione concatenato a un
    vettore pseudo-casuale per stringa del sub-token. Spezza la punteggiatura
    interna ("80-yard" -> "80", "-", "yard").
    """

    concurrent_safe = True

    _SUBTOKEN_RE = re.compile(r"\w+|[^\w\s]")

    def __init__(self, positions: int = 16, hash_dim: int = 16,
                 max_length: int = 512, special_tokens: bool = False):
        self.positions = positions
        self.hash_dim = hash_dim
        self.hidden_size = positions + hash_dim
        self.max_length = max_length
        self.special_tokens = special_tokens

    def tokenize(self, question_text: str) -> TokenizedQuestion:
        pieces: List[Tuple[str, Optional[Span]]] = [
            (m.group(), (m.start(), m.end())) for m in self._SUBTOKEN_RE.finditer(question_text)
        ]
        if self.special_tokens:
            pieces = [("[CLS]", None)] + pieces + [("[SEP]", None)]
        self._check_length(len(pieces))
        alignment = align_offsets(word_spans(question_text), [span for _, span in pieces])
        return TokenizedQuestion(
            tuple(tokenize_words(question_text)),
            tuple(tok for tok, _ in pieces),
            alignment,
        )

    def _vector(self, position: int, token: str) -> np.ndarray:
        vec = np.zeros(self.hidden_size)
        vec[position % self.positions] = 1.0
        rng = np.random.default_rng(zlib.crc32(token.encode("utf-8")))
        vec[self.positions:] = 0.1 * rng.standard_normal(self.hash_dim)
        return vec

    def embed(self, tokenized: TokenizedQuestion) -> torch.Tensor:
        rows = [self._vector(k, tok) for k, tok in enumerate(tokenized.subtokens)]
        return torch.tensor(np.stack(rows), dtype=torch.float32)


class TransformerEncoder(ContextualEncoder):
    """Ultimo layer di un modello transformers (riferimento: BERT large, h = 1024)."""

    def __init__(self, model_name: str, max_length: int = 512, device: str = "cpu"):
        from transformers import AutoModel, AutoTokenizer

        try:
            self.tokenizer = AutoTokenizer.from_pretrained(model_name, use_fast=True)
            self.model = AutoModel.from_pretrained(model_name).to(device)
        except OSError as exc:
            raise ConfigurationError(f"Encoder non disponibile: {model_name}") from exc
        self.model.eval()
        self.device = device
        self.model_name = model_name
        self.hidden_size = self.model.config.hidden_size
        self.max_length = min(max_length, self.tokenizer.model_max_length)

    def tokenize(self, question_text: str) -> TokenizedQuestion:
        enc = self.tokenizer(
            question_text,
            return_offsets_mapping=True,
            add_special_tokens=True,
            truncation=False,
        )
        input_ids = enc["input_ids"]
        self._check_length(len(input_ids))
        special = set(self.tokenizer.all_special_ids)
        offsets = [
            None if tid in special else tuple(span)
            for tid, span in zip(input_ids, enc["offset_mapping"])
        ]
        return TokenizedQuestion(
            tuple(tokenize_words(question_text)),
            tuple(self.tokenizer.convert_ids_to_tokens(input_ids)),
            align_offsets(word_spans(question_text), offsets),
            encoding=input_ids,
        )

    def embed(self, tokenized: TokenizedQuestion) -> torch.Tensor:
        input_ids = torch.tensor([tokenized.encoding], device=self.device)
        outputs = self.model(input_ids=input_ids, return_dict=True)
        return outputs.last_hidden_state[0]

    def parameters(self) -> Iterator[torch.nn.Parameter]:
        return self.model.parameters()

    def train(self, mode: bool = True) -> None:
        self.model.train(mode)

    def save(self, directory) -> None:
        self.model.save_pretrained(directory)
        self.tokenizer.save_pretrained(directory)
