"""
Pointer model a 4 puntatori: Y = softmax(UW) per colonna e decodifica
esatta del quadruplo monotono i1 <= i2 <= i3 <= i4 che massimizza
prod_j Y[i_j, j].
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, Optional, Protocol, Tuple

import numpy as np
import torch
from scipy.special import log_softmax

from .encoders import ContextualEncoder, EmbeddingMatrix
from .exceptions import ConfigurationError, InvalidPointersError
from .words import detokenize, tokenize_words

logger = logging.getLogger(__name__)

NUM_POINTERS = 4
Quad = Tuple[int, int, int, int]


class PointerHead(torch.nn.Module):
    """Matrice W (h x 4), senza bias."""

    def __init__(self, hidden_size: int, weights: Optional[np.ndarray] = None):
        super().__init__()
        if weights is None:
            init = torch.empty(hidden_size, NUM_POINTERS)
            torch.nn.init.normal_(init, std=0.02)
        else:
            if weights.shape != (hidden_size, NUM_POINTERS):
                raise ConfigurationError(
                    f"pesi {weights.shape} incompatibili con h={hidden_size}"
                )
            init = torch.tensor(weights, dtype=torch.float32)
        self.weight = torch.nn.Parameter(init)
        self.metadata: Dict = {"h": hidden_size}

    @property
    def hidden_size(self) -> int:
        return self.weight.shape[0]

    @property
    def weights(self) -> np.ndarray:
        return self.weight.detach().cpu().numpy().astype(np.float64)

    def forward(self, embeddings: torch.Tensor) -> torch.Tensor:
        """Log-probabilità (n, 4), normalizzate sui token per ogni colonna."""
        return torch.log_softmax(embeddings @ self.weight, dim=0)


@dataclass(frozen=True)
class PointerDistribution:
    """Probabilità (n, 4) per colonna; `log_values` le tiene anche dove exp va a zero."""

    values: np.ndarray
    log_values: Optional[np.ndarray] = None

    @classmethod
    def from_logits(cls, logits: np.ndarray) -> "PointerDistribution":
        log_values = log_softmax(logits, axis=0)
        return cls(np.exp(log_values), log_values)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def logs(self) -> np.ndarray:
        if self.log_values is not None:
            return self.log_values
        with np.errstate(divide="ignore"):
            return np.log(self.values)


@dataclass(frozen=True)
class PointerPrediction:
    indices: Quad
    joint_prob: float

    def __post_init__(self):
        p = self.indices
        if len(p) != NUM_POINTERS or not all(a <= b for a, b in zip(p, p[1:])) or p[0] < 0:
            raise InvalidPointersError(f"puntatori non monotoni: {p}")


def score_tokens(emb: EmbeddingMatrix, head) -> PointerDistribution:
    weights = head.weights if hasattr(head, "weights") else np.asarray(head)
    if emb.h != weights.shape[0]:
        raise ConfigurationError(f"embedding h={emb.h} ma la testa ha {weights.shape[0]} righe")
    return PointerDistribution.from_logits(emb.values @ weights)


def decode_pointers(dist: PointerDistribution) -> PointerPrediction:
    """
    Programmazione dinamica sui suffissi: best[j][i] è il miglior punteggio
    (log) dei puntatori j..3 con i_j = i. La scelta in avanti del primo
    massimo dà, a parità, gli indici più piccoli partendo dal primo puntatore.
    """
    logy = dist.logs
    n = logy.shape[0]

    best = np.empty((NUM_POINTERS, n))
    best[NUM_POINTERS - 1] = logy[:, NUM_POINTERS - 1]
    for j in range(NUM_POINTERS - 2, -1, -1):
        # massimo sul suffisso k >= i
        suffix = np.maximum.accumulate(best[j + 1][::-1])[::-1]
        best[j] = logy[:, j] + suffix

    indices = []
    start = 0
    for j in range(NUM_POINTERS):
        i = start + int(np.argmax(best[j][start:]))
        indices.append(i)
        start = i
    quad = tuple(indices)
    log_joint = float(sum(logy[i, j] for j, i in enumerate(quad)))
    # sotto-flusso: il minimo positivo rappresentabile
    joint = min(1.0, max(float(np.exp(log_joint)), np.finfo(float).tiny))
    return PointerPrediction(quad, joint)


class PointerModel(Protocol):
    concurrent_safe: bool

    def predict(self, question: str) -> PointerPrediction:
        ...


def predict_pointers(question: str, encoder: ContextualEncoder, head) -> PointerPrediction:
    """Decodifica nello spazio dei sub-token, poi riporta gli indici sulle parole."""
    tokenized, emb = encoder.encode(question)
    sub = decode_pointers(score_tokens(emb, head))
    words = []
    for k in sub.indices:
        w = tokenized.alignment[k]
        if w is None:
            raise InvalidPointersError(
                f"puntatore sul token speciale {tokenized.subtokens[k]!r} (posizione {k})"
            )
        words.append(w)
    return PointerPrediction(tuple(words), sub.joint_prob)


class LearnedPointerModel:
    def __init__(self, encoder: ContextualEncoder, head: PointerHead):
        self.encoder = encoder
        self.head = head
        self.concurrent_safe = encoder.concurrent_safe

    def predict(self, question: str) -> PointerPrediction:
        return predict_pointers(question, self.encoder, self.head)


class AnnotatedPointerModel:
    """Puntatori gold cercati per testo della domanda (limite superiore, smoke run)."""

    concurrent_safe = True

    def __init__(self, annotations: Iterable):
        self.by_text = {
            detokenize(tokenize_words(a.question_text)): a.pointers for a in annotations
        }

    def predict(self, question: str) -> PointerPrediction:
        key = detokenize(tokenize_words(question))
        if key not in self.by_text:
            raise InvalidPointersError(f"nessuna annotazione per {question!r}")
        return PointerPrediction(self.by_text[key], 1.0)


# ---------- persistenza ----------


def save_head(head: PointerHead, path) -> Path:
    path = Path(path).with_suffix(".npz")
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savez(path, weights=head.weights, metadata=json.dumps(head.metadata, sort_keys=True))
    logger.info("Pesi del pointer salvati in %s", path)
    return path


def load_head(path) -> PointerHead:
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"Pesi del pointer non trovati: {path}")
    with np.load(path) as data:
        weights = data["weights"]
        metadata = json.loads(str(data["metadata"]))
    head = PointerHead(weights.shape[0], weights)
    head.metadata.update(metadata)
    return head
