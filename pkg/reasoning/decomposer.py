"""
Riscrittura di una domanda di sottrazione in due sotto-domande a partire
dai 4 puntatori: suddivisione in parti, rimozione dei comparativi dalla
prima parte e potatura della parte centrale guidata dal parse a dipendenze.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

from .exceptions import InvalidDecompositionError
from .ingest import COMPARATIVE_TAGS
from .parsing import ParseView
from .pointer import PointerPrediction
from .words import detokenize, tokenize_words

logger = logging.getLogger(__name__)

Words = Tuple[str, ...]


@dataclass(frozen=True)
class QuestionChunks:
    part1: Words
    ent1: Words
    middle: Words
    ent2: Words
    part2: Words
    pointers: Tuple[int, int, int, int]

    @property
    def middle_start(self) -> int:
        return self.pointers[1] + 1

    def words(self) -> Words:
        return self.part1 + self.ent1 + self.middle + self.ent2 + self.part2

    def to_dict(self):
        return {
            "part1": list(self.part1), "ent1": list(self.ent1), "middle": list(self.middle),
            "ent2": list(self.ent2), "part2": list(self.part2),
        }


@dataclass(frozen=True)
class Decomposition:
    q1: str
    q2: str
    chunks: Optional[QuestionChunks]
    # (parola, motivo): motivo in {"comparative", "middle-prune"}
    removed_words: Tuple[Tuple[str, str], ...] = ()
    q1_words: Words = ()
    q2_words: Words = ()

    @property
    def subquestions(self) -> Tuple[str, str]:
        return self.q1, self.q2

    def to_dict(self):
        return {
            "q1": self.q1,
            "q2": self.q2,
            "chunks": self.chunks.to_dict() if self.chunks else None,
            "removed_words": [list(pair) for pair in self.removed_words],
        }


def _check_pointers(n: int, p: Sequence[int]) -> None:
    if len(p) != 4 or not (0 <= p[0] <= p[1] <= p[2] <= p[3] < n):
        raise InvalidDecompositionError(f"puntatori {tuple(p)} non validi su {n} parole")


def chunk(words: Sequence[str], p: PointerPrediction) -> QuestionChunks:
    words = tuple(words)
    _check_pointers(len(words), p.indices)
    p1, p2, p3, p4 = p.indices
    return QuestionChunks(
        part1=words[0:p1],
        ent1=words[p1:p2 + 1],
        middle=words[p2 + 1:p3],
        ent2=words[p3:p4 + 1],
        part2=words[p4 + 1:],
        pointers=(p1, p2, p3, p4),
    )


def _comparative_positions(part1: Sequence[str], parse: ParseView) -> List[int]:
    return [i for i in range(len(part1)) if parse.pos_tag(i) in COMPARATIVE_TAGS]


def strip_comparatives(part1: Sequence[str], parse: ParseView) -> Words:
    drop = set(_comparative_positions(part1, parse))
    return tuple(w for i, w in enumerate(part1) if i not in drop)


def _pruned_positions(chunks: QuestionChunks, parse: ParseView) -> List[int]:
    """Posizioni (assolute) rimosse dalla parte centrale."""
    p1, p2, p3, p4 = chunks.pointers
    middle = set(range(p2 + 1, p3))
    removed: List[int] = []

    head = parse.parent(parse.head_of_span(p3, p4))
    i = head
    prev_i = i
    while head is not None and head in middle and prev_i - i <= 1:
        new_head = parse.parent(head)
        middle.discard(head)
        removed.append(head)
        head = new_head
        prev_i = i
        i = head
    return removed


def prune_middle(chunks: QuestionChunks, parse: ParseView) -> Words:
    removed = set(_pruned_positions(chunks, parse))
    start = chunks.middle_start
    return tuple(w for k, w in enumerate(chunks.middle) if start + k not in removed)


def generate_subquestions(question: str, p: PointerPrediction, parse: ParseView) -> Decomposition:
    words = tokenize_words(question)
    if len(parse) != len(words):
        raise InvalidDecompositionError(
            f"parse di {len(parse)} parole per una domanda di {len(words)}"
        )
    chunks = chunk(words, p)

    stripped = set(_comparative_positions(chunks.part1, parse))
    part1 = tuple(w for i, w in enumerate(chunks.part1) if i not in stripped)
    pruned = sorted(_pruned_positions(chunks, parse))
    middle = tuple(
        w for k, w in enumerate(chunks.middle) if chunks.middle_start + k not in pruned
    )

    q1_words = part1 + chunks.ent1 + middle + chunks.part2
    q2_words = part1 + chunks.ent2 + middle + chunks.part2
    removed = tuple((words[i], "comparative") for i in sorted(stripped)) + tuple(
        (words[i], "middle-prune") for i in pruned
    )
    logger.debug("Decomposizione di %r: rimosse %s", question, removed)
    return Decomposition(
        q1=detokenize(q1_words),
        q2=detokenize(q2_words),
        chunks=chunks,
        removed_words=removed,
        q1_words=q1_words,
        q2_words=q2_words,
    )
