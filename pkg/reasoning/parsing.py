"""
Analisi linguistica delle domande: POS tag e albero a dipendenze.

L'analizzatore è iniettato. `SpacyAnalyzer` è l'adattatore di produzione,
`ScriptedAnalyzer` / `LexiconTagger` fissano parse e tag a mano, così i test
dell'algoritmo di riscrittura non dipendono dal parser.
"""
from __future__ import annotations

import logging
import threading
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Mapping, Optional, Protocol, Sequence, Tuple

from .exceptions import ConfigurationError
from .words import detokenize

logger = logging.getLogger(__name__)


class PosTagger(Protocol):
    def tag(self, words: Sequence[str]) -> Sequence[str]:
        ...


class ParseView(ABC):
    """Vista su una domanda analizzata, indicizzata per parola."""

    @abstractmethod
    def __len__(self) -> int:
        ...

    @abstractmethod
    def pos_tag(self, i: int) -> str:
        ...

    @abstractmethod
    def parent(self, i: int) -> Optional[int]:
        """Indice della testa sintattica, None per la radice."""

    def head_of_span(self, start: int, end: int) -> int:
        """Prima parola dell'intervallo [start, end] la cui testa è fuori."""
        for i in range(start, end + 1):
            p = self.parent(i)
            if p is None or not start <= p <= end:
                return i
        # un ciclo dentro l'intervallo non può esistere in un albero valido
        return start


@dataclass(frozen=True)
class DependencyParse(ParseView):
    tags: Tuple[str, ...]
    heads: Tuple[Optional[int], ...]

    def __post_init__(self):
        if len(self.tags) != len(self.heads):
            raise ConfigurationError("tag e teste di lunghezza diversa")
        for start in range(len(self.heads)):
            seen, node = set(), start
            while node is not None:
                if node in seen or not 0 <= node < len(self.heads):
                    raise ConfigurationError(f"relazione parent non aciclica da {start}")
                seen.add(node)
                node = self.heads[node]

    def __len__(self) -> int:
        return len(self.tags)

    def pos_tag(self, i: int) -> str:
        return self.tags[i]

    def parent(self, i: int) -> Optional[int]:
        return self.heads[i]

    def tag(self, words: Sequence[str]) -> Sequence[str]:
        return self.tags


class LexiconTagger:
    """Tag da dizionario parola -> tag, default NN."""

    def __init__(self, lexicon: Mapping[str, str], default: str = "NN"):
        self.lexicon = {k.lower(): v for k, v in lexicon.items()}
        self.default = default

    def tag(self, words: Sequence[str]) -> Sequence[str]:
        return [self.lexicon.get(w.lower(), self.default) for w in words]


class ScriptedAnalyzer:
    """Parse fissati per testo della domanda (file JSON o dizionario)."""

    concurrent_safe = True

    def __init__(self, parses: Mapping[str, DependencyParse]):
        self.parses = dict(parses)

    @classmethod
    def from_records(cls, records) -> "ScriptedAnalyzer":
        return cls({
            r["question"]: DependencyParse(tuple(r["tags"]), tuple(r["heads"]))
            for r in records
        })

    def parse(self, words: Sequence[str]) -> ParseView:
        key = detokenize(words)
        if key not in self.parses:
            raise KeyError(f"nessun parse fissato per {key!r}")
        return self.parses[key]

    def tag(self, words: Sequence[str]) -> Sequence[str]:
        return self.parse(words).tags


class SpacyAnalyzer:
    """
    Adattatore spaCy. Le parole sono passate già tokenizzate (Doc costruito
    a mano) così gli indici coincidono con quelli dei puntatori.
    """

    # la pipeline spaCy non è dichiarata thread-safe: l'engine serializza
    concurrent_safe = False

    def __init__(self, model: str):
        import spacy

        try:
            self.nlp = spacy.load(model)
        except OSError as exc:
            raise ConfigurationError(f"Modello spaCy non trovato: {model}") from exc
        self._lock = threading.Lock()

    def _doc(self, words: Sequence[str]):
        from spacy.tokens import Doc

        with self._lock:
            return self.nlp(Doc(self.nlp.vocab, words=list(words)))

    def parse(self, words: Sequence[str]) -> ParseView:
        doc = self._doc(words)
        heads = tuple(None if tok.head.i == tok.i else tok.head.i for tok in doc)
        return DependencyParse(tuple(tok.tag_ for tok in doc), heads)

    def tag(self, words: Sequence[str]) -> Sequence[str]:
        return [tok.tag_ for tok in self._doc(words)]

    @property
    def vocab(self):
        return self.nlp.vocab
