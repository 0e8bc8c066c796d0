"""
Tokenizzazione in parole condivisa da filtri, annotazioni e decomposizione.

Una parola è una sequenza alfanumerica che può contenere trattini, apostrofi,
punti e virgole interni ("80-yard", "1,000", "53.2"); ogni altro segno di
punteggiatura è una parola a sé. Con questa convenzione la domanda di
esempio "How many more households ... together?" dà gli indici [3,3,7,10].
"""
import re
from typing import List, Sequence, Tuple

_WORD_RE = re.compile(r"\w+(?:[-'’.,]\w+)*|[^\w\s]")

# Punteggiatura finale attaccata alla parola precedente
_ATTACHED = frozenset({".", "?", "!"})

Span = Tuple[int, int]


def word_spans(text: str) -> List[Span]:
    """Offset di carattere [start, end) di ogni parola."""
    return [(m.start(), m.end()) for m in _WORD_RE.finditer(text)]


def tokenize_words(text: str) -> List[str]:
    return _WORD_RE.findall(text)


def detokenize(words: Sequence[str]) -> str:
    out = ""
    for w in words:
        if out and w not in _ATTACHED:
            out += " "
        out += w
    return out
