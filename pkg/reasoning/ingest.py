"""
Caricamento dei dati DROP, cascata di filtri per costruire i set di
valutazione e lettura delle annotazioni dei puntatori delimitate da `#`.

Tutte le funzioni sono pure: ogni filtro restituisce un nuovo QuestionSet
con la provenienza estesa, l'input non viene mai modificato.
"""
from __future__ import annotations

import json
import re
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import jsonlines

from .exceptions import AnnotationError, IngestError
from .words import tokenize_words, word_spans

logger = logging.getLogger(__name__)

TRIGRAM_PREFIXES: Tuple[Tuple[str, str, str], ...] = (
    ("how", "many", "more"),
    ("how", "many", "fewer"),
    ("how", "many", "less"),
)
COMPARATIVE_TAGS = frozenset({"JJR", "RBR"})


@dataclass(frozen=True)
class AnswerValue:
    """Risposta gold nel formato DROP: numero, span testuali o data."""

    number: str = ""
    spans: Tuple[str, ...] = ()
    date: Mapping[str, str] = field(default_factory=dict)

    @classmethod
    def from_drop(cls, raw: Optional[Mapping]) -> "AnswerValue":
        if not raw:
            return cls()
        date = raw.get("date") or {}
        return cls(
            number=str(raw.get("number") or ""),
            spans=tuple(raw.get("spans") or ()),
            date={k: str(v) for k, v in date.items() if v not in ("", None)},
        )

    @property
    def kind(self) -> str:
        if self.number.strip():
            return "number"
        if self.spans:
            return "spans"
        if self.date:
            return "date"
        return "empty"

    def to_dict(self) -> Dict:
        return {"number": self.number, "spans": list(self.spans), "date": dict(self.date)}


@dataclass(frozen=True)
class Passage:
    passage_id: str
    text: str


@dataclass(frozen=True)
class Question:
    id: str
    text: str
    passage_id: str
    gold_answer: AnswerValue = field(default_factory=AnswerValue)


@dataclass(frozen=True)
class QuestionSet:
    items: Tuple[Question, ...] = ()
    passages: Mapping[str, Passage] = field(default_factory=dict)
    provenance: Tuple[str, ...] = ()

    def __post_init__(self):
        ids = set()
        for q in self.items:
            if q.id in ids:
                raise IngestError(f"id domanda duplicato: {q.id}")
            ids.add(q.id)
            if q.passage_id not in self.passages:
                raise IngestError(f"passage_id {q.passage_id} non risolto (domanda {q.id})")

    def __len__(self) -> int:
        return len(self.items)

    def __iter__(self):
        return iter(self.items)

    def passage_of(self, question: Question) -> Passage:
        return self.passages[question.passage_id]

    def derive(self, name: str, items: Iterable[Question]) -> "QuestionSet":
        """Nuovo set con gli elementi mantenuti e la provenienza estesa."""
        kept = tuple(items)
        used = {q.passage_id for q in kept}
        passages = {pid: p for pid, p in self.passages.items() if pid in used}
        provenance = self.provenance if name in self.provenance else self.provenance + (name,)
        return QuestionSet(kept, passages, provenance)


@dataclass(frozen=True)
class PointerAnnotation:
    """Entità confrontate come intervalli di parole inclusivi."""

    question_text: str
    entity1: Tuple[int, int]
    entity2: Tuple[int, int]

    def __post_init__(self):
        (s1, e1), (s2, e2) = self.entity1, self.entity2
        n = len(tokenize_words(self.question_text))
        if not (0 <= s1 <= e1 < s2 <= e2 < n):
            raise AnnotationError(
                None, f"intervalli non validi {self.entity1} {self.entity2} su {n} parole"
            )

    @property
    def pointers(self) -> Tuple[int, int, int, int]:
        return (*self.entity1, *self.entity2)


# ---------- DROP ----------


_WS = re.compile(r"\s*")


def _decode_passages(text: str, path: Path) -> Dict[str, object]:
    """
    Decodifica l'oggetto di primo livello un passaggio alla volta, così un
    errore di sintassi indica il passaggio in cui cade.
    """
    decoder = json.JSONDecoder()
    pos = _WS.match(text).end()
    if not text.startswith("{", pos):
        raise IngestError(f"{path}: atteso un oggetto con i passaggi per id")
    pos = _WS.match(text, pos + 1).end()

    entries: Dict[str, object] = {}
    last: Optional[str] = None
    if text.startswith("}", pos):
        pos += 1
    else:
        while True:
            current: Optional[str] = None
            try:
                current, pos = decoder.raw_decode(text, pos)
                if not isinstance(current, str):
                    raise json.JSONDecodeError("chiave non stringa", text, pos)
                pos = _WS.match(text, pos).end()
                if not text.startswith(":", pos):
                    raise json.JSONDecodeError("atteso ':'", text, pos)
                entry, pos = decoder.raw_decode(text, _WS.match(text, pos + 1).end())
            except json.JSONDecodeError as exc:
                where = (
                    f"passaggio {current}" if isinstance(current, str)
                    else f"dopo il passaggio {last}" if last else "all'inizio del file"
                )
                raise IngestError(f"{path}: JSON non valido, {where} ({exc.msg})") from exc
            entries[current] = entry
            last = current
            pos = _WS.match(text, pos).end()
            if text.startswith(",", pos):
                pos = _WS.match(text, pos + 1).end()
                continue
            if text.startswith("}", pos):
                pos += 1
                break
            raise IngestError(f"{path}: JSON non valido dopo il passaggio {last}")
    if text[pos:].strip():
        raise IngestError(f"{path}: contenuto dopo l'oggetto dei passaggi")
    return entries


def load_drop(path) -> QuestionSet:
    """Una Question per ogni qa_pair, nell'ordine del file."""
    path = Path(path)
    raw = _decode_passages(path.read_text(encoding="utf-8"), path)

    items: List[Question] = []
    passages: Dict[str, Passage] = {}
    for pid, entry in raw.items():
        if not isinstance(entry, dict) or not isinstance(entry.get("passage"), str):
            raise IngestError(f"passaggio {pid}: manca il testo 'passage'")
        qa_pairs = entry.get("qa_pairs")
        if not isinstance(qa_pairs, list):
            raise IngestError(f"passaggio {pid}: 'qa_pairs' non è una lista")
        passages[pid] = Passage(pid, entry["passage"])

        for pos, qa in enumerate(qa_pairs):
            if not isinstance(qa, dict) or not qa.get("question"):
                raise IngestError(f"passaggio {pid}: qa_pair {pos} senza domanda")
            qid = qa.get("query_id") or f"{pid}-{pos}"
            if "answer" not in qa:
                logger.warning("Domanda %s senza campo answer: risposta gold vuota", qid)
            items.append(
                Question(qid, qa["question"], pid, AnswerValue.from_drop(qa.get("answer")))
            )

    logger.info("Caricate %d domande da %s", len(items), path)
    return QuestionSet(tuple(items), passages, ())


def filter_number_answers(qs: QuestionSet) -> QuestionSet:
    return qs.derive(
        "number_answer", (q for q in qs if q.gold_answer.number.strip())
    )


def _tag_all(qs: QuestionSet, tagger) -> Dict[str, List[str]]:
    tags: Dict[str, List[str]] = {}
    for q in qs:
        words = tokenize_words(q.text)
        try:
            tagged = list(tagger.tag(words))
            if len(tagged) != len(words):
                raise ValueError(f"{len(tagged)} tag per {len(words)} parole")
        except Exception as exc:
            logger.warning("Tagger fallito su %s, domanda esclusa: %s", q.id, exc)
            continue
        tags[q.id] = tagged
    return tags


def _has_comparative(tags: Sequence[str]) -> bool:
    return any(t in COMPARATIVE_TAGS for t in tags)


def _comparative_after_or_only(words: Sequence[str], tags: Sequence[str]) -> bool:
    positions = [i for i, t in enumerate(tags) if t in COMPARATIVE_TAGS]
    return bool(positions) and all(i > 0 and words[i - 1].lower() == "or" for i in positions)


def comparative_steps(qs: QuestionSet, tagger) -> Tuple[QuestionSet, QuestionSet]:
    """
    Tiene le domande con almeno un JJR/RBR, poi scarta quelle in cui ogni
    comparativo è preceduto da "or" ("18 or older"). I due passi compaiono
    separati nella provenienza.
    """
    tags = _tag_all(qs, tagger)
    with_comparative = qs.derive(
        "comparative", (q for q in qs if q.id in tags and _has_comparative(tags[q.id]))
    )
    logger.info("Con comparativi JJR/RBR: %d di %d", len(with_comparative), len(qs))
    refined = with_comparative.derive(
        "comparative_not_after_or",
        (
            q for q in with_comparative
            if not _comparative_after_or_only(tokenize_words(q.text), tags[q.id])
        ),
    )
    logger.info("Esclusi %d comparativi preceduti da 'or'", len(with_comparative) - len(refined))
    return with_comparative, refined


def filter_comparative(qs: QuestionSet, tagger) -> QuestionSet:
    return comparative_steps(qs, tagger)[1]


def starts_with_trigram(text: str) -> bool:
    head = tuple(w.lower() for w in tokenize_words(text.strip())[:3])
    return head in TRIGRAM_PREFIXES


def filter_trigram(qs: QuestionSet) -> QuestionSet:
    return qs.derive("trigram", (q for q in qs if starts_with_trigram(q.text)))


def filter_predicted_type(
    qs: QuestionSet,
    predictions: Mapping[str, str],
    allowed: Iterable[str] = ("addition_subtraction",),
) -> QuestionSet:
    """Filtra sul tipo di ragionamento predetto da un modello esterno."""
    allowed = frozenset(allowed)
    missing = [q.id for q in qs if q.id not in predictions]
    if missing:
        logger.warning("%d domande senza tipo predetto: escluse", len(missing))
    return qs.derive(
        "predicted_type", (q for q in qs if predictions.get(q.id) in allowed)
    )


# ---------- handoff JSON lines ----------


def export_question_set(qs: QuestionSet, path) -> None:
    with jsonlines.open(path, mode="w") as writer:
        for q in qs:
            writer.write({
                "id": q.id,
                "question": q.text,
                "passage_id": q.passage_id,
                "passage": qs.passage_of(q).text,
                "answer": q.gold_answer.to_dict(),
                "provenance": list(qs.provenance),
            })


def _first_line(path: Path) -> str:
    with path.open(encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                return line.strip()
    return ""


def _plain_question_set(path: Path) -> QuestionSet:
    """Una domanda per riga, senza passaggio: basta per la sola decomposizione."""
    items: List[Question] = []
    with path.open(encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if line.strip():
                items.append(Question(f"line-{line_no}", line.strip(), "", AnswerValue()))
    return QuestionSet(tuple(items), {"": Passage("", "")} if items else {}, ("plain_text",))


def load_question_set(path) -> QuestionSet:
    """QuestionSet in JSON lines oppure testo semplice, una domanda per riga."""
    path = Path(path)
    if not _first_line(path).startswith("{"):
        return _plain_question_set(path)

    items: List[Question] = []
    passages: Dict[str, Passage] = {}
    provenance: Tuple[str, ...] = ()
    row_no = 0
    try:
        with jsonlines.open(path) as reader:
            for row_no, row in enumerate(reader, start=1):
                passages.setdefault(row["passage_id"], Passage(row["passage_id"], row["passage"]))
                items.append(
                    Question(row["id"], row["question"], row["passage_id"],
                             AnswerValue.from_drop(row.get("answer")))
                )
                provenance = tuple(row.get("provenance", ()))
    except jsonlines.InvalidLineError as exc:
        raise IngestError(f"{path}: riga {exc.lineno} non è JSON valido") from exc
    except (KeyError, TypeError) as exc:
        raise IngestError(f"{path}: riga {row_no}: campo mancante o non valido ({exc})") from exc
    return QuestionSet(tuple(items), passages, provenance)


# ---------- annotazioni dei puntatori ----------


def parse_annotation(line: str, line_no: int = 1) -> PointerAnnotation:
    marks = [i for i, ch in enumerate(line) if ch == "#"]
    if len(marks) != 4:
        raise AnnotationError(line_no, f"attesi 4 '#', trovati {len(marks)}")

    # offset dei marcatori nel testo ripulito
    text = line.replace("#", "")
    bounds = [m - k for k, m in enumerate(marks)]
    spans = word_spans(text)

    def covered(start: int, end: int) -> Tuple[int, int]:
        inside = [i for i, (s, e) in enumerate(spans) if s >= start and e <= end]
        cut = [i for i, (s, e) in enumerate(spans) if s < end and e > start and i not in inside]
        if cut:
            raise AnnotationError(line_no, "un delimitatore cade dentro una parola")
        if not inside:
            raise AnnotationError(line_no, "entità vuota")
        return inside[0], inside[-1]

    ent1 = covered(bounds[0], bounds[1])
    ent2 = covered(bounds[2], bounds[3])
    if ent1[1] >= ent2[0]:
        raise AnnotationError(line_no, "entità sovrapposte o invertite")
    return PointerAnnotation(text, ent1, ent2)


def render_annotation(ann: PointerAnnotation) -> str:
    spans = word_spans(ann.question_text)
    cuts = [
        spans[ann.entity1[0]][0], spans[ann.entity1[1]][1],
        spans[ann.entity2[0]][0], spans[ann.entity2[1]][1],
    ]
    out, prev = [], 0
    for c in cuts:
        out.append(ann.question_text[prev:c])
        out.append("#")
        prev = c
    out.append(ann.question_text[prev:])
    return "".join(out)


def load_pointer_annotations(path) -> List[PointerAnnotation]:
    annotations = []
    with Path(path).open(encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            annotations.append(parse_annotation(line.strip(), line_no))
    logger.info("Caricate %d annotazioni da %s", len(annotations), path)
    return annotations


# ---------- decomposizioni gold e correzioni delle etichette ----------


def load_gold_decompositions(path) -> Dict[str, Tuple[str, str]]:
    """Righe JSON {question_id, q1, q2} scritte a mano per il set clean."""
    with jsonlines.open(path) as reader:
        return {row["question_id"]: (row["q1"], row["q2"]) for row in reader}


def load_relabel_overlay(path) -> Dict[str, str]:
    """Lista JSON di {question_id, corrected_answer | "invalid"}."""
    with Path(path).open(encoding="utf-8") as fh:
        rows = json.load(fh)
    overlay = {}
    for row in rows:
        value = row.get("corrected_answer", row.get("answer"))
        if value is None:
            raise IngestError(f"correzione senza risposta per {row.get('question_id')}")
        overlay[row["question_id"]] = str(value)
    return overlay
