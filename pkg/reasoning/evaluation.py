"""
Metriche: accuratezza dei puntatori, sovrapposizione delle entità,
similarità delle sotto-domande (WMD e coseno) e accuratezza exact match,
con aggregazione media ± deviazione standard sui seed.
"""
from __future__ import annotations

import dataclasses
import json
import logging
from collections import Counter
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Protocol, Sequence, Set, Tuple

import numpy as np
import pandas as pd
from scipy.optimize import linprog
from scipy.spatial.distance import cdist

from .exceptions import EvaluationError, SimilarityError
from .templates import ErrorCode, TemplateTrace
from .words import tokenize_words

logger = logging.getLogger(__name__)

Quad = Sequence[int]


@dataclass(frozen=True)
class MetricCell:
    mean: float
    std: float = 0.0

    @classmethod
    def of(cls, values: Sequence[float]) -> "MetricCell":
        arr = np.asarray(values, dtype=float)
        return cls(float(arr.mean()), float(arr.std(ddof=0)))

    def __str__(self) -> str:
        return f"{self.mean:.2f} ± {self.std:.2f}" if self.std else f"{self.mean:.2f}"


# ---------- puntatori ----------


@dataclass(frozen=True)
class PointerReport:
    p1: MetricCell
    p2: MetricCell
    p3: MetricCell
    p4: MetricCell
    all: MetricCell
    items: int
    seeds: int = 1

    def to_dict(self) -> Dict:
        return dataclasses.asdict(self)


def pointer_metrics(preds: Sequence[Quad], golds: Sequence[Quad]) -> PointerReport:
    """Percentuali di indici esatti, per puntatore e sui quattro insieme."""
    if len(preds) != len(golds):
        raise EvaluationError(f"{len(preds)} predizioni per {len(golds)} gold")
    n = len(golds)
    if n == 0:
        zero = MetricCell(0.0)
        return PointerReport(zero, zero, zero, zero, zero, items=0)
    hits = np.array([[int(p[j]) == int(g[j]) for j in range(4)] for p, g in zip(preds, golds)])
    per = hits.mean(axis=0) * 100.0
    both = hits.all(axis=1).mean() * 100.0
    return PointerReport(*(MetricCell(float(v)) for v in per), MetricCell(float(both)), items=n)


def pointer_metrics_seeds(pred_sets: Sequence[Sequence[Quad]], golds: Sequence[Quad]) -> PointerReport:
    return aggregate_reports([pointer_metrics(preds, golds) for preds in pred_sets])


# ---------- sovrapposizione delle entità ----------


@dataclass(frozen=True)
class EntityOverlap:
    f1: MetricCell
    precision: MetricCell
    recall: MetricCell


@dataclass(frozen=True)
class OverlapReport:
    entity1: EntityOverlap
    entity2: EntityOverlap
    items: int
    skipped: int = 0
    seeds: int = 1

    def to_dict(self) -> Dict:
        return dataclasses.asdict(self)


def pointer_spans(p: Quad) -> Tuple[Set[int], Set[int]]:
    """Quadrupla di puntatori -> insiemi di indici di parola delle due entità."""
    return set(range(p[0], p[1] + 1)), set(range(p[2], p[3] + 1))


def span_prf(pred: Set[int], gold: Set[int]) -> Tuple[float, float, float]:
    common = len(pred & gold)
    precision = common / len(pred) if pred else 0.0
    recall = common / len(gold)
    f1 = 2 * precision * recall / (precision + recall) if common else 0.0
    return precision, recall, f1


def entity_overlap_metrics(
    preds: Sequence[Tuple[Set[int], Set[int]]],
    golds: Sequence[Tuple[Set[int], Set[int]]],
) -> OverlapReport:
    """P/R/F1 sugli insiemi di parole per entità, macro-media sulle domande."""
    if len(preds) != len(golds):
        raise EvaluationError(f"{len(preds)} predizioni per {len(golds)} gold")
    scores: Dict[int, List[Tuple[float, float, float]]] = {0: [], 1: []}
    skipped = 0
    for k, (pred, gold) in enumerate(zip(preds, golds)):
        if not gold[0] or not gold[1]:
            logger.warning("Elemento %d senza span gold: ignorato", k)
            skipped += 1
            continue
        for e in (0, 1):
            scores[e].append(span_prf(set(pred[e]), set(gold[e])))

    def entity(values) -> EntityOverlap:
        if not values:
            zero = MetricCell(0.0)
            return EntityOverlap(zero, zero, zero)
        p, r, f = np.asarray(values).mean(axis=0)
        return EntityOverlap(MetricCell(float(f)), MetricCell(float(p)), MetricCell(float(r)))

    return OverlapReport(entity(scores[0]), entity(scores[1]), len(scores[0]), skipped)


# ---------- aggregazione sui seed ----------


def _aggregate(values: Sequence):
    first = values[0]
    if isinstance(first, MetricCell):
        return MetricCell.of([v.mean for v in values])
    if dataclasses.is_dataclass(first):
        return type(first)(**{
            f.name: _aggregate([getattr(v, f.name) for v in values])
            for f in dataclasses.fields(first)
        })
    return first


def aggregate_reports(reports: Sequence):
    """Media ± deviazione standard (ddof=0) cella per cella."""
    if not reports:
        raise EvaluationError("nessun report da aggregare")
    kinds = {type(r) for r in reports}
    if len(kinds) != 1:
        raise EvaluationError(f"report eterogenei: {sorted(k.__name__ for k in kinds)}")
    merged = _aggregate(list(reports))
    return dataclasses.replace(merged, seeds=sum(r.seeds for r in reports))


# ---------- similarità delle sotto-domande ----------


class WordVectors(Protocol):
    def vector(self, word: str) -> Optional[np.ndarray]:
        ...


class StaticVectors:
    """Vocabolario parola -> vettore, anche scritto a mano nei test."""

    def __init__(self, table: Mapping[str, Sequence[float]]):
        self.table = {w: np.asarray(v, dtype=float) for w, v in table.items()}

    @classmethod
    def from_file(cls, path) -> "StaticVectors":
        return cls(json.loads(Path(path).read_text(encoding="utf-8")))

    def vector(self, word: str) -> Optional[np.ndarray]:
        vec = self.table.get(word)
        return vec if vec is not None else self.table.get(word.lower())


class SpacyVectors:
    """Vettori statici distribuiti con il modello spaCy."""

    def __init__(self, vocab):
        self.vocab = vocab

    def vector(self, word: str) -> Optional[np.ndarray]:
        for form in (word, word.lower()):
            if self.vocab.has_vector(form):
                return np.asarray(self.vocab.get_vector(form), dtype=float)
        return None


def _bag(sentence: str, vectors: WordVectors) -> Tuple[List[str], np.ndarray, np.ndarray]:
    counts: Counter = Counter()
    table: Dict[str, np.ndarray] = {}
    for word in tokenize_words(sentence):
        vec = vectors.vector(word)
        if vec is None:
            continue
        counts[word] += 1
        table[word] = vec
    if not counts:
        raise SimilarityError(f"nessuna parola con vettore in {sentence!r}")
    words = sorted(counts)
    weights = np.array([counts[w] for w in words], dtype=float)
    return words, weights / weights.sum(), np.vstack([table[w] for w in words])


def wmd(sent_a: str, sent_b: str, vectors: WordVectors) -> float:
    """Trasporto ottimo esatto tra i bag-of-words normalizzati, costo euclideo."""
    words_a, a, emb_a = _bag(sent_a, vectors)
    words_b, b, emb_b = _bag(sent_b, vectors)
    if words_a == words_b and np.allclose(a, b):
        return 0.0

    cost = cdist(emb_a, emb_b, metric="euclidean")
    m, k = cost.shape
    # vincoli: righe sommano a `a`, colonne a `b`
    a_eq = np.zeros((m + k, m * k))
    for i in range(m):
        a_eq[i, i * k:(i + 1) * k] = 1.0
    for j in range(k):
        a_eq[m + j, j::k] = 1.0
    b_eq = np.concatenate([a, b])
    result = linprog(cost.ravel(), A_eq=a_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    if not result.success:
        raise SimilarityError(f"trasporto non risolto: {result.message}")
    return max(0.0, float(result.fun))


def avg_embedding_cosine(sent_a: str, sent_b: str, vectors: WordVectors) -> float:
    _, wa, emb_a = _bag(sent_a, vectors)
    _, wb, emb_b = _bag(sent_b, vectors)
    # media sulle occorrenze, non sulle parole distinte
    mean_a, mean_b = wa @ emb_a, wb @ emb_b
    norm_a, norm_b = np.linalg.norm(mean_a), np.linalg.norm(mean_b)
    if norm_a == 0 or norm_b == 0:
        raise SimilarityError("vettore medio nullo")
    if np.array_equal(mean_a, mean_b):
        return 1.0
    return float(np.clip(mean_a @ mean_b / (norm_a * norm_b), -1.0, 1.0))


@dataclass(frozen=True)
class SubquestionSimilarity:
    wmd_max: Optional[float]
    wmd_avg: Optional[float]
    wmd_median: Optional[float]
    cosine_min: Optional[float]
    cosine_avg: Optional[float]
    cosine_median: Optional[float]
    pairs: int
    undefined: int


@dataclass(frozen=True)
class SimilarityReport:
    q1: SubquestionSimilarity
    q2: SubquestionSimilarity

    def to_dict(self) -> Dict:
        return dataclasses.asdict(self)


def _similarity(pairs: Iterable[Tuple[str, str]], vectors: WordVectors) -> SubquestionSimilarity:
    distances, cosines, total, undefined = [], [], 0, 0
    for gold, generated in pairs:
        total += 1
        try:
            distance = wmd(gold, generated, vectors)
            cosine = avg_embedding_cosine(gold, generated, vectors)
        except SimilarityError as exc:
            logger.debug("Coppia non misurabile: %s", exc)
            undefined += 1
            continue
        distances.append(distance)
        cosines.append(cosine)
    if not distances:
        return SubquestionSimilarity(None, None, None, None, None, None, total, undefined)
    d, c = np.asarray(distances), np.asarray(cosines)
    return SubquestionSimilarity(
        float(d.max()), float(d.mean()), float(np.median(d)),
        float(c.min()), float(c.mean()), float(np.median(c)),
        total, undefined,
    )


def similarity_report(pairs_q1, pairs_q2, vectors: WordVectors) -> SimilarityReport:
    """Coppie (gold, generata) per ciascuna sotto-domanda."""
    return SimilarityReport(_similarity(pairs_q1, vectors), _similarity(pairs_q2, vectors))


@dataclass(frozen=True)
class SimilaritySummary:
    """Statistiche per sotto-domanda mediate sulle run; None se nessuna run le definisce."""

    q1: Dict[str, Optional[MetricCell]]
    q2: Dict[str, Optional[MetricCell]]
    pairs: int
    undefined: int
    seeds: int

    def to_dict(self) -> Dict:
        return dataclasses.asdict(self)


_SIMILARITY_STATS = ("wmd_max", "wmd_avg", "wmd_median", "cosine_min", "cosine_avg", "cosine_median")


def _similarity_cells(values: Sequence[SubquestionSimilarity]) -> Dict[str, Optional[MetricCell]]:
    cells = {}
    for stat in _SIMILARITY_STATS:
        defined = [getattr(v, stat) for v in values if getattr(v, stat) is not None]
        cells[stat] = MetricCell.of(defined) if defined else None
    return cells


def aggregate_similarity(reports: Sequence[SimilarityReport]) -> SimilaritySummary:
    if not reports:
        raise EvaluationError("nessun report da aggregare")
    return SimilaritySummary(
        q1=_similarity_cells([r.q1 for r in reports]),
        q2=_similarity_cells([r.q2 for r in reports]),
        pairs=sum(r.q1.pairs for r in reports),
        undefined=sum(r.q1.undefined + r.q2.undefined for r in reports),
        seeds=len(reports),
    )


# ---------- exact match ----------


def normalize_number(text) -> Optional[Decimal]:
    """Valore numerico di una risposta: separatori, %, valuta e segno unicode ignorati."""
    if text is None:
        return None
    cleaned = str(text).strip().replace(",", "").replace("−", "-").rstrip("%").lstrip("$€£¥")
    if not cleaned:
        return None
    try:
        value = Decimal(cleaned)
    except InvalidOperation:
        return None
    return value if value.is_finite() else None


def answers_match(predicted, gold) -> bool:
    p, g = normalize_number(predicted), normalize_number(gold)
    return p is not None and g is not None and p == g


@dataclass(frozen=True)
class AccuracyReport:
    accuracy: float
    correct: int
    total: int
    relabeled_accuracy: Optional[float] = None
    mislabeled_match: Optional[int] = None
    corrected_accuracy: Optional[float] = None
    error_counts: Dict[str, int] = field(default_factory=dict)
    non_numeric: Tuple[str, ...] = ()

    def to_dict(self) -> Dict:
        data = dataclasses.asdict(self)
        data["non_numeric"] = list(self.non_numeric)
        return data


def _percent(correct: int, total: int) -> float:
    return 100.0 * correct / total if total else 0.0


def exact_match_accuracy(
    traces: Sequence[TemplateTrace],
    golds: Mapping[str, str],
    overlay: Optional[Mapping[str, str]] = None,
) -> AccuracyReport:
    """
    Uguaglianza di valore tra risposta e etichetta; le tracce fallite contano
    come errate. Con `overlay` calcola anche l'accuratezza senza le domande
    rietichettate, quante predizioni coincidono con le etichette scartate e
    l'accuratezza con le etichette corrette.
    """
    error_counts = Counter(ErrorCode(t.error_code).value for t in traces)
    scored, non_numeric = [], []
    for trace in traces:
        gold = golds.get(trace.question_id)
        if normalize_number(gold) is None:
            non_numeric.append(trace.question_id)
            continue
        scored.append((trace, answers_match(trace.final_answer, gold)))
    if non_numeric:
        logger.warning("%d domande con etichetta non numerica escluse", len(non_numeric))

    correct = sum(ok for _, ok in scored)
    report = dict(
        accuracy=_percent(correct, len(scored)),
        correct=correct,
        total=len(scored),
        error_counts={code.value: error_counts.get(code.value, 0) for code in ErrorCode},
        non_numeric=tuple(sorted(non_numeric)),
    )

    if overlay is not None:
        kept = [(t, ok) for t, ok in scored if t.question_id not in overlay]
        relabeled = [t for t, _ in scored if t.question_id in overlay]
        report["relabeled_accuracy"] = _percent(sum(ok for _, ok in kept), len(kept))
        report["mislabeled_match"] = sum(ok for t, ok in scored if t.question_id in overlay)

        corrected = [ok for _, ok in kept]
        for trace in relabeled:
            label = overlay[trace.question_id]
            if label.strip().lower() == "invalid":
                continue
            corrected.append(answers_match(trace.final_answer, label))
        report["corrected_accuracy"] = _percent(sum(corrected), len(corrected))

    return AccuracyReport(**report)


def accuracy_summary(reports: Sequence[AccuracyReport]) -> Dict:
    """Media ± std sulle run; le varianti con le correzioni solo se calcolate."""
    if not reports:
        raise EvaluationError("nessun report da aggregare")
    summary: Dict = {}
    for key in ("accuracy", "relabeled_accuracy", "corrected_accuracy"):
        values = [getattr(r, key) for r in reports]
        if any(v is None for v in values):
            continue
        cell = MetricCell.of(values)
        summary[key] = {"mean": cell.mean, "std": cell.std}
    summary["runs"] = len(reports)
    return summary


# ---------- scrittura ----------


def write_report(report, json_path=None, csv_path=None) -> None:
    """JSON completo e CSV a riga singola con colonne appiattite."""
    data = report.to_dict()
    if json_path:
        Path(json_path).parent.mkdir(parents=True, exist_ok=True)
        Path(json_path).write_text(json.dumps(data, indent=2, default=str), encoding="utf-8")
    if csv_path:
        Path(csv_path).parent.mkdir(parents=True, exist_ok=True)
        pd.json_normalize(data).to_csv(csv_path, index=False)
    logger.info("Report %s scritto (%s, %s)", type(report).__name__, json_path, csv_path)
