import json
import math

import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings, strategies as st

from reasoning.evaluation import (
    AccuracyReport,
    MetricCell,
    SimilarityReport,
    StaticVectors,
    SubquestionSimilarity,
    accuracy_summary,
    aggregate_reports,
    aggregate_similarity,
    answers_match,
    avg_embedding_cosine,
    entity_overlap_metrics,
    exact_match_accuracy,
    normalize_number,
    pointer_metrics,
    pointer_metrics_seeds,
    pointer_spans,
    similarity_report,
    wmd,
    write_report,
)
from reasoning.exceptions import EvaluationError, SimilarityError
from reasoning.templates import ErrorCode, TemplateTrace

from .conftest import FIXTURES

VECTORS = StaticVectors({
    "a": [0.0, 0.0],
    "b": [3.0, 4.0],
    "c": [1.0, 0.0],
    "d": [0.0, 1.0],
    "e": [2.0, 0.0],
})


# ---------- puntatori e sovrapposizione ----------


def test_pointer_metrics_perfect():
    golds = [(3, 3, 7, 7), (0, 1, 2, 5)]
    report = pointer_metrics(golds, golds)
    assert report.all.mean == 100.0
    assert report.p1.mean == report.p4.mean == 100.0


def test_pointer_metrics_half():
    report = pointer_metrics([(3, 3, 7, 7), (0, 1, 2, 4)], [(3, 3, 7, 7), (0, 1, 2, 5)])
    assert report.all.mean == 50.0
    assert report.p3.mean == 100.0
    assert report.p4.mean == 50.0


def test_pointer_metrics_length_mismatch():
    with pytest.raises(EvaluationError):
        pointer_metrics([(0, 0, 0, 0)], [])


_quads = st.lists(st.integers(0, 6), min_size=4, max_size=4).map(lambda q: tuple(sorted(q)))


@settings(max_examples=500)
@given(st.lists(st.tuples(_quads, _quads), min_size=1, max_size=20))
def test_all_pointer_accuracy_bounded_by_each_pointer(pairs):
    report = pointer_metrics([p for p, _ in pairs], [g for _, g in pairs])
    per = [report.p1.mean, report.p2.mean, report.p3.mean, report.p4.mean]
    assert report.all.mean <= min(per) + 1e-9
    assert all(0.0 <= v <= 100.0 for v in per + [report.all.mean])


def test_seed_aggregation_with_identical_predictions_has_zero_std():
    golds = [(3, 3, 7, 7), (0, 1, 2, 5)]
    preds = [(3, 3, 7, 7), (0, 0, 2, 5)]
    report = pointer_metrics_seeds([preds, preds, preds], golds)
    assert report.seeds == 3
    assert report.p2.std == 0.0
    assert report.all == MetricCell(50.0, 0.0)


def test_seed_aggregation_mean_and_std():
    golds = [(1, 1, 2, 2)]
    report = pointer_metrics_seeds([[(1, 1, 2, 2)], [(0, 1, 2, 2)]], golds)
    assert report.p1.mean == 50.0
    assert report.p1.std == 50.0
    assert str(report.p1) == "50.00 ± 50.00"


def test_aggregate_rejects_mixed_reports():
    golds = [(0, 0, 1, 1)]
    overlap = entity_overlap_metrics([pointer_spans(golds[0])], [pointer_spans(golds[0])])
    with pytest.raises(EvaluationError):
        aggregate_reports([pointer_metrics(golds, golds), overlap])
    with pytest.raises(EvaluationError):
        aggregate_reports([])


def test_overlap_identical_spans():
    spans = [({1, 2}, {5})]
    report = entity_overlap_metrics(spans, spans)
    assert report.entity1.f1.mean == report.entity1.precision.mean == report.entity1.recall.mean == 1.0


def test_overlap_hand_computed():
    report = entity_overlap_metrics([({3, 4}, {8})], [({4, 5}, {8})])
    assert report.entity1.precision.mean == pytest.approx(0.5)
    assert report.entity1.recall.mean == pytest.approx(0.5)
    assert report.entity1.f1.mean == pytest.approx(0.5)
    assert report.entity2.f1.mean == 1.0


def test_overlap_skips_empty_gold():
    report = entity_overlap_metrics([({1}, {2}), ({1}, {2})], [(set(), {2}), ({1}, {2})])
    assert report.skipped == 1
    assert report.items == 1


def test_overlap_macro_average():
    report = entity_overlap_metrics(
        [({0}, {5}), ({0, 1, 2, 3}, {5})],
        [({0}, {5}), ({0}, {5})],
    )
    # (1 + 0.25) / 2 sulla precisione, non 2/5 micro
    assert report.entity1.precision.mean == pytest.approx(0.625)


# ---------- similarità ----------


def test_wmd_identical_is_zero():
    assert wmd("a b c", "c b a", VECTORS) == 0.0


def test_wmd_hand_solved_two_by_two():
    # masse 1/2 ciascuna; accoppiamento ottimo a<->c (1) e b<->d (sqrt(18))
    expected = 0.5 * 1.0 + 0.5 * math.sqrt(9 + 9)
    assert wmd("a b", "c d", VECTORS) == pytest.approx(expected, rel=1e-6)


def test_wmd_single_words_is_euclidean_distance():
    assert wmd("a", "b", VECTORS) == pytest.approx(5.0)


def test_wmd_out_of_vocabulary():
    with pytest.raises(SimilarityError):
        wmd("zzz", "a", VECTORS)


_sentences = st.lists(st.sampled_from("abcde"), min_size=1, max_size=6).map(" ".join)


@settings(max_examples=500, deadline=None)
@given(_sentences, _sentences)
def test_wmd_symmetric_and_non_negative(x, y):
    assert wmd(x, y, VECTORS) >= 0.0
    assert wmd(x, y, VECTORS) == pytest.approx(wmd(y, x, VECTORS), abs=1e-7)


def test_cosine_identical_and_orthogonal():
    assert avg_embedding_cosine("c d", "d c", VECTORS) == 1.0
    assert avg_embedding_cosine("c", "d", VECTORS) == pytest.approx(0.0)


def test_cosine_zero_mean_vector():
    with pytest.raises(SimilarityError):
        avg_embedding_cosine("a", "c", VECTORS)


@settings(max_examples=500)
@given(_sentences.filter(lambda s: set(s.split()) != {"a"}),
       _sentences.filter(lambda s: set(s.split()) != {"a"}))
def test_cosine_symmetric_and_bounded(x, y):
    value = avg_embedding_cosine(x, y, VECTORS)
    assert -1.0 <= value <= 1.0
    assert value == pytest.approx(avg_embedding_cosine(y, x, VECTORS))


def test_cosine_scale_invariant():
    # "c e" ha media (1.5, 0): stessa direzione di "c"
    assert avg_embedding_cosine("c e", "d", VECTORS) == pytest.approx(avg_embedding_cosine("c", "d", VECTORS))
    assert avg_embedding_cosine("c e", "c", VECTORS) == pytest.approx(1.0)


def test_similarity_report_counts_undefined_pairs():
    vectors = StaticVectors.from_file(FIXTURES / "vectors.json")
    report = similarity_report(
        [("How many cats were there?", "How many cats were there?"), ("qqq", "How many?")],
        [("How many dogs were there?", "How many dogs there?")],
        vectors,
    )
    assert report.q1.pairs == 2 and report.q1.undefined == 1
    assert report.q1.wmd_median == 0.0
    assert report.q1.cosine_min == 1.0
    assert report.q2.wmd_max > 0.0
    assert -1.0 <= report.q2.cosine_avg <= 1.0


def _sub(wmd_max, pairs=2, undefined=0):
    if wmd_max is None:
        return SubquestionSimilarity(None, None, None, None, None, None, pairs, undefined)
    return SubquestionSimilarity(wmd_max, wmd_max, wmd_max, 1.0, 1.0, 1.0, pairs, undefined)


def test_similarity_aggregated_over_runs():
    summary = aggregate_similarity([
        SimilarityReport(_sub(0.0), _sub(None, undefined=2)),
        SimilarityReport(_sub(2.0), _sub(None, undefined=2)),
    ])
    assert summary.seeds == 2
    assert summary.pairs == 4
    assert summary.undefined == 4
    assert summary.q1["wmd_max"] == MetricCell(1.0, 1.0)
    assert summary.q1["cosine_min"] == MetricCell(1.0, 0.0)
    # nessuna run misura q2
    assert summary.q2["wmd_avg"] is None
    with pytest.raises(EvaluationError):
        aggregate_similarity([])


def test_similarity_summary_skips_runs_without_measures(tmp_path):
    summary = aggregate_similarity([
        SimilarityReport(_sub(3.0), _sub(1.0)),
        SimilarityReport(_sub(None), _sub(1.0)),
    ])
    assert summary.q1["wmd_max"] == MetricCell(3.0, 0.0)
    write_report(summary, tmp_path / "s.json", tmp_path / "s.csv")
    assert json.loads((tmp_path / "s.json").read_text())["q2"]["wmd_max"] == {"mean": 1.0, "std": 0.0}


# ---------- exact match ----------


def trace(qid, answer, code=ErrorCode.NONE):
    return TemplateTrace(qid, "", "subtraction", final_answer=answer, error_code=code)


@pytest.mark.parametrize("predicted,gold,expected", [
    ("5", "5.0", True),
    ("1000", "1,000", True),
    ("53.2", "53.2%", True),
    ("-3", "−3", True),
    ("5", "6", False),
    (None, "5", False),
    ("five", "5", False),
])
def test_answers_match(predicted, gold, expected):
    assert answers_match(predicted, gold) is expected


def test_normalize_rejects_nan():
    assert normalize_number("NaN") is None
    assert normalize_number("Infinity") is None


def test_exact_match_accuracy_counts_failures():
    traces = [trace("a", "5"), trace("b", None, ErrorCode.MISSING_OPERAND), trace("c", "2")]
    report = exact_match_accuracy(traces, {"a": "5.0", "b": "3", "c": "4"})
    assert report.correct == 1 and report.total == 3
    assert report.accuracy == pytest.approx(100 / 3)
    assert report.error_counts["missing_operand"] == 1


def test_all_failed_gives_zero_and_histogram():
    traces = [trace("a", None, ErrorCode.INVALID_POINTERS), trace("b", None, ErrorCode.OVER_LENGTH)]
    report = exact_match_accuracy(traces, {"a": "1", "b": "2"})
    assert report.accuracy == 0.0
    assert report.error_counts["invalid_pointers"] == 1
    assert report.error_counts["over_length"] == 1


def test_non_numeric_gold_excluded():
    report = exact_match_accuracy([trace("a", "5"), trace("b", "1")], {"a": "5", "b": ""})
    assert report.non_numeric == ("b",)
    assert report.total == 1 and report.accuracy == 100.0


def test_relabel_overlay_columns():
    traces = [trace("q0", "7"), trace("q1", "250"), trace("q2", "9"), trace("q3", "1")]
    golds = {"q0": "7", "q1": "250", "q2": "8", "q3": "2"}
    overlay = {"q1": "251", "q2": "invalid"}
    report = exact_match_accuracy(traces, golds, overlay)
    assert report.accuracy == 50.0
    # senza q1 e q2: q0 giusta, q3 sbagliata
    assert report.relabeled_accuracy == 50.0
    # q1 coincide con l'etichetta scartata
    assert report.mislabeled_match == 1
    # q1 ora sbagliata (251), q2 eliminata
    assert report.corrected_accuracy == pytest.approx(100 / 3)


@settings(max_examples=500)
@given(st.lists(st.tuples(st.integers(0, 5), st.integers(0, 5)), min_size=1, max_size=15), st.randoms())
def test_exact_match_is_permutation_invariant(pairs, rnd):
    traces = [trace(f"q{k}", str(p)) for k, (p, _) in enumerate(pairs)]
    golds = {f"q{k}": str(g) for k, (_, g) in enumerate(pairs)}
    shuffled = list(traces)
    rnd.shuffle(shuffled)
    assert exact_match_accuracy(shuffled, golds) == exact_match_accuracy(traces, golds)


def test_write_report_json_and_csv(tmp_path):
    report = pointer_metrics([(3, 3, 7, 7)], [(3, 3, 7, 7)])
    write_report(report, tmp_path / "r.json", tmp_path / "r.csv")
    data = json.loads((tmp_path / "r.json").read_text())
    assert data["all"]["mean"] == 100.0
    frame = pd.read_csv(tmp_path / "r.csv")
    assert frame.loc[0, "p1.mean"] == 100.0
    assert len(frame) == 1


def test_write_accuracy_report(tmp_path):
    report = AccuracyReport(accuracy=50.0, correct=1, total=2, error_counts={"none": 2})
    write_report(report, tmp_path / "acc.json")
    assert json.loads((tmp_path / "acc.json").read_text())["non_numeric"] == []
    assert not (tmp_path / "acc.csv").exists()
    assert np.isclose(report.accuracy, 50.0)


def test_accuracy_summary_with_overlay_columns():
    traces = [trace("q0", "7"), trace("q1", "250"), trace("q2", "9"), trace("q3", "1")]
    golds = {"q0": "7", "q1": "250", "q2": "8", "q3": "2"}
    overlay = {"q1": "251", "q2": "invalid"}
    fixed = [trace("q0", "7"), trace("q1", "251"), trace("q2", "8"), trace("q3", "2")]
    summary = accuracy_summary([
        exact_match_accuracy(traces, golds, overlay),
        exact_match_accuracy(fixed, golds, overlay),
    ])
    assert summary["runs"] == 2
    assert summary["accuracy"] == {"mean": 62.5, "std": 12.5}
    assert summary["relabeled_accuracy"] == {"mean": 75.0, "std": 25.0}
    assert summary["corrected_accuracy"]["mean"] == pytest.approx((100 / 3 + 100) / 2)


def test_accuracy_summary_without_overlay():
    report = exact_match_accuracy([trace("a", "5")], {"a": "5"})
    assert accuracy_summary([report, report]) == {"accuracy": {"mean": 100.0, "std": 0.0}, "runs": 2}
