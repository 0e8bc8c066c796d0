"""
Collaboratori offline per i test: encoder mock, testa con pesi fissati a
mano, parse fissati e reader a span piantati su un set di 10 domande
"How many more X were there than Y?".
"""
import json
from pathlib import Path

import jsonlines
import numpy as np
import pytest

from reasoning.encoders import MockEncoder
from reasoning.ingest import AnswerValue, Passage, Question, QuestionSet, export_question_set
from reasoning.parsing import DependencyParse, ScriptedAnalyzer
from reasoning.pointer import LearnedPointerModel, PointerHead, save_head
from reasoning.readers import MockReader

FIXTURES = Path(__file__).parent / "fixtures"

# (entità 1, valore 1, entità 2, valore 2)
SUBTRACTION_ITEMS = [
    ("cats", "12", "dogs", "5"),
    ("households", "1,200", "families", "950"),
    ("Germans", "3.5", "Italians", "1.25"),
    ("touchdowns", "4", "interceptions", "7"),
    ("men", "48.6", "women", "51.4"),
    ("Catholics", "22", "Protestants", "22"),
    ("buses", "310", "trains", "95"),
    ("wins", "11", "losses", "5"),
    ("apples", "0.5", "pears", "2"),
    ("soldiers", "10,000", "civilians", "2,500"),
]

QUESTION = "How many more {} were there than {}?"
SUBQUESTION = "How many {} were there?"

# How many more X were there than Y ?
TAGS = ("WRB", "JJ", "JJR", "NNS", "VBD", "EX", "IN", "NNS", ".")
HEADS = (1, 3, 3, 4, None, 4, 4, 6, 4)
POINTERS = (3, 3, 7, 7)


def expected_answer(v1: str, v2: str) -> str:
    from decimal import Decimal

    from reasoning.templates import format_answer

    a, b = Decimal(v1.replace(",", "")), Decimal(v2.replace(",", ""))
    return format_answer(abs(a - b))


def passage_text(e1, v1, e2, v2) -> str:
    return f"The census counted several groups. {e1}: {v1} in 2010. {e2}: {v2} in 2010."


def hand_set_weights(hidden_size: int = 32, positions=POINTERS, value: float = 10.0) -> np.ndarray:
    """Colonna j con peso `value` sulla componente one-hot della posizione positions[j]."""
    weights = np.zeros((hidden_size, 4))
    for j, p in enumerate(positions):
        weights[p, j] = value
    return weights


@pytest.fixture
def subtraction_set() -> QuestionSet:
    items, passages = [], {}
    for k, (e1, v1, e2, v2) in enumerate(SUBTRACTION_ITEMS):
        pid = f"p{k}"
        passages[pid] = Passage(pid, passage_text(e1, v1, e2, v2))
        items.append(Question(f"q{k}", QUESTION.format(e1, e2), pid,
                              AnswerValue(number=expected_answer(v1, v2))))
    return QuestionSet(tuple(items), passages, ("fixture",))


@pytest.fixture
def mock_encoder() -> MockEncoder:
    return MockEncoder(positions=16, hash_dim=16)


@pytest.fixture
def pointer_head() -> PointerHead:
    return PointerHead(32, hand_set_weights())


@pytest.fixture
def pointer_model(mock_encoder, pointer_head) -> LearnedPointerModel:
    return LearnedPointerModel(mock_encoder, pointer_head)


def parse_records():
    return [
        {"question": QUESTION.format(e1, e2), "tags": list(TAGS), "heads": list(HEADS)}
        for e1, _, e2, _ in SUBTRACTION_ITEMS
    ]


@pytest.fixture
def scripted_parser() -> ScriptedAnalyzer:
    return ScriptedAnalyzer.from_records(parse_records())


def reader_spans():
    spans = {}
    for e1, v1, e2, v2 in SUBTRACTION_ITEMS:
        spans[SUBQUESTION.format(e1)] = f"{e1}: {v1} in 2010"
        spans[SUBQUESTION.format(e2)] = f"{e2}: {v2} in 2010"
    return spans


@pytest.fixture
def mock_reader() -> MockReader:
    return MockReader(reader_spans())


@pytest.fixture
def example_parse() -> DependencyParse:
    return DependencyParse(TAGS, HEADS)


@pytest.fixture
def pipeline_files(tmp_path, subtraction_set, pointer_head):
    """Tutti i file per un'esecuzione offline dei comandi e del task."""
    questions = tmp_path / "questions.jsonl"
    export_question_set(subtraction_set, questions)

    parses = tmp_path / "parses.jsonl"
    with jsonlines.open(parses, mode="w") as writer:
        writer.write_all(parse_records())

    spans = tmp_path / "spans.json"
    spans.write_text(json.dumps(reader_spans()), encoding="utf-8")

    weights_dir = tmp_path / "models"
    save_head(pointer_head, weights_dir / "pointer_seed1.npz")

    config = tmp_path / "config.json"
    config.write_text(json.dumps({
        "paths": {
            "weights_dir": str(weights_dir),
            "reports_dir": str(tmp_path / "reports"),
            "output_dir": str(tmp_path / "out"),
        },
        "encoder": {"backend": "mock", "max_length": 64},
        "reader": {"backend": "mock", "spans_file": str(spans)},
        "parser": {"adapter": "scripted", "parses_file": str(parses)},
        "seeds": [1],
        "template": "subtraction",
        "device": "cpu",
    }), encoding="utf-8")

    return {
        "dir": tmp_path,
        "questions": questions,
        "parses": parses,
        "spans": spans,
        "weights_dir": weights_dir,
        "config": config,
    }
