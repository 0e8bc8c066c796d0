from collections import Counter

import pytest
from hypothesis import given, settings, strategies as st

from reasoning.decomposer import chunk, generate_subquestions, prune_middle, strip_comparatives
from reasoning.exceptions import InvalidDecompositionError
from reasoning.parsing import DependencyParse
from reasoning.pointer import PointerPrediction
from reasoning.words import tokenize_words

from .conftest import POINTERS, QUESTION

HOUSEHOLDS = "How many more households are there than married couples living together?"
HOUSEHOLDS_P = PointerPrediction((3, 3, 7, 10), 1.0)
#       How    many  more   households are    there than  married couples living together ?
TAGS = ("WRB", "JJ", "JJR", "NNS",     "VBP", "EX", "IN", "JJ",   "NNS",  "VBG", "RB",    ".")


def households_parse(heads):
    return DependencyParse(TAGS, heads)


# than -> are: si rimuove solo "than"
STANDARD = households_parse((1, 3, 3, 4, None, 4, 4, 8, 6, 8, 9, 4))
# than -> there -> are: catena tutta nella parte centrale
CHAIN = households_parse((1, 3, 3, 4, None, 4, 5, 8, 6, 8, 9, 4))
# couples attaccato direttamente al verbo principale fuori dalla parte centrale
OUTSIDE = households_parse((1, 3, 3, 11, 11, 4, 4, 8, 3, 8, 9, None))


def test_chunk_running_example():
    chunks = chunk(tokenize_words(HOUSEHOLDS), HOUSEHOLDS_P)
    assert chunks.part1 == ("How", "many", "more")
    assert chunks.ent1 == ("households",)
    assert chunks.middle == ("are", "there", "than")
    assert chunks.ent2 == ("married", "couples", "living", "together")
    assert chunks.part2 == ("?",)
    assert chunks.words() == tuple(tokenize_words(HOUSEHOLDS))


def test_chunk_with_empty_parts():
    chunks = chunk(["a", "b"], PointerPrediction((0, 0, 1, 1), 1.0))
    assert chunks.part1 == () and chunks.middle == () and chunks.part2 == ()
    assert chunks.ent1 == ("a",) and chunks.ent2 == ("b",)


def test_chunk_rejects_out_of_range_pointers():
    with pytest.raises(InvalidDecompositionError):
        chunk(["a", "b"], PointerPrediction((0, 0, 1, 2), 1.0))


@pytest.mark.parametrize("words,tags,expected", [
    (["How", "many", "more"], ["WRB", "JJ", "JJR"], ("How", "many")),
    (["How", "many"], ["WRB", "JJ"], ("How", "many")),
    (["How", "many", "fewer", "yards", "longer"], ["WRB", "JJ", "JJR", "NNS", "RBR"], ("How", "many", "yards")),
])
def test_strip_comparatives(words, tags, expected):
    parse = DependencyParse(tuple(tags), tuple([None] + [0] * (len(tags) - 1)))
    assert strip_comparatives(words, parse) == expected


def test_prune_middle_standard_parse():
    chunks = chunk(tokenize_words(HOUSEHOLDS), HOUSEHOLDS_P)
    assert prune_middle(chunks, STANDARD) == ("are", "there")


def test_prune_middle_follows_chain_to_root():
    chunks = chunk(tokenize_words(HOUSEHOLDS), HOUSEHOLDS_P)
    assert prune_middle(chunks, CHAIN) == ()


def test_prune_middle_parent_outside_middle():
    chunks = chunk(tokenize_words(HOUSEHOLDS), HOUSEHOLDS_P)
    assert prune_middle(chunks, OUTSIDE) == ("are", "there", "than")


def test_generate_subquestions_running_example():
    d = generate_subquestions(HOUSEHOLDS, HOUSEHOLDS_P, STANDARD)
    assert d.q1 == "How many households are there?"
    assert d.q2 == "How many married couples living together are there?"
    assert d.removed_words == (("more", "comparative"), ("than", "middle-prune"))


def test_subtraction_fixture_question(example_parse):
    d = generate_subquestions(QUESTION.format("cats", "dogs"), PointerPrediction(POINTERS, 1.0), example_parse)
    assert d.subquestions == ("How many cats were there?", "How many dogs were there?")


def test_identical_entities_give_identical_subquestions():
    d = generate_subquestions(HOUSEHOLDS, PointerPrediction((3, 3, 3, 3), 1.0), STANDARD)
    assert d.q1 == d.q2


def test_empty_middle():
    question = "How many more cats dogs?"
    parse = DependencyParse(("WRB", "JJ", "JJR", "NNS", "NNS", "."), (1, 3, 3, None, 3, 3))
    d = generate_subquestions(question, PointerPrediction((3, 3, 4, 4), 1.0), parse)
    assert d.q1 == "How many cats?"
    assert d.q2 == "How many dogs?"


# (domanda, puntatori, tag, teste, q1, q2, parole rimosse)
TRACED = [
    pytest.param(
        "How many more points did the Bears score than the Lions?", (5, 6, 9, 10),
        ("WRB", "JJ", "JJR", "NNS", "VBD", "DT", "NNPS", "VB", "IN", "DT", "NNPS", "."),
        (1, 3, 3, 7, 7, 6, 7, None, 2, 10, 8, 7),
        "How many points did the Bears score?", "How many points did the Lions score?",
        (("more", "comparative"), ("than", "middle-prune")),
        id="than-attached-to-comparative",
    ),
    pytest.param(
        "How many fewer yards did Smith run than Jones?", (5, 5, 8, 8),
        ("WRB", "JJ", "JJR", "NNS", "VBD", "NNP", "VB", "IN", "NNP", "."),
        (1, 3, 3, 6, 6, 6, None, 2, 7, 6),
        "How many yards did Smith run?", "How many yards did Jones run?",
        (("fewer", "comparative"), ("than", "middle-prune")),
        id="fewer",
    ),
    pytest.param(
        "How many more yards longer was Smith's run than Jones's run?", (6, 7, 9, 10),
        ("WRB", "JJ", "JJR", "NNS", "RBR", "VBD", "NNP", "NN", "IN", "NNP", "NN", "."),
        (1, 3, 3, 4, 5, None, 7, 5, 4, 10, 8, 5),
        "How many yards was Smith's run?", "How many yards was Jones's run?",
        (("more", "comparative"), ("longer", "comparative"), ("than", "middle-prune")),
        id="two-comparatives",
    ),
    pytest.param(
        "How many more cats were there compared to dogs?", (3, 3, 8, 8),
        ("WRB", "JJ", "JJR", "NNS", "VBD", "EX", "VBN", "IN", "NNS", "."),
        (1, 3, 3, 4, None, 4, 4, 6, 7, 4),
        "How many cats were there?", "How many dogs were there?",
        (("more", "comparative"), ("compared", "middle-prune"), ("to", "middle-prune")),
        id="compared-to",
    ),
    pytest.param(
        "How many more points did the Bears score in the first half than the Lions?",
        (5, 6, 13, 14),
        ("WRB", "JJ", "JJR", "NNS", "VBD", "DT", "NNPS", "VB", "IN", "DT", "JJ", "NN",
         "IN", "DT", "NNPS", "."),
        (1, 3, 3, 7, 7, 6, 7, None, 7, 11, 11, 8, 7, 14, 12, 7),
        "How many points did the Bears score in the first half?",
        "How many points did the Lions score in the first half?",
        (("more", "comparative"), ("than", "middle-prune")),
        id="jump-to-the-left-stops",
    ),
    pytest.param(
        "How many less interceptions did Manning throw than Brady?", (5, 5, 8, 8),
        ("WRB", "JJ", "JJR", "NNS", "VBD", "NNP", "VB", "IN", "NNP", "."),
        (1, 3, 3, 6, 6, 6, None, 6, 7, 6),
        "How many interceptions did Manning?", "How many interceptions did Brady?",
        (("less", "comparative"), ("throw", "middle-prune"), ("than", "middle-prune")),
        id="final-verb-dropped",
    ),
    pytest.param(
        "How many more men than women were there in 2010?", (3, 3, 5, 5),
        ("WRB", "JJ", "JJR", "NNS", "IN", "NNS", "VBD", "EX", "IN", "CD", "."),
        (1, 3, 3, 6, 2, 4, None, 6, 6, 8, 6),
        "How many men were there in 2010?", "How many women were there in 2010?",
        (("more", "comparative"), ("than", "middle-prune")),
        id="empty-part-after-than",
    ),
    pytest.param(
        "How many more cats than dogs were older?", (3, 3, 5, 5),
        ("WRB", "JJ", "JJR", "NNS", "IN", "NNS", "VBD", "JJR", "."),
        (1, 3, 3, 6, 2, 4, None, 6, 6),
        "How many cats were older?", "How many dogs were older?",
        (("more", "comparative"), ("than", "middle-prune")),
        id="comparative-after-entities-kept",
    ),
    pytest.param(
        "How many years after the Battle of Hastings was the Domesday Book completed?",
        (4, 7, 9, 12),
        ("WRB", "JJ", "NNS", "IN", "DT", "NNP", "IN", "NNP", "VBD", "DT", "NNP", "NNP", "VBN", "."),
        (1, 2, 3, 12, 5, 3, 5, 6, 12, 11, 11, 12, None, 12),
        "How many years after the Battle of Hastings was?",
        "How many years after the Domesday Book completed was?",
        (),
        id="years-after-second-entity-is-root",
    ),
    pytest.param(
        HOUSEHOLDS, (3, 3, 7, 10), TAGS, CHAIN.heads,
        "How many households?", "How many married couples living together?",
        (("more", "comparative"), ("are", "middle-prune"), ("there", "middle-prune"),
         ("than", "middle-prune")),
        id="chain-to-root",
    ),
    pytest.param(
        HOUSEHOLDS, (3, 3, 7, 10), TAGS, OUTSIDE.heads,
        "How many households are there than?",
        "How many married couples living together are there than?",
        (("more", "comparative"),),
        id="parent-outside-middle",
    ),
]


@pytest.mark.parametrize("question,pointers,tags,heads,q1,q2,removed", TRACED)
def test_generate_subquestions_traced(question, pointers, tags, heads, q1, q2, removed):
    parse = DependencyParse(tuple(tags), tuple(heads))
    assert len(parse) == len(tokenize_words(question))
    d = generate_subquestions(question, PointerPrediction(pointers, 1.0), parse)
    assert d.q1 == q1
    assert d.q2 == q2
    assert d.removed_words == removed


def test_parse_of_wrong_length():
    with pytest.raises(InvalidDecompositionError):
        generate_subquestions(HOUSEHOLDS, HOUSEHOLDS_P, DependencyParse(("NN",), (None,)))


@st.composite
def decomposition_inputs(draw):
    n = draw(st.integers(2, 12))
    # parole distinte: le proprietà di esclusione valgono senza ambiguità
    words = [f"w{k}" for k in range(n)]
    s1 = draw(st.integers(0, n - 2))
    e1 = draw(st.integers(s1, n - 2))
    s2 = draw(st.integers(e1 + 1, n - 1))
    e2 = draw(st.integers(s2, n - 1))
    p = (s1, e1, s2, e2)
    tags = draw(st.lists(st.sampled_from(["NN", "JJR", "RBR", "VB", "IN"]), min_size=n, max_size=n))
    # albero casuale: ogni nodo punta a un nodo precedente in un ordine permutato
    order = draw(st.permutations(list(range(n))))
    heads = [None] * n
    for rank, node in enumerate(order[1:], start=1):
        heads[node] = order[draw(st.integers(0, rank - 1))]
    return " ".join(words), PointerPrediction(tuple(p), 1.0), DependencyParse(tuple(tags), tuple(heads))


@settings(max_examples=10_000)
@given(decomposition_inputs())
def test_decomposition_properties(inputs):
    question, p, parse = inputs
    words = tokenize_words(question)
    d = generate_subquestions(question, p, parse)
    assert d == generate_subquestions(question, p, parse)
    assert d.chunks.words() == tuple(words)

    original = Counter(words)
    for sub_words, ent in ((d.q1_words, d.chunks.ent1), (d.q2_words, d.chunks.ent2)):
        assert not Counter(sub_words) - original
        assert sub_words
        k = len(ent)
        assert any(sub_words[i:i + k] == ent for i in range(len(sub_words) - k + 1))

    if not set(d.chunks.ent1) & set(d.chunks.ent2):
        assert not set(d.q1_words) & set(d.chunks.ent2)
        assert not set(d.q2_words) & set(d.chunks.ent1)
