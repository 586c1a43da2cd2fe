import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from synthpriv.dataset import ColumnKind, DataError, Schema, Table
from synthpriv.distance import (
    DistanceKind,
    DistanceSpec,
    Normalization,
    WeightProvenance,
    WeightVector,
    inverse_entropy_weights,
    knn_between,
    nn_between,
    nn_within,
    record_distance,
)

from .conftest import numeric_table, oracle_distance, oracle_nn, random_mixed

NUM, CAT = ColumnKind.NUMERIC, ColumnKind.CATEGORICAL
XY = Schema.of(("x", "numeric"), ("y", "numeric"))
MIXED = Schema.of(("n", "numeric"), ("c", "categorical"))


def test_euclidean_3_4_5():
    assert record_distance([0.0, 0.0], [3.0, 4.0], DistanceSpec(DistanceKind.EUCLIDEAN), XY) == 5.0


def test_gower_hand_example():
    spec = DistanceSpec(DistanceKind.GOWER, ranges=(10.0, 1.0))
    assert record_distance([2.0, "a"], [7.0, "b"], spec, MIXED) == 0.75


def test_hamming_weighted():
    schema = Schema.of(("a", "categorical"), ("b", "categorical"), ("c", "categorical"))
    spec = DistanceSpec(DistanceKind.HAMMING, WeightVector((1.0, 2.0, 4.0)))
    assert record_distance(["x", "y", "z"], ["x", "q", "w"], spec, schema) == 6.0


@pytest.mark.parametrize("kind", list(DistanceKind))
def test_identity(kind):
    schema = Schema.of(("c", "categorical")) if kind is DistanceKind.HAMMING else (
        XY if kind is DistanceKind.EUCLIDEAN else MIXED)
    rec = ["q"] if kind is DistanceKind.HAMMING else ([1.5, 2.5] if kind is DistanceKind.EUCLIDEAN else [1.5, "q"])
    spec = DistanceSpec(kind, ranges=(2.0,) * len(schema))
    assert record_distance(rec, rec, spec, schema) == 0.0


def test_spec_schema_mismatch():
    with pytest.raises(DataError, match="all-numeric"):
        record_distance([1.0, "a"], [1.0, "a"], DistanceSpec(DistanceKind.EUCLIDEAN), MIXED)
    with pytest.raises(DataError, match="all-categorical"):
        record_distance([1.0, 1.0], [1.0, 1.0], DistanceSpec(DistanceKind.HAMMING), XY)
    with pytest.raises(DataError, match="resolve"):
        record_distance([1.0, "a"], [1.0, "a"], DistanceSpec(DistanceKind.GOWER), MIXED)
    with pytest.raises(DataError, match="weight vector"):
        record_distance([1.0, 1.0], [1.0, 1.0], DistanceSpec(DistanceKind.EUCLIDEAN, WeightVector((1.0,))), XY)


def test_missing_value_rejected():
    with pytest.raises(DataError, match="missing"):
        record_distance([1.0, None], [1.0, "a"], DistanceSpec(DistanceKind.GOWER, ranges=(1.0, 1.0)), MIXED)


def test_weight_vector_invariants():
    with pytest.raises(DataError):
        WeightVector((0.0, 0.0))
    with pytest.raises(DataError):
        WeightVector((1.0, -1.0))
    with pytest.raises(DataError):
        WeightVector((1.0, math.inf))


def test_inverse_entropy_weights():
    schema = Schema.of(("four", "categorical"), ("two", "categorical"), ("const", "categorical"))
    rows = [[a, b, "k"] for a, b in zip("abcdabcd", "xyxyxyxy")]
    w = inverse_entropy_weights(Table.from_rows(schema, rows))
    assert w.weights == pytest.approx((0.5, 1.0, 0.0))
    assert w.excluded == (False, False, True)
    assert w.provenance is WeightProvenance.INVERSE_ENTROPY


def test_inverse_entropy_single_balanced_binary():
    t = Table.from_rows(Schema.of(("b", "categorical")), [["0"], ["1"]] * 3)
    assert inverse_entropy_weights(t).weights == (1.0,)


def test_inverse_entropy_all_constant():
    with pytest.raises(DataError, match="zero entropy"):
        inverse_entropy_weights(numeric_table([2.0, 2.0, 2.0]))


def test_nn_between_examples():
    q = Table.from_rows(XY, [[0.0, 0.0]])
    t = Table.from_rows(XY, [[3.0, 4.0], [6.0, 8.0]])
    nn = nn_between(q, t, DistanceSpec(DistanceKind.EUCLIDEAN))
    assert nn.indices.tolist() == [0] and nn.distances.tolist() == [5.0]


def test_nn_between_self():
    t = Table.from_rows(XY, [[0.0, 1.0], [2.0, 3.0], [5.0, 5.0]])
    nn = nn_between(t, t, DistanceSpec(DistanceKind.EUCLIDEAN))
    assert nn.indices.tolist() == [0, 1, 2]
    assert nn.distances.tolist() == [0.0, 0.0, 0.0]


def test_nn_within_examples():
    nn = nn_within(numeric_table([0.0, 10.0, 11.0]), DistanceSpec(DistanceKind.EUCLIDEAN))
    assert nn.distances.tolist() == [10.0, 1.0, 1.0]
    assert nn.indices.tolist() == [1, 2, 1]
    dup = nn_within(numeric_table([4.0, 4.0, 9.0]), DistanceSpec(DistanceKind.EUCLIDEAN))
    assert dup.distances.tolist()[:2] == [0.0, 0.0]
    with pytest.raises(DataError):
        nn_within(numeric_table([1.0]), DistanceSpec(DistanceKind.EUCLIDEAN))


def test_ties_go_to_smallest_index():
    t = numeric_table([-1.0, 1.0, 1.0, -1.0])
    nn = nn_between(numeric_table([0.0]), t, DistanceSpec(DistanceKind.EUCLIDEAN))
    assert nn.indices.tolist() == [0]


def test_schema_mismatch_between_tables():
    with pytest.raises(DataError, match="schema mismatch"):
        nn_between(numeric_table([1.0]), numeric_table([1.0], name="y"), DistanceSpec(DistanceKind.EUCLIDEAN))


def _spec_for(kind, kinds, reference, rng):
    if kind is DistanceKind.EUCLIDEAN and set(kinds) != {NUM}:
        kind = DistanceKind.MIXED_EUCLIDEAN
    w = WeightVector(tuple(rng.uniform(0.1, 2.0, len(kinds))))
    norm = Normalization.MINMAX_OF_REFERENCE if rng.random() < 0.5 else Normalization.NONE
    return DistanceSpec(kind, w, norm).resolve(reference)


@pytest.mark.parametrize("kind", [DistanceKind.GOWER, DistanceKind.EUCLIDEAN, DistanceKind.HAMMING])
def test_kernels_match_double_loop_oracle(kind, rng):
    for trial in range(15):
        if kind is DistanceKind.HAMMING:
            kinds = [CAT] * int(rng.integers(1, 4))
        elif kind is DistanceKind.EUCLIDEAN and trial % 2 == 0:
            kinds = [NUM] * int(rng.integers(1, 4))
        else:
            kinds = [NUM if rng.random() < 0.5 else CAT for _ in range(int(rng.integers(1, 5)))]
        integer = trial % 3 == 0
        q = random_mixed(rng, int(rng.integers(1, 30)), kinds, integer=integer)
        t = random_mixed(rng, int(rng.integers(2, 30)), kinds, integer=integer)
        spec = _spec_for(kind, kinds, t, rng)
        scaled = spec.normalization is Normalization.MINMAX_OF_REFERENCE
        okind = "gower" if spec.kind is DistanceKind.GOWER else (
            "hamming" if spec.kind is DistanceKind.HAMMING else "euclid")

        def dist(a, b):
            return oracle_distance(a, b, kinds, okind, list(spec.weights.weights), spec.ranges, scaled)

        nn = nn_between(q, t, spec)
        expected = oracle_nn(q.rows, t.rows, dist)
        assert nn.indices.tolist() == [i for i, _ in expected]
        assert nn.distances.tolist() == [d for _, d in expected]
        within = nn_within(t, spec)
        expected = oracle_nn(t.rows, t.rows, dist, exclude_self=True)
        assert within.indices.tolist() == [i for i, _ in expected]
        assert within.distances.tolist() == [d for _, d in expected]
        for a, b in zip(q.rows[:3], t.rows[:3]):
            assert record_distance(a, b, spec, q.schema) == dist(a, b)


def test_knn_order_and_ties():
    t = numeric_table([5.0, 1.0, -1.0, 1.0, 3.0])
    idx, d = knn_between(numeric_table([0.0]), t, DistanceSpec(DistanceKind.EUCLIDEAN), 3)
    assert idx.tolist() == [[1, 2, 3]]
    assert d.tolist() == [[1.0, 1.0, 1.0]]
    with pytest.raises(DataError):
        knn_between(numeric_table([0.0]), t, DistanceSpec(DistanceKind.EUCLIDEAN), 6)


def test_threads_are_bit_identical(rng, monkeypatch):
    import synthpriv.distance as dist_mod

    monkeypatch.setattr(dist_mod, "BLOCK_ROWS", 16)
    q = random_mixed(rng, 300, [NUM, CAT, NUM, CAT])
    t = random_mixed(rng, 200, [NUM, CAT, NUM, CAT])
    spec = DistanceSpec(DistanceKind.GOWER).resolve(t)
    a = nn_between(q, t, spec, threads=1)
    b = nn_between(q, t, spec, threads=8)
    assert np.array_equal(a.indices, b.indices)
    assert a.distances.tobytes() == b.distances.tobytes()


records = st.lists(st.floats(-100, 100, allow_nan=False), min_size=3, max_size=3)
tokens = st.lists(st.sampled_from("abc"), min_size=3, max_size=3)


@settings(max_examples=100, deadline=None)
@given(records, records, records)
def test_euclidean_symmetry_and_triangle(a, b, c):
    schema = Schema.of(("p", "numeric"), ("q", "numeric"), ("r", "numeric"))
    spec = DistanceSpec(DistanceKind.EUCLIDEAN)
    d = lambda x, y: record_distance(x, y, spec, schema)  # noqa: E731
    assert d(a, b) == d(b, a)
    assert d(a, c) <= d(a, b) + d(b, c) + 1e-9


@settings(max_examples=100, deadline=None)
@given(tokens, tokens, tokens)
def test_hamming_symmetry_and_triangle(a, b, c):
    schema = Schema.of(("p", "categorical"), ("q", "categorical"), ("r", "categorical"))
    spec = DistanceSpec(DistanceKind.HAMMING)
    d = lambda x, y: record_distance(x, y, spec, schema)  # noqa: E731
    assert d(a, b) == d(b, a) >= 0.0
    assert d(a, c) <= d(a, b) + d(b, c)


@settings(max_examples=100, deadline=None)
@given(records, records, st.floats(0.01, 100.0))
def test_scaling_covariance(a, b, c):
    schema = Schema.of(("p", "numeric"), ("q", "numeric"), ("r", "numeric"))
    euc = DistanceSpec(DistanceKind.EUCLIDEAN)
    base = record_distance(a, b, euc, schema)
    scaled = record_distance([c * x for x in a], [c * x for x in b], euc, schema)
    assert scaled == pytest.approx(c * base, rel=1e-12, abs=1e-12)

    ref = Table.from_rows(schema, [a, b, [0.0, 0.0, 0.0], [1.0, 2.0, 3.0]])
    ref_c = Table.from_rows(schema, [[c * x for x in r] for r in ref.rows])
    g = record_distance(a, b, DistanceSpec(DistanceKind.GOWER).resolve(ref), schema)
    spec_c = DistanceSpec(DistanceKind.GOWER).resolve(ref_c)
    g_c = record_distance([c * x for x in a], [c * x for x in b], spec_c, schema)
    assert g_c == pytest.approx(g, abs=1e-9)
    assert 0.0 <= g <= 1.0 + 1e-12


def test_gower_out_of_range_is_unclamped():
    ref = numeric_table([0.0, 10.0])
    spec = DistanceSpec(DistanceKind.GOWER).resolve(ref)
    assert record_distance([0.0], [25.0], spec, ref.schema) == 2.5
