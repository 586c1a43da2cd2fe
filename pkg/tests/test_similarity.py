import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from synthpriv.dataset import ColumnKind, DataError, Schema, Table
from synthpriv.distance import DistanceKind, DistanceSpec, WeightVector
from synthpriv.similarity import Aggregate, Orientation, dcr, epsilon_identifiability, median

from .conftest import numeric_table, random_mixed

XY = Schema.of(("x", "numeric"), ("y", "numeric"))
UNIT = WeightVector((1.0,))


def test_dcr_exact_copy(rng):
    real = random_mixed(rng, 30, [ColumnKind.NUMERIC, ColumnKind.CATEGORICAL])
    r = dcr(real, real)
    assert r.value == 0.0
    assert r.distances.tolist() == [0.0] * 30


def test_dcr_single_pair():
    r = dcr(Table.from_rows(XY, [[0, 0]]), Table.from_rows(XY, [[3, 4]]),
            DistanceSpec(DistanceKind.EUCLIDEAN), Aggregate.MEAN)
    assert r.value == 5.0


def test_median_order_statistics():
    assert median(np.array([0.0, 1.0, 9.0])) == 1.0
    assert median(np.array([9.0, 0.0, 1.0, 4.0])) == 2.5


def test_dcr_median_and_mean_match_recomputation(rng):
    real = numeric_table(rng.normal(size=40))
    synth = numeric_table(rng.normal(size=17))
    spec = DistanceSpec(DistanceKind.EUCLIDEAN)
    mean = dcr(real, synth, spec, Aggregate.MEAN)
    med = dcr(real, synth, spec, Aggregate.MEDIAN)
    per = sorted(mean.distances.tolist())
    assert len(per) == synth.n_rows
    assert mean.value == pytest.approx(sum(per) / len(per), abs=1e-12)
    assert med.value == per[len(per) // 2]
    assert mean.value >= 0.0


def test_dcr_schema_mismatch():
    with pytest.raises(DataError):
        dcr(numeric_table([1.0]), numeric_table([1.0], name="z"))


def test_eps_id_exact_copy_is_one(rng):
    real = numeric_table(rng.normal(size=(25, 3)))
    r = epsilon_identifiability(real, real)
    assert r.value == 1.0
    assert (r.violations, r.total) == (25, 25)


def test_eps_id_far_synth_is_zero():
    real = numeric_table([0.0, 1.0, 2.0, 3.0])
    r = epsilon_identifiability(real, numeric_table([100.0, 200.0]), UNIT)
    assert r.value == 0.0


def test_eps_id_hand_example():
    real = numeric_table([0.0, 10.0, 11.0])
    r = epsilon_identifiability(real, numeric_table([10.4]), UNIT)
    assert r.value == pytest.approx(2 / 3, abs=1e-15)
    assert (r.violations, r.total) == (2, 3)


def test_eps_id_per_synthetic_orientation():
    # synth 10.4 -> nearest real 10 (d=0.4 < r=1); synth 50 -> nearest real 11 (d=39 > r=1)
    real = numeric_table([0.0, 10.0, 11.0])
    r = epsilon_identifiability(real, numeric_table([10.4, 50.0]), UNIT, Orientation.PER_SYNTHETIC_RECORD)
    assert (r.violations, r.total) == (1, 2)
    assert r.orientation is Orientation.PER_SYNTHETIC_RECORD


def test_eps_id_ties_are_not_violations():
    real = numeric_table([0.0, 1.0])
    r = epsilon_identifiability(real, numeric_table([2.0]), UNIT)
    # real 1.0: r = 1, s = 1 -> tie
    assert r.violations == 0


def test_eps_id_needs_two_real_rows():
    with pytest.raises(DataError):
        epsilon_identifiability(numeric_table([1.0]), numeric_table([1.0]), UNIT)


def test_eps_id_mixed_columns_use_mismatch():
    schema = Schema.of(("n", "numeric"), ("c", "categorical"))
    real = Table.from_rows(schema, [[0.0, "a"], [3.0, "a"], [0.0, "b"]])
    synth = Table.from_rows(schema, [[0.0, "a"]])
    r = epsilon_identifiability(real, synth, WeightVector((1.0, 1.0)))
    # within-real NN: row0 -> row2 at 1 (mismatch); synth hits row0 at 0 < 1
    assert r.violations == 1


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_eps_id_bounded_and_permutation_invariant(seed):
    rng = np.random.default_rng(seed)
    kinds = [ColumnKind.NUMERIC, ColumnKind.CATEGORICAL, ColumnKind.NUMERIC]
    real = random_mixed(rng, 12, kinds)
    synth = random_mixed(rng, 9, kinds)
    w = WeightVector((1.0, 0.5, 2.0))
    base = epsilon_identifiability(real, synth, w).value
    assert 0.0 <= base <= 1.0
    pr, ps = rng.permutation(12), rng.permutation(9)
    assert epsilon_identifiability(real.take(pr), synth.take(ps), w).value == base
    for orient in Orientation:
        v = epsilon_identifiability(real, synth, w, orient).value
        assert 0.0 <= v <= 1.0


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_eps_id_monotone_when_synth_moves_closer(seed):
    # per synthetic record, since a record moving toward its own nearest real record
    # may move away from other real records
    rng = np.random.default_rng(seed)
    real = rng.normal(size=(15, 2))
    synth = rng.normal(size=(10, 2)) * 3
    w = WeightVector((1.0, 1.0))
    # pull each synthetic record toward its nearest real record along a straight line
    nearest = real[np.argmin(((synth[:, None, :] - real[None, :, :]) ** 2).sum(-1), axis=1)]
    values = []
    for t in np.linspace(0.0, 1.0, 6):
        moved = synth + t * (nearest - synth)
        values.append(epsilon_identifiability(numeric_table(real), numeric_table(moved), w,
                                              Orientation.PER_SYNTHETIC_RECORD).value)
    assert all(b >= a for a, b in zip(values, values[1:]))
