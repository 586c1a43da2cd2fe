import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from synthpriv.dataset import DataError, Schema, Table
from synthpriv.disclosure import IdrConfig, equivalence_classes, idr

S = Schema.of(("zip", "categorical"), ("age", "numeric"), ("dx", "categorical"),
              quasi=["zip", "age"], sensitive=["dx"])


def cfg(**kw):
    base = dict(quasi=("zip", "age"), sensitive=("dx",))
    base.update(kw)
    return IdrConfig(**base)


def test_equivalence_classes_examples():
    one = Table.from_rows(S, [["a", 1, "x"]])
    assert equivalence_classes(one, ["zip"]).sizes == {("a",): 1}
    t = Table.from_rows(S, [["a", 1, "x"], ["a", 2, "y"], ["b", 1, "x"]])
    assert equivalence_classes(t, ["zip"]).sizes == {("a",): 2, ("b",): 1}
    same = Table.from_rows(S, [["a", 1, "x"]] * 4)
    assert equivalence_classes(same, ["zip", "age"]).sizes == {("a", 1.0): 4}


def test_equivalence_classes_reject_missing():
    t = Table.from_rows(S, [[None, 1, "x"]])
    with pytest.raises(DataError):
        equivalence_classes(t, ["zip"])


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.sampled_from("abc"), st.integers(0, 2)), min_size=1, max_size=30), st.randoms())
def test_equivalence_class_sizes_sum_and_permutation(rows, rnd):
    t = Table.from_rows(S, [[z, a, "x"] for z, a in rows])
    idx = equivalence_classes(t, ["zip", "age"])
    assert sum(idx.sizes.values()) == len(rows)
    shuffled = list(rows)
    rnd.shuffle(shuffled)
    again = equivalence_classes(Table.from_rows(S, [[z, a, "x"] for z, a in shuffled]), ["zip", "age"])
    assert again.sizes == idx.sizes


def test_idr_single_record_maximal():
    t = Table.from_rows(S, [["a", 1, "x"]])
    assert idr(t, t, cfg(population=t)).value == 1.0


def test_idr_no_quasi_match_is_zero():
    real = Table.from_rows(S, [["a", 1, "x"], ["b", 2, "y"]])
    synth = Table.from_rows(S, [["c", 1, "x"]])
    r = idr(real, synth, cfg())
    assert r.value == 0.0 and r.matched == 0


def two_record_case(lam):
    real = Table.from_rows(S, [["a", 1, "x"], ["b", 2, "y"]])
    population = Table.from_rows(S, [["a", 1, "x"], ["a", 1, "q"], ["b", 2, "y"]])
    synth = Table.from_rows(S, [["a", 1, "x"], ["c", 9, "y"]])
    return idr(real, synth, cfg(lam=lam, population=population))


def test_idr_hand_example():
    r = two_record_case(0.9)
    assert r.value == 0.225
    assert r.contributions.tolist() == [0.45, 0.0]


def test_idr_linear_in_lambda():
    values = [two_record_case(lam).value for lam in (0.0, 0.5, 1.0)]
    assert values == [0.0, 0.125, 0.25]


def test_idr_learns_nothing_without_sensitive_agreement():
    real = Table.from_rows(S, [["a", 1, "x"]])
    synth = Table.from_rows(S, [["a", 1, "z"]])
    r = idr(real, synth, cfg())
    assert r.matched == 1 and r.learned == 0 and r.value == 0.0


def test_idr_scaled_estimate():
    real = Table.from_rows(S, [["a", 1, "x"], ["a", 1, "y"], ["b", 2, "y"]])
    synth = Table.from_rows(S, [["a", 1, "x"], ["b", 2, "y"]])
    # sample sizes a:2, b:1 scaled by 1/0.3 -> ceil(6.67)=7, ceil(3.33)=4
    r = idr(real, synth, cfg(sampling_fraction=0.3))
    assert r.contributions.tolist() == pytest.approx([1 / 7, 0.0, 1 / 4])


def test_idr_population_must_cover_real():
    real = Table.from_rows(S, [["a", 1, "x"], ["z", 5, "x"]])
    with pytest.raises(DataError, match="population"):
        idr(real, real, cfg(population=Table.from_rows(S, [["a", 1, "x"]])))


def test_idr_config_invariants():
    with pytest.raises(DataError):
        cfg(lam=1.5)
    with pytest.raises(DataError):
        IdrConfig(quasi=("zip",), sensitive=("zip",))
    with pytest.raises(DataError):
        cfg(sampling_fraction=0.0)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**31 - 1), st.floats(0.0, 1.0))
def test_idr_bounds_and_match_rate(seed, lam):
    rng = np.random.default_rng(seed)
    rows = [[f"z{rng.integers(0, 3)}", float(rng.integers(0, 3)), f"d{rng.integers(0, 2)}"] for _ in range(30)]
    real, synth = Table.from_rows(S, rows[:20]), Table.from_rows(S, rows[20:])
    r = idr(real, synth, cfg(lam=lam, population=real))
    assert 0.0 <= r.value <= 1.0
    assert all(0.0 <= c <= 1.0 for c in r.contributions)
    assert r.value <= r.matched / real.n_rows + 1e-12
    full = idr(real, synth, cfg(lam=1.0, population=real)).value
    assert r.value == pytest.approx(lam * full, abs=1e-12)
    # a larger population can only lower the risk
    bigger = idr(real, synth, cfg(lam=lam, population=real.concat(real))).value
    assert bigger <= r.value + 1e-12
