import itertools

import numpy as np
import pytest
from sklearn.base import clone

from lyapgap.exceptions import InsufficientDataError
from lyapgap.hyperbolic import translation_length
from lyapgap.representation import evaluate, symmetric_power
from lyapgap.thermo import (
    ClosedOrbit,
    RenormalizedIntersection,
    enumerate_closed_geodesics,
    enumerate_orbits,
    entropy,
    load_table,
    orbit_weights,
    renormalized_intersection,
    save_table,
    word_weights,
)
from lyapgap.words import Word, min_rotation

SYSTOLE = 2 * np.arccosh(1 + np.sqrt(2))


@pytest.fixture(scope="module")
def table8(surface):
    return enumerate_closed_geodesics(surface, 8.0)


def brute_force_classes(n_max):
    classes = set()
    for n in range(1, n_max + 1):
        for w in itertools.product(range(8), repeat=n):
            if Word(w).letters != w:
                continue
            if n > 1 and w[0] == (w[-1] + 4) % 8:
                continue
            classes.add(min_rotation(w))
    return classes


def test_word_table_small_cases(surface):
    assert len(enumerate_orbits(surface, 0)) == 0
    t1 = enumerate_orbits(surface, 1)
    assert len(t1) == 8
    assert np.allclose(t1.lengths, SYSTOLE, atol=1e-9)
    t2 = enumerate_orbits(surface, 2)
    assert {o.word.letters for o in t2.orbits} == brute_force_classes(2)
    assert len(t2) == 40


def test_word_table_invariants(surface, jx):
    t4 = enumerate_orbits(surface, 4)
    words = [o.word.letters for o in t4.orbits]
    assert len(words) == len(set(words))
    assert set(words) <= brute_force_classes(4)
    for o in t4.orbits[::25]:
        assert o.length == pytest.approx(translation_length(jx, o.word), abs=1e-9)
    t3 = enumerate_orbits(surface, 3)
    assert set(o.word for o in t3.orbits) < set(o.word for o in t4.orbits)


def test_closed_orbit_requires_canonical_word():
    with pytest.raises(ValueError):
        ClosedOrbit(Word.parse("b1 a1"), 1.0)


def test_geometric_multiplicities(table8):
    lengths = np.round(table8.lengths, 6)
    values, counts = np.unique(lengths, return_counts=True)
    assert values[0] == pytest.approx(SYSTOLE, abs=1e-6)
    # 12 unoriented systoles on this surface, then 12 and 24 for the next two lengths
    assert list(counts[:3]) == [24, 24, 48]
    assert values[1] == pytest.approx(2 * np.arccosh(3 + 2 * np.sqrt(2)), abs=1e-6)


def test_geometric_words_reproduce_lengths(table8, jx):
    for o in table8.orbits:
        assert o.length == pytest.approx(translation_length(jx, o.word), abs=1e-9)
    words = table8.words()
    assert len(set(words)) == len(words)


def test_geometric_table_contains_word_lengths(surface, table8):
    geo = np.round(table8.lengths, 6)
    for o in enumerate_orbits(surface, 5).orbits:
        if o.length <= 8.0 - 1e-6:
            assert round(o.length, 6) in geo


def test_geometric_counts_are_monotone(surface, table8):
    t7 = enumerate_closed_geodesics(surface, 7.0)
    small = np.sort(t7.lengths)
    big = np.sort(table8.lengths)
    assert np.allclose(small, big[big <= 7.0])
    n = [np.sum(big <= t) for t in np.linspace(3, 8, 30)]
    assert np.all(np.diff(n) >= 0)


def test_fuchsian_weights_equal_lengths(table8, jx, sym2):
    for rep in (jx, sym2):
        w = orbit_weights(table8, rep, [1])
        assert np.allclose(w.weights(1), w.lengths, atol=1e-8)


def test_twist_weights_exceed_lengths(table8, jy):
    w = orbit_weights(table8, jy, [1])
    assert np.mean(w.weights(1) / w.lengths) > 1


def test_weights_class_function_and_inverse_symmetry(table8, sym2y):
    rng = np.random.default_rng(0)
    w = orbit_weights(table8, sym2y, [1])
    for o in w.orbits[::10]:
        u = Word(tuple(rng.integers(0, 8, size=rng.integers(1, 4))))
        got = word_weights(sym2y, [o.word.conjugate(u), o.word.inverse()], [1])[1]
        assert got == pytest.approx([o.weights[1]] * 2, abs=1e-9)


def test_word_weights_match_direct_eigensolve(table8, sym2y):
    # short orbits are well conditioned, so plain eigenvalues are an oracle
    w = orbit_weights(table8, sym2y, [1, 2])
    for o in w.orbits[:50]:
        mod = np.sort(np.abs(np.linalg.eigvals(evaluate(sym2y, o.word))))[::-1]
        assert o.weights[1] == pytest.approx(np.log(mod[0] / mod[1]), abs=1e-8)
        assert o.weights[2] == pytest.approx(np.log(mod[1] / mod[2]), abs=1e-8)


def test_entropy_insufficient_data(surface):
    with pytest.raises(InsufficientDataError):
        entropy(enumerate_closed_geodesics(surface, 4.0))


def test_entropy_fits(table12, jx, sym2):
    geo = entropy(table12)
    assert 0.8 <= geo.h <= 1.2
    fx = entropy(orbit_weights(table12, jx, [1]), 1)
    assert fx.h == pytest.approx(geo.h, abs=1e-6)
    f2 = entropy(orbit_weights(table12, sym2, [1]), 1)
    assert 0.8 <= f2.h <= 1.2


def test_intersection_equality_cases(table12, jx, surface):
    assert renormalized_intersection(table12, jx, 1).J == pytest.approx(1.0, abs=1e-12)
    sym3 = symmetric_power(jx, 4)
    for r in (1, 2, 3):
        est = renormalized_intersection(table12, sym3, r)
        assert est.J == pytest.approx(1.0, abs=1e-6)


def test_intersection_lower_bound(table12, jy, sym2y):
    for rep in (jy, sym2y):
        est = renormalized_intersection(table12, rep, 1)
        assert est.J >= 1 - 2 * est.stderr
        assert est.J > 1


def test_intersection_insufficient_data(surface, jx):
    with pytest.raises(InsufficientDataError):
        renormalized_intersection(enumerate_closed_geodesics(surface, 4.0), jx, 1)


def test_estimator(surface, sym2):
    est = RenormalizedIntersection(max_length=8.0, n_boot=20, surface=surface)
    assert clone(est).get_params()["max_length"] == 8.0
    est.fit(sym2)
    assert est.J_ == pytest.approx([1.0, 1.0], abs=1e-6)


def test_table_round_trip(table8, sym2y, tmp_path):
    w = orbit_weights(table8, sym2y)
    path = tmp_path / "orbits.csv"
    save_table(w, path)
    back = load_table(path)
    assert back.cutoff == w.cutoff and back.kind == w.kind and back.weight_source == w.weight_source
    assert back.words() == w.words()
    assert np.array_equal(back.lengths, w.lengths)
    assert np.array_equal(back.weights(2), w.weights(2))
    assert path.read_text().startswith("# {")
