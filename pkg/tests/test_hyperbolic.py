import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from lyapgap.exceptions import ConstructionError, DegenerateCurveError, NonHyperbolicError, TangencyError
from lyapgap.hyperbolic import (
    UnitTangent,
    _twist_flow,
    crossings,
    disk_distance,
    fenchel_nielsen_twist,
    iter_crossings,
    load_surface,
    mobius,
    sample_liouville,
    save_surface,
    surface_to_dict,
    track_geodesic,
    translation_length,
    unwrap,
    _flow,
)
from lyapgap.representation import evaluate
from lyapgap.words import RELATOR, SYMPLECTIC_BASIS, Word

SYSTOLE = 2 * np.arccosh(1 + np.sqrt(2))
# Santalo: boundary crossings per unit time = perimeter / (pi * area); side length equals the systole here
CROSSING_RATE = 8 * SYSTOLE / (np.pi * 4 * np.pi)


def test_relator_is_identity(surface, jx):
    assert np.max(np.abs(evaluate(jx, RELATOR) - np.eye(2))) < 1e-9


def test_generators_are_sl2(surface):
    for g in surface.generators:
        assert abs(np.linalg.det(g) - 1) < 1e-12


def test_vertex_radius_from_angle_condition(surface):
    # regular octagon with interior angle pi/4: cosh R = cot(pi/8)^2
    R = np.arccosh(1 / np.tan(np.pi / 8) ** 2)
    assert np.allclose(np.abs(surface.vertices), np.tanh(R / 2), atol=1e-12)


def test_interior_angles_sum_to_two_pi(surface):
    # tangent directions of the two side circles meeting at each vertex
    total = 0.0
    for k in range(8):
        v = surface.vertices[k]
        dirs = []
        for side in (k, (k + 1) % 8):
            p, q = surface.side_endpoints[side]
            c = (p + q) / (1 + (p * q.conjugate()).real)
            t = 1j * (v - c)
            other = surface.vertices[side - 1] if side == k else surface.vertices[side]
            if ((other - v) * t.conjugate()).real < 0:
                t = -t
            dirs.append(t / abs(t))
        total += np.arccos(np.clip((dirs[0] * dirs[1].conjugate()).real, -1, 1))
    assert abs(total - 2 * np.pi) < 1e-9


def test_pairings_map_sides_onto_partners(surface):
    for k, (partner, letter) in enumerate(surface.pairing):
        back = surface.disk_generators[(letter + 4) % 8]
        img = sorted((mobius(back, v) for v in surface.sides()[k]), key=lambda z: np.angle(z))
        tgt = sorted(surface.sides()[partner], key=lambda z: np.angle(z))
        assert np.allclose(img, tgt, atol=1e-9)


def test_systole_against_brute_force(jx):
    assert translation_length(jx, Word.parse("a1")) == pytest.approx(SYSTOLE, abs=1e-12)
    mats = np.array(jx.letter_matrices)
    prods = mats.copy()
    words = [(k,) for k in range(8)]
    best = np.inf
    for n in range(1, 7):
        if n > 1:
            new_p, new_w = [], []
            for w, p in zip(words, prods):
                for c in range(8):
                    if c != (w[-1] + 4) % 8:
                        new_w.append(w + (c,))
                        new_p.append(p @ mats[c])
            words, prods = new_w, np.array(new_p)
        tr = np.abs(np.trace(prods, axis1=1, axis2=2))
        tr = tr[tr > 2 + 1e-9]
        best = min(best, 2 * np.arccosh(tr.min() / 2))
    assert best == pytest.approx(SYSTOLE, abs=1e-9)


def test_translation_length_errors_and_powers(jx):
    with pytest.raises(NonHyperbolicError):
        translation_length(jx, Word())
    a = Word.parse("a1")
    assert translation_length(jx, a * a) == pytest.approx(2 * SYSTOLE, abs=1e-9)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(0, 7), min_size=1, max_size=6), st.lists(st.integers(0, 7), max_size=3))
def test_translation_length_is_class_function(xs, us):
    from lyapgap.hyperbolic import build_bolza_surface

    jx = build_bolza_surface().fuchsian()
    w, u = Word(tuple(xs)), Word(tuple(us))
    if len(w.cyclic_reduction()) == 0:
        return
    assert translation_length(jx, w.conjugate(u)) == pytest.approx(translation_length(jx, w), abs=1e-9)


def test_twist_zero_is_identity(surface, jx):
    j0 = fenchel_nielsen_twist(surface, 0.0)
    for g in jx.images:
        assert np.allclose(j0.images[g], jx.images[g], atol=1e-12)


def test_twist_preserves_relator_and_changes_lengths(jx, jy):
    assert np.max(np.abs(evaluate(jy, RELATOR) - np.eye(2))) < 1e-9
    # the twisted handle keeps the lengths of its own curves
    alpha2 = SYMPLECTIC_BASIS[2]
    assert translation_length(jy, alpha2) == pytest.approx(translation_length(jx, alpha2), abs=1e-9)
    assert translation_length(jy, SYMPLECTIC_BASIS[0]) == pytest.approx(SYSTOLE, abs=1e-9)
    # curves crossing the separating curve change
    w = SYMPLECTIC_BASIS[0] * alpha2
    assert abs(translation_length(jy, w) - translation_length(jx, w)) > 0.1


def test_twist_flow_rejects_elliptic():
    with pytest.raises(DegenerateCurveError):
        _twist_flow(np.array([[0.0, 1.0], [-1.0, 0.0]]), 0.3)


def test_surface_round_trip(surface, tmp_path):
    path = tmp_path / "surface.json"
    save_surface(surface, path)
    loaded = load_surface(path)
    for a, b in zip(loaded.generators, surface.generators):
        assert np.array_equal(a, b)
    data = json.loads(path.read_text())
    assert data["model"] == "disk" and len(data["generators"]) == 8 and len(data["polygon"]) == 8


def test_tampered_surface_rejected(surface, tmp_path):
    data = surface_to_dict(surface)
    data["generators"][0][0] += 1e-3
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(data))
    with pytest.raises(ConstructionError):
        load_surface(path)


def test_sampler_is_deterministic(surface):
    assert sample_liouville(surface, 7) == sample_liouville(surface, 7)
    assert surface.contains(sample_liouville(surface, 7).base)


@pytest.fixture(scope="module")
def liouville_samples(surface):
    rng = np.random.default_rng(2024)
    return [sample_liouville(surface, rng) for _ in range(100_000)]


def test_liouville_mean_distance_matches_quadrature(surface, liouville_samples):
    # integrate over one of the 16 right triangles in geodesic polar coordinates
    rin = surface.inradius

    def moment(p):
        def inner(th):
            rmax = np.arctanh(np.tanh(rin) / np.cos(th))
            return integrate.quad(lambda r: r**p * np.sinh(r), 0, rmax)[0]

        return integrate.quad(inner, 0, np.pi / 8)[0]

    oracle = moment(1) / moment(0)
    assert 16 * moment(0) == pytest.approx(4 * np.pi, rel=1e-9)
    mean = np.mean([disk_distance(s.base) for s in liouville_samples])
    assert mean == pytest.approx(oracle, rel=0.01)


def test_liouville_directions_uniform(liouville_samples):
    angles = np.mod([np.angle(s.direction) for s in liouville_samples], 2 * np.pi)
    counts, _ = np.histogram(angles, bins=16, range=(0, 2 * np.pi))
    assert stats.chisquare(counts).pvalue > 0.01


def test_zero_horizon_returns_start(surface):
    start = sample_liouville(surface, 3)
    w, t, end = track_geodesic(surface, start, 0.0)
    assert len(w) == 0 and t == 0.0 and end == start


def test_perpendicular_shot_crosses_single_side(surface):
    # aim straight at the midpoint of side 2, just long enough to cross it
    u = np.exp(1j * 2 * np.pi / 4)
    w, _, end = track_geodesic(surface, UnitTangent(0j, u), surface.inradius + 0.1)
    assert w.letters == (surface.pairing[2][1],)
    assert surface.contains(end.base, tol=-1e-12)


def test_vertex_hit_raises_tangency(surface):
    v = surface.vertices[0]
    with pytest.raises(TangencyError):
        track_geodesic(surface, UnitTangent(0j, v / abs(v)), 5.0)


def test_crossing_rate_matches_santalo(surface):
    rates = []
    for seed in range(4):
        letters, _, _ = crossings(surface, sample_liouville(surface, seed), 5000.0)
        rates.append(len(letters) / 5000.0)
    rates = np.array(rates)
    assert np.all((rates > 0.2) & (rates < 2.0))
    assert rates.max() / rates.min() < 1.1
    assert rates.mean() == pytest.approx(CROSSING_RATE, rel=0.02)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_unwrapped_endpoint_matches_cover_flow(surface, seed):
    start = sample_liouville(surface, seed)
    horizon = 12.0
    w, _, end = track_geodesic(surface, start, horizon)
    direct = _flow(start.base, start.direction, horizon)
    lifted = unwrap(surface, w, end)
    assert abs(lifted.base - direct.base) < 1e-6
    # j(w)^-1 brings the cover endpoint back into the base octagon
    m = np.eye(2, dtype=complex)
    for c in w.inverse():
        m = m @ surface.disk_generators[c]
    back = mobius(m, direct.base)
    assert abs(back - end.base) < 1e-6
    assert surface.contains(back, tol=-1e-6)


def test_states_stay_near_origin(surface):
    bound = surface.circumradius + 1
    it = iter_crossings(surface, sample_liouville(surface, 11), 2000.0)
    for _, _, state in it:
        assert disk_distance(state.base) <= bound


@pytest.mark.parametrize("seed", [0, 5, 9])
def test_time_reversal(surface, seed):
    start = sample_liouville(surface, seed)
    w, _, end = track_geodesic(surface, start, 15.0)
    w2, _, back = track_geodesic(surface, end.reversed(), 15.0)
    assert w2 == w.inverse()
    assert abs(back.base - start.base) < 1e-6
