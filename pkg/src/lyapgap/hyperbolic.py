"""Hyperbolic geometry of the Bolza surface in the Poincare disk.

The fundamental domain is the regular octagon centred at the origin with
interior angles pi/4.  Opposite sides are paired: generator ``k`` translates
along the ray at angle ``k*pi/4`` by twice the inradius, carrying the octagon
to its neighbour across side ``k``.  Group elements are stored as real
SL(2, R) matrices; they act on the disk through a fixed Cayley conjugation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from math import atanh, sqrt
from pathlib import Path
from typing import Mapping

import numpy as np

from .exceptions import (
    ConstructionError,
    DegenerateCurveError,
    NonHyperbolicError,
    TangencyError,
)
from .representation import Representation, evaluate
from .words import GENERATORS, LABELS, RELATOR, SEPARATING_CURVE, SYMPLECTIC_BASIS, Word

VERTEX_TOL = 1e-9

# Cayley transform upper half plane -> disk, z -> (z - i)/(z + i).
_CAYLEY = np.array([[1.0, -1.0j], [1.0, 1.0j]])
_CAYLEY_INV = np.linalg.inv(_CAYLEY)


def to_disk(g: np.ndarray) -> np.ndarray:
    """SU(1,1) matrix acting on the disk that corresponds to ``g`` in SL(2, R)."""
    return _CAYLEY @ np.asarray(g, dtype=complex) @ _CAYLEY_INV


def from_disk(m: np.ndarray) -> np.ndarray:
    g = _CAYLEY_INV @ np.asarray(m, dtype=complex) @ _CAYLEY
    if np.max(np.abs(g.imag)) > 1e-9:
        raise ValueError("matrix does not preserve the disk")
    return g.real.copy()


def mobius(m: np.ndarray, z: complex) -> complex:
    return (m[0, 0] * z + m[0, 1]) / (m[1, 0] * z + m[1, 1])


def disk_distance(z: complex, w: complex = 0j) -> float:
    return 2.0 * atanh(abs(z - w) / abs(1 - w.conjugate() * z))


@dataclass(frozen=True)
class UnitTangent:
    """A unit tangent vector: base point in the open disk, unit complex direction."""

    base: complex
    direction: complex

    def __post_init__(self):
        base = complex(self.base)
        if not abs(base) < 1:
            raise ValueError(f"base point {base} is not in the open unit disk")
        direction = complex(self.direction)
        if abs(abs(direction) - 1.0) > 1e-12:
            raise ValueError(f"direction {direction} is not a unit complex number")
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "direction", direction)

    def reversed(self) -> "UnitTangent":
        return UnitTangent(self.base, -self.direction)


def _flow(z: complex, u: complex, s: float) -> UnitTangent:
    """Move from ``z`` along direction ``u`` for hyperbolic time ``s``."""
    tau = np.tanh(s / 2.0)
    w = tau * u
    denom = 1 + z.conjugate() * w
    q = (w + z) / denom
    uq = u * (denom.conjugate() / denom)
    return UnitTangent(complex(q), complex(uq / abs(uq)))


@dataclass(frozen=True, eq=False)
class SurfaceModel:
    """Immutable description of the octagon, its pairings and generators.

    ``generators`` holds the eight letter images (generators, then inverses)
    in SL(2, R).  Side ``k`` joins ``vertices[k-1]`` and ``vertices[k]``;
    ``pairing[k] = (partner, letter)`` means that leaving through side ``k``
    appends ``letter`` and re-enters through side ``partner``.
    """

    generators: tuple[np.ndarray, ...]
    disk_generators: tuple[np.ndarray, ...]
    vertices: np.ndarray
    side_endpoints: np.ndarray
    pairing: tuple[tuple[int, int], ...]
    relator: Word
    inradius: float
    circumradius: float

    @property
    def images(self) -> dict[str, np.ndarray]:
        return {LABELS[k]: self.generators[k] for k in range(8)}

    def sides(self) -> list[tuple[complex, complex]]:
        return [(self.vertices[(k - 1) % 8], self.vertices[k]) for k in range(8)]

    def contains(self, z: complex, tol: float = 0.0) -> bool:
        """True when ``z`` lies in the closed octagon (up to ``tol`` Euclidean slack)."""
        for k in range(8):
            p, q = self.side_endpoints[k]
            c = (p + q) / (1 + (p * q.conjugate()).real)
            if abs(z - c) < sqrt(abs(c) ** 2 - 1) - tol:
                return False
        return True

    def fuchsian(self) -> Representation:
        """The holonomy representation j_X as a d=2 Representation."""
        images = {g: self.generators[k] for k, g in enumerate(GENERATORS)}
        inverses = {g: self.generators[k + 4] for k, g in enumerate(GENERATORS)}
        return Representation(2, images, provenance="fuchsian(bolza)", inverses=inverses)


def _translation(d: float) -> np.ndarray:
    return np.array([[np.cosh(d / 2), np.sinh(d / 2)], [np.sinh(d / 2), np.cosh(d / 2)]], dtype=complex)


def _rotation(t: float) -> np.ndarray:
    return np.diag([np.exp(0.5j * t), np.exp(-0.5j * t)])


def build_bolza_surface() -> SurfaceModel:
    """Regular octagon with angles pi/4 and its opposite-side pairings."""
    inradius = float(np.arccosh(1 + sqrt(2)))
    circumradius = float(np.arccosh(3 + 2 * sqrt(2)))
    r_v = np.tanh(circumradius / 2)
    angles = np.arange(8) * np.pi / 4 + np.pi / 8
    vertices = r_v * np.exp(1j * angles)

    # ideal endpoints of the geodesic carrying side 0, rotated into place
    m = np.tanh(inradius / 2)
    centre = (1 + m * m) / (2 * m)
    phi = np.arccos(1 / centre)
    side_endpoints = np.array(
        [[np.exp(1j * (k * np.pi / 4 - phi)), np.exp(1j * (k * np.pi / 4 + phi))] for k in range(8)]
    )

    disk = []
    for k in range(8):
        rot = _rotation(k * np.pi / 4)
        disk.append(rot @ _translation(2 * inradius) @ np.conj(rot))
    generators = tuple(from_disk(t) for t in disk)
    disk = tuple(to_disk(g) for g in generators)
    pairing = tuple(((k + 4) % 8, k) for k in range(8))

    surface = SurfaceModel(
        generators=generators,
        disk_generators=disk,
        vertices=vertices,
        side_endpoints=side_endpoints,
        pairing=pairing,
        relator=RELATOR,
        inradius=inradius,
        circumradius=circumradius,
    )
    verify_surface(surface)
    return surface


def polygon_area(surface: SurfaceModel) -> float:
    """Area from the hyperbolic triangles (origin, v_{k-1}, v_k) via the law of cosines."""
    total = 0.0
    for k in range(8):
        p, q = surface.vertices[k - 1], surface.vertices[k]
        a = disk_distance(p, q)
        b = disk_distance(p)
        c = disk_distance(q)
        angles = []
        for opp, s1, s2 in ((a, b, c), (b, a, c), (c, a, b)):
            cos_t = (np.cosh(s1) * np.cosh(s2) - np.cosh(opp)) / (np.sinh(s1) * np.sinh(s2))
            angles.append(np.arccos(np.clip(cos_t, -1, 1)))
        total += np.pi - sum(angles)
    return float(total)


def verify_surface(surface: SurfaceModel) -> None:
    """Raise ConstructionError unless every structural invariant holds."""
    for k, g in enumerate(surface.generators):
        if abs(np.linalg.det(g) - 1) > 1e-12:
            raise ConstructionError(f"generator {LABELS[k]} has det {np.linalg.det(g)!r}")
        if np.max(np.abs(g @ surface.generators[(k + 4) % 8] - np.eye(2))) > 1e-9:
            raise ConstructionError(f"generator {LABELS[k]} and its inverse do not cancel")
    rel = np.eye(2)
    for c in surface.relator:
        rel = rel @ surface.generators[c]
    if np.max(np.abs(rel - np.eye(2))) > 1e-9:
        raise ConstructionError(f"relator evaluates to {rel.tolist()}, not the identity")
    for k, (partner, letter) in enumerate(surface.pairing):
        # re-centring after leaving through side k applies the inverse of `letter`
        back = surface.disk_generators[(letter + 4) % 8]
        p, q = surface.vertices[k - 1], surface.vertices[k]
        img = {mobius(back, p), mobius(back, q)}
        target = (surface.vertices[partner - 1], surface.vertices[partner])
        for t in target:
            if min(abs(t - x) for x in img) > 1e-9:
                raise ConstructionError(f"pairing of side {k} does not land on side {partner}")
    area = polygon_area(surface)
    if abs(area - 4 * np.pi) > 1e-6:
        raise ConstructionError(f"polygon area {area} differs from 4*pi")


# -- serialization -------------------------------------------------------------


def surface_to_dict(surface: SurfaceModel) -> dict:
    return {
        "model": "disk",
        "generators": [[float(x) for x in g.ravel()] for g in surface.generators],
        "polygon": [
            [[float(p.real), float(p.imag)], [float(q.real), float(q.imag)]] for p, q in surface.sides()
        ],
        "relator": str(surface.relator),
    }


def surface_from_dict(data: Mapping) -> SurfaceModel:
    """Rebuild a surface from its JSON form and check it against the reference octagon."""
    if data.get("model") != "disk":
        raise ConstructionError("surface file must declare model 'disk'")
    ref = build_bolza_surface()
    gens = np.asarray(data["generators"], dtype=float).reshape(8, 2, 2)
    poly = np.asarray(data["polygon"], dtype=float).reshape(8, 2, 2)
    if np.max(np.abs(gens - np.array(ref.generators))) > 1e-9:
        raise ConstructionError("generators differ from the Bolza octagon pairings")
    vertices = poly[:, 1, 0] + 1j * poly[:, 1, 1]
    if np.max(np.abs(vertices - ref.vertices)) > 1e-9:
        raise ConstructionError("polygon differs from the regular octagon")
    if Word.parse(data["relator"]) != ref.relator:
        raise ConstructionError("unexpected relator")
    generators = tuple(g.copy() for g in gens)
    surface = SurfaceModel(
        generators=generators,
        disk_generators=tuple(to_disk(g) for g in generators),
        vertices=vertices,
        side_endpoints=ref.side_endpoints,
        pairing=ref.pairing,
        relator=ref.relator,
        inradius=ref.inradius,
        circumradius=ref.circumradius,
    )
    verify_surface(surface)
    return surface


def save_surface(surface: SurfaceModel, path: str | Path) -> None:
    Path(path).write_text(json.dumps(surface_to_dict(surface), indent=2) + "\n")


def load_surface(path: str | Path) -> SurfaceModel:
    return surface_from_dict(json.loads(Path(path).read_text()))


# -- lengths ----------------------------------------------------------------------


def translation_length(rep2: Representation, w: Word) -> float:
    if rep2.d != 2:
        raise ValueError("translation_length needs a d=2 representation")
    tr = abs(float(np.trace(evaluate(rep2, w))))
    if tr <= 2.0:
        raise NonHyperbolicError(f"|trace| = {tr} <= 2 for word {w}")
    return 2.0 * float(np.arccosh(tr / 2.0))


def _twist_flow(g: np.ndarray, t: float) -> np.ndarray:
    """Time-``t`` element of the one-parameter hyperbolic subgroup containing ``g``."""
    tr = float(np.trace(g))
    if abs(tr) <= 2.0:
        raise DegenerateCurveError(f"|trace| = {abs(tr)} <= 2: curve is not hyperbolic")
    if tr < 0:
        g, tr = -g, -tr
    half = np.arccosh(tr / 2)
    n = (g - (tr / 2) * np.eye(2)) / np.sinh(half)
    return np.cosh(t / 2) * np.eye(2) + np.sinh(t / 2) * n


def fenchel_nielsen_twist(surface: SurfaceModel, t: float) -> Representation:
    """Twist the hyperbolic structure by ``t`` along the separating curve.

    The symplectic basis (alpha1, beta1, alpha2, beta2) has the separating
    curve c = [alpha1, beta1].  The first handle is kept, the second is
    conjugated by the flow of j(c); the new generator images are then read
    back off the basis.  ``t`` is hyperbolic displacement along the axis.
    """
    if not np.isfinite(t):
        raise ValueError("twist parameter must be finite")
    j = surface.fuchsian()
    h = _twist_flow(evaluate(j, SEPARATING_CURVE), t)
    hinv = np.linalg.inv(h)
    alpha1, beta1, alpha2, beta2 = (evaluate(j, w) for w in SYMPLECTIC_BASIS)
    alpha2 = h @ alpha2 @ hinv
    beta2 = h @ beta2 @ hinv
    # alpha2 = b2 a1 B1 and beta2 = b1 A2 solve to:
    inv_b1 = j.inverses["a1"] @ j.inverses["b2"] @ alpha2
    inv_a2 = inv_b1 @ beta2
    images = {
        "a1": alpha1,
        "b1": np.linalg.inv(inv_b1),
        "a2": np.linalg.inv(inv_a2),
        "b2": beta1,
    }
    inverses = {
        "a1": j.inverses["a1"],
        "b1": inv_b1,
        "a2": inv_a2,
        "b2": j.inverses["b2"],
    }
    return Representation(2, images, provenance=f"twist({t:g})", inverses=inverses)


# -- sampling -------------------------------------------------------------------


def sample_liouville(surface: SurfaceModel, seed=None) -> UnitTangent:
    """Liouville-distributed unit tangent vector based in the octagon.

    Rejection sampling: candidates uniform in the Euclidean disk circumscribing
    the octagon, accepted with probability proportional to the hyperbolic
    area density.
    """
    rng = np.random.default_rng(seed)
    r_v = abs(surface.vertices[0])
    floor = (1 - r_v * r_v) ** 2
    while True:
        z = complex(*rng.uniform(-r_v, r_v, size=2))
        if abs(z) >= r_v or not surface.contains(z):
            continue
        if rng.uniform() * (1 - abs(z) ** 2) ** 2 <= floor:
            theta = rng.uniform(0, 2 * np.pi)
            return UnitTangent(z, complex(np.cos(theta), np.sin(theta)))


# -- geodesic tracking --------------------------------------------------------------


def _exit_side(surface: SurfaceModel, z: complex, u: complex, skip: int):
    """First side hit from (z, u): returns (side, hyperbolic time, tau)."""
    zc = z.conjugate()
    best_s, best_k, best_tau = np.inf, -1, 0.0
    for k in range(8):
        if k == skip:
            continue
        p, q = surface.side_endpoints[k]
        p = (p - z) / (1 - zc * p)
        q = (q - z) / (1 - zc * q)
        den = 1 + (p * q.conjugate()).real
        if den <= 0.0:
            # the side's geodesic passes through z
            continue
        c = (p + q) / den
        proj = (u.conjugate() * c).real
        if proj <= 1.0:
            continue
        tau = 1.0 / (proj + sqrt(proj * proj - 1.0))
        s = 2.0 * atanh(tau)
        if s < best_s:
            best_s, best_k, best_tau = s, k, tau
    return best_k, best_s, best_tau


def iter_crossings(surface: SurfaceModel, start: UnitTangent, horizon: float, check_vertices: bool = True):
    """Yield ``(letter, time, state)`` for every side crossing before ``horizon``.

    ``state`` is the re-centred unit tangent just after the crossing.  The
    generator's ``return`` value is the final UnitTangent at time ``horizon``.
    """
    if horizon < 0:
        raise ValueError("horizon must be non-negative")
    z, u = start.base, start.direction
    elapsed = 0.0
    skip = -1
    disk = surface.disk_generators
    vertices = surface.vertices
    while True:
        k, s, tau = _exit_side(surface, z, u, skip)
        if k < 0:
            raise TangencyError("no exit side found (point outside the octagon?)")
        if elapsed + s >= horizon:
            end = _flow(z, u, horizon - elapsed)
            return end
        w = tau * u
        denom = 1 + z.conjugate() * w
        q = (w + z) / denom
        uq = u * (denom.conjugate() / denom)
        if check_vertices:
            for v in (vertices[k - 1], vertices[k]):
                if disk_distance(q, v) < VERTEX_TOL:
                    raise TangencyError(f"geodesic passes within {VERTEX_TOL} of a vertex")
        letter = surface.pairing[k][1]
        g = disk[(letter + 4) % 8]
        den = g[1, 0] * q + g[1, 1]
        z = complex((g[0, 0] * q + g[0, 1]) / den)
        u = complex(uq / (den * den))
        u /= abs(u)
        elapsed += s
        skip = surface.pairing[k][0]
        yield letter, elapsed, UnitTangent(z, u)


def crossings(surface: SurfaceModel, start: UnitTangent, horizon: float):
    """Letters and crossing times along the orbit, plus the end state."""
    letters: list[int] = []
    times: list[float] = []
    it = iter_crossings(surface, start, horizon)
    while True:
        try:
            letter, t, _ = next(it)
        except StopIteration as stop:
            return letters, times, stop.value
        letters.append(letter)
        times.append(t)


def track_geodesic(surface: SurfaceModel, start: UnitTangent, horizon: float) -> tuple[Word, float, UnitTangent]:
    """Follow the geodesic from ``start`` for ``horizon`` units of time.

    Returns the word of crossed pairings ``w``, the elapsed time (equal to
    ``horizon``) and the re-centred end state.  The unwrapped endpoint in the
    universal cover is ``j(w)`` applied to the end state.
    """
    letters, _, end = crossings(surface, start, horizon)
    return Word(tuple(letters)), float(horizon), end


def unwrap(surface: SurfaceModel, w: Word, state: UnitTangent) -> UnitTangent:
    """Apply ``j(w)`` to a re-centred state, giving its position in the universal cover."""
    m = np.eye(2, dtype=complex)
    for c in w:
        m = m @ surface.disk_generators[c]
    den = m[1, 0] * state.base + m[1, 1]
    z = (m[0, 0] * state.base + m[0, 1]) / den
    u = state.direction / (den * den)
    return UnitTangent(complex(z), complex(u / abs(u)))


__all__ = [
    "UnitTangent",
    "SurfaceModel",
    "build_bolza_surface",
    "verify_surface",
    "polygon_area",
    "surface_to_dict",
    "surface_from_dict",
    "save_surface",
    "load_surface",
    "translation_length",
    "fenchel_nielsen_twist",
    "sample_liouville",
    "track_geodesic",
    "iter_crossings",
    "crossings",
    "unwrap",
    "to_disk",
    "from_disk",
    "mobius",
    "disk_distance",
]
