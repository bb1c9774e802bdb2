"""Closed geodesics, reparametrised periods, orbit-count entropy and the
renormalised intersection.

Two enumerations are provided.  :func:`enumerate_orbits` lists cyclic
words of bounded length.  :func:`enumerate_closed_geodesics` lists every
oriented closed geodesic up to a hyperbolic length, one per conjugacy
class, by walking the tiling.  Entropy and intersection estimates use the
second, which is complete in geometric length.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator

from ._validation import check_representation, check_seed
from .exceptions import InsufficientDataError, NonHyperbolicError
from .hyperbolic import SurfaceModel, build_bolza_surface
from .representation import Representation, compound_matrix
from .words import Word, cyclic_reduce, inverse_letter, min_rotation

MIN_ORBITS = 50
# weights carry ~1e-9 relative rounding error, so no stderr below this is meaningful
STDERR_FLOOR = 1e-9
SIGN_TOL = 1e-9


@dataclass(frozen=True)
class ClosedOrbit:
    word: Word
    length: float
    weights: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.word.letters != min_rotation(cyclic_reduce(self.word.letters)):
            raise ValueError(f"{self.word} is not in canonical cyclic form")
        if not self.length > 0:
            raise ValueError("orbit length must be positive")


@dataclass(frozen=True)
class OrbitTable:
    """Closed orbits with a completeness certificate.

    ``cutoff`` is the geometric length below which the table is exhaustive;
    ``complete_word_length`` is set for word-enumerated tables.
    """

    orbits: tuple[ClosedOrbit, ...]
    cutoff: float
    complete_word_length: int | None = None
    kind: str = "geometric"
    weight_source: str = ""

    def __len__(self) -> int:
        return len(self.orbits)

    @property
    def lengths(self) -> np.ndarray:
        return np.array([o.length for o in self.orbits])

    def weights(self, rank: int) -> np.ndarray:
        return np.array([o.weights[rank] for o in self.orbits])

    def words(self) -> list[Word]:
        return [o.word for o in self.orbits]


# -- word enumeration ---------------------------------------------------------------


def _reduced_word_array(n: int) -> np.ndarray:
    """All freely reduced words of length ``n`` as an ``(m, n)`` array."""
    words = np.arange(8).reshape(8, 1)
    for _ in range(n - 1):
        last = words[:, -1]
        parts = []
        for c in range(8):
            keep = last != inverse_letter(c)
            parts.append(np.column_stack([words[keep], np.full(keep.sum(), c)]))
        words = np.concatenate(parts)
    return words


def _canonical_codes(words: np.ndarray) -> np.ndarray:
    """Base-8 code of the minimal rotation of each (cyclically reduced) row."""
    n = words.shape[1]
    powers = 8 ** np.arange(n - 1, -1, -1, dtype=np.int64)
    best = None
    for k in range(n):
        code = np.roll(words, -k, axis=1).astype(np.int64) @ powers
        best = code if best is None else np.minimum(best, code)
    return best


def _batch_products(mats: np.ndarray, words: np.ndarray) -> np.ndarray:
    prod = mats[words[:, 0]]
    for i in range(1, words.shape[1]):
        prod = prod @ mats[words[:, i]]
    return prod


def enumerate_orbits(surface: SurfaceModel, max_word_length: int) -> OrbitTable:
    """Canonical cyclically reduced words of length at most ``max_word_length``.

    Words representing the identity of the surface group (relator rotations
    and their relatives) are dropped.  Distinct words may still be conjugate
    in the surface group once relations apply; the geometric enumeration
    does not have this caveat.
    """
    if max_word_length < 0:
        raise ValueError("max_word_length must be non-negative")
    mats = np.array(surface.generators)
    orbits: list[ClosedOrbit] = []
    ratio = np.inf
    for n in range(1, max_word_length + 1):
        words = _reduced_word_array(n)
        if n > 1:
            words = words[words[:, 0] != (words[:, -1] + 4) % 8]
        codes = _canonical_codes(words)
        _, first = np.unique(codes, return_index=True)
        words = words[np.sort(first)]
        prods = _batch_products(mats, words)
        tr = np.abs(prods[:, 0, 0] + prods[:, 1, 1])
        trivial = np.max(np.abs(prods - np.eye(2)), axis=(1, 2)) < 1e-6
        bad = (tr <= 2.0) & ~trivial
        if bad.any():
            raise NonHyperbolicError(f"non-hyperbolic word {Word(tuple(words[bad][0]))}")
        for w, t in zip(words[~trivial], tr[~trivial]):
            word = Word(min_rotation(tuple(int(c) for c in w)))
            length = 2.0 * float(np.arccosh(t / 2.0))
            orbits.append(ClosedOrbit(word, length))
            ratio = min(ratio, length / n)
    orbits.sort(key=lambda o: (o.length, o.word.letters))
    # geometric completeness: any shorter orbit would need more letters than listed
    cutoff = 0.0 if not orbits else ratio * max_word_length
    return OrbitTable(tuple(orbits), cutoff, max_word_length, kind="word")


# -- geometric enumeration ---------------------------------------------------------------


def _su11(g: np.ndarray) -> tuple[complex, complex]:
    """(alpha, beta) with the disk matrix [[alpha, beta], [conj beta, conj alpha]]."""
    from .hyperbolic import to_disk

    m = to_disk(g)
    return complex(m[0, 0]), complex(m[0, 1])


def _tile_keys(alpha: np.ndarray, beta: np.ndarray) -> np.ndarray:
    """Integer key of the tile centre g(0) from its hyperboloid coordinates.

    Distinct tile centres are at least twice the inradius apart, which keeps
    their spatial hyperboloid coordinates more than 4 apart.
    """
    x = 2.0 * alpha * beta
    k1 = np.round(x.real).astype(np.int64)
    k2 = np.round(x.imag).astype(np.int64)
    return (k1 + (1 << 30)) * (1 << 31) + (k2 + (1 << 30))


@dataclass
class _Ball:
    alpha: np.ndarray
    beta: np.ndarray
    parent: np.ndarray
    letter: np.ndarray
    depth: np.ndarray


def _tile_ball(surface: SurfaceModel, radius: float, chunk: int = 500_000) -> _Ball:
    """Every group element g with d(0, g(0)) <= radius, reached by breadth-first
    search on the tiling restricted to the ball (complete because each tile
    other than the base has a neighbour strictly closer to the centre)."""
    gens = [_su11(g) for g in surface.generators]
    ga = np.array([a for a, _ in gens])
    gb = np.array([b for _, b in gens])
    limit = 2.0 * np.cosh(radius / 2) ** 2 - 1  # cosh of the radius, via |a|^2 + |b|^2

    alpha = [np.array([1.0 + 0j])]
    beta = [np.array([0j])]
    parent = [np.array([-1], dtype=np.int64)]
    letter = [np.array([-1], dtype=np.int8)]
    depth = [np.array([0], dtype=np.int16)]
    keys = [_tile_keys(alpha[0], beta[0])]
    offset = 1
    front = 0
    while alpha[-1].size:
        fa, fb = alpha[-1], beta[-1]
        new_a, new_b, new_p, new_l = [], [], [], []
        for start in range(0, fa.size, chunk):
            a = fa[start : start + chunk, None]
            b = fb[start : start + chunk, None]
            # (a, b) * (ga, gb) in SU(1,1)
            na = a * ga + b * np.conj(gb)
            nb = a * gb + b * np.conj(ga)
            inside = (np.abs(na) ** 2 + np.abs(nb) ** 2) <= limit
            rows, cols = np.nonzero(inside)
            new_a.append(na[rows, cols])
            new_b.append(nb[rows, cols])
            new_p.append(front + start + rows)
            new_l.append(cols.astype(np.int8))
        na = np.concatenate(new_a)
        nb = np.concatenate(new_b)
        npar = np.concatenate(new_p)
        nlet = np.concatenate(new_l)
        nkey = _tile_keys(na, nb)
        _, first = np.unique(nkey, return_index=True)
        first = np.sort(first)
        na, nb, npar, nlet, nkey = na[first], nb[first], npar[first], nlet[first], nkey[first]
        seen = np.concatenate(keys[-2:])
        fresh = ~np.isin(nkey, seen)
        front = offset
        offset += int(fresh.sum())
        alpha.append(na[fresh])
        beta.append(nb[fresh])
        parent.append(npar[fresh])
        letter.append(nlet[fresh])
        depth.append(np.full(int(fresh.sum()), len(depth), dtype=np.int16))
        keys.append(nkey[fresh])
    return _Ball(
        np.concatenate(alpha),
        np.concatenate(beta),
        np.concatenate(parent),
        np.concatenate(letter),
        np.concatenate(depth),
    )


def _ball_word(ball: _Ball, i: int) -> tuple[int, ...]:
    out = []
    while ball.parent[i] >= 0:
        out.append(int(ball.letter[i]))
        i = int(ball.parent[i])
    return tuple(reversed(out))


def _axis_sides(surface: SurfaceModel, alpha: np.ndarray, beta: np.ndarray) -> np.ndarray:
    """Signs of the octagon vertices relative to each element's axis, shape (n, 8)."""
    im = alpha.imag
    root = np.sqrt(np.abs(beta) ** 2 - im**2)
    e1 = (1j * im + root) / np.conj(beta)
    e2 = (1j * im - root) / np.conj(beta)
    l1 = np.stack([np.ones_like(e1.real), e1.real, e1.imag], axis=1)
    l2 = np.stack([np.ones_like(e2.real), e2.real, e2.imag], axis=1)
    normal = np.cross(l1, l2)
    normal /= np.linalg.norm(normal, axis=1, keepdims=True)
    v = surface.vertices
    vn = 1 - np.abs(v) ** 2
    hyp = np.stack([(1 + np.abs(v) ** 2) / vn, 2 * v.real / vn, 2 * v.imag / vn], axis=1)
    hyp /= np.linalg.norm(hyp, axis=1, keepdims=True)
    signs = normal @ hyp.T
    # axes through a vertex count as touching both adjacent sides
    signs[np.abs(signs) < SIGN_TOL] = 0.0
    return signs


def enumerate_closed_geodesics(surface: SurfaceModel, max_length: float) -> OrbitTable:
    """All oriented closed geodesics of length at most ``max_length``.

    Each conjugacy class of hyperbolic elements is found through the lifts
    of its axis that meet the octagon; those lifts are the elements of the
    ball ``d(0, g(0)) <= T + 2 log cosh R + log 2`` (R the circumradius)
    with short translation length and axis through the octagon.  Lifts of
    the same geodesic are linked by conjugating with the pairing of every
    side their axis crosses.  Powers of primitive geodesics are retained.
    """
    T = float(max_length)
    if not T > 0:
        raise ValueError("max_length must be positive")
    radius = T + 2 * np.log(np.cosh(surface.circumradius)) + np.log(2) + 1e-6
    ball = _tile_ball(surface, radius)

    half_trace = np.abs(ball.alpha.real)
    short = np.flatnonzero((half_trace > 1.0) & (2 * np.arccosh(np.maximum(half_trace, 1.0)) <= T + 1e-12))
    signs = _axis_sides(surface, ball.alpha[short], ball.beta[short])
    meets = (signs.min(axis=1) <= 0) & (signs.max(axis=1) >= 0)
    cand = short[meets]
    signs = signs[meets]
    index = {int(k): i for i, k in enumerate(_tile_keys(ball.alpha[cand], ball.beta[cand]))}

    parent = np.arange(cand.size)

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    gens = [_su11(g) for g in surface.generators]
    a, b = ball.alpha[cand], ball.beta[cand]
    for k in range(8):
        # the axis crosses side k when its endpoints v_{k-1}, v_k straddle it
        crosses = signs[:, k - 1] * signs[:, k] <= 0
        xa, xb = gens[k]
        ya, yb = gens[(k + 4) % 8]
        # conj(x_k) = x_k^-1 g x_k
        ma = ya * a + yb * np.conj(b)
        mb = ya * b + yb * np.conj(a)
        ca = ma * xa + mb * np.conj(xb)
        cb = ma * xb + mb * np.conj(xa)
        ckeys = _tile_keys(ca, cb)
        for i in np.flatnonzero(crosses):
            j = index.get(int(ckeys[i]))
            if j is not None:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[ri] = rj

    roots = np.array([find(i) for i in range(cand.size)])
    depth = ball.depth[cand]
    orbits = []
    for root in np.unique(roots):
        members = np.flatnonzero(roots == root)
        best = members[np.argmin(depth[members])]
        word = Word(min_rotation(cyclic_reduce(_ball_word(ball, int(cand[best])))))
        length = 2.0 * float(np.arccosh(abs(ball.alpha[cand[best]].real)))
        orbits.append(ClosedOrbit(word, length))
    orbits.sort(key=lambda o: (o.length, o.word.letters))
    return OrbitTable(tuple(orbits), T, None, kind="geometric")


# -- weights -----------------------------------------------------------------------------


def _log_spectral_radii(rep: Representation, words: list[Word], k: int) -> np.ndarray:
    """log of the spectral radius of wedge^k rho(w) for each word."""
    mats = np.array([compound_matrix(m, k) for m in rep.letter_matrices])
    out = np.empty(len(words))
    by_len: dict[int, list[int]] = {}
    for i, w in enumerate(words):
        by_len.setdefault(len(w), []).append(i)
    for n, idx in by_len.items():
        arr = np.array([words[i].letters for i in idx])
        prod = _batch_products(mats, arr)
        ev = np.abs(np.linalg.eigvals(prod)).max(axis=1)
        out[idx] = np.log(ev)
    return out


def word_weights(rep: Representation, words, ranks=None) -> dict[int, np.ndarray]:
    """``log(lambda_i / lambda_{i+1})(rho(w))`` per rank for each word.

    ``lambda_1 ... lambda_k`` is the spectral radius of the k-th exterior
    power, so each weight is a combination of top eigenvalues only.  Words
    are cyclically reduced first: the weight is a class function, and
    evaluating a long conjugator only costs precision.
    """
    rep = check_representation(rep, min_d=2)
    d = rep.d
    ranks = list(range(1, d)) if ranks is None else sorted(set(int(r) for r in ranks))
    if not ranks or ranks[0] < 1 or ranks[-1] > d - 1:
        raise ValueError(f"ranks must lie in 1..{d - 1}")
    words = [(w if isinstance(w, Word) else Word(tuple(w))).cyclic_reduction() for w in words]
    needed = sorted({k for r in ranks for k in (r - 1, r, r + 1) if 1 <= k <= d - 1})
    logs = {0: np.zeros(len(words)), d: np.zeros(len(words))}
    for k in needed:
        logs[k] = _log_spectral_radii(rep, words, k) if words else np.zeros(0)
    weights = {r: 2 * logs[r] - logs[r - 1] - logs[r + 1] for r in ranks}
    for r, w in weights.items():
        if not np.all(np.isfinite(w)):
            raise NonHyperbolicError(f"non-finite weights for rank {r}")
    return weights


def orbit_weights(table: OrbitTable, rep: Representation, ranks=None) -> OrbitTable:
    """Fill ``weight_i = log(lambda_i / lambda_{i+1})(rho(gamma))`` for each rank."""
    rep = check_representation(rep, min_d=2)
    weights = word_weights(rep, table.words(), ranks)
    ranks = sorted(weights)
    orbits = tuple(
        replace(o, weights={r: float(weights[r][i]) for r in ranks}) for i, o in enumerate(table.orbits)
    )
    return replace(table, orbits=orbits, weight_source=rep.provenance)


# -- entropy and intersection -------------------------------------------------------------


@dataclass(frozen=True)
class EntropyFit:
    h: float
    band: float
    intercept: float
    cutoff: float
    windows: tuple = ()

    def to_dict(self) -> dict:
        return {"h": self.h, "band": self.band, "intercept": self.intercept, "cutoff": self.cutoff,
                "windows": [list(w) for w in self.windows]}


def _periods(table: OrbitTable, selector) -> tuple[np.ndarray, float]:
    """Periods for the selector and the largest cutoff at which they are complete."""
    lengths = table.lengths
    if selector in (None, "length", "geometric"):
        return lengths, table.cutoff
    rank = int(selector)
    p = table.weights(rank)
    # p <= c * cutoff implies length <= cutoff when c = min(p / length)
    return p, table.cutoff * float(np.min(p / lengths))


def entropy(table: OrbitTable, selector="length", width: float = 4.0) -> EntropyFit:
    """Fit ``log(N(T) T) = h T + c`` on windows ending at the completeness cutoff.

    The reported ``h`` uses the window ``[cutoff - width, cutoff]``; ``band``
    is the spread of the fitted slope over nearby windows.
    """
    if len(table) < MIN_ORBITS:
        raise InsufficientDataError(f"need at least {MIN_ORBITS} orbits, have {len(table)}")
    periods, top = _periods(table, selector)
    periods = np.sort(periods)

    def fit(lo, hi):
        t = np.linspace(lo, hi, 200)
        n = np.searchsorted(periods, t, side="right")
        ok = n > 0
        if ok.sum() < 10:
            raise InsufficientDataError("too few orbits inside the fitting window")
        slope, intercept = np.polyfit(t[ok], np.log(n[ok] * t[ok]), 1)
        return float(slope), float(intercept)

    h, c = fit(top - width, top)
    windows = []
    for hi in (top - 1.0, top - 0.5, top):
        for w in (width - 1.0, width, width + 1.0):
            if hi - w > 0:
                windows.append((hi - w, hi, fit(hi - w, hi)[0]))
    slopes = [w[2] for w in windows]
    return EntropyFit(h, float(max(slopes) - min(slopes)), c, float(top), tuple(windows))


@dataclass(frozen=True)
class IntersectionEstimate:
    J: float
    stderr: float
    rank: int
    n_orbits: int
    cutoff: float
    entropy: float | None = None

    def to_dict(self) -> dict:
        return {"J": self.J, "stderr": self.stderr, "rank": self.rank, "n_orbits": self.n_orbits,
                "cutoff": self.cutoff, "entropy": self.entropy}


def renormalized_intersection(
    table: OrbitTable,
    rep: Representation | None = None,
    rank: int = 1,
    n_boot: int = 200,
    seed: int = 0,
    with_entropy: bool = True,
) -> IntersectionEstimate:
    """Average of ``weight_rank / length`` over orbits up to the cutoff.

    The entropy of the reparametrised flow is taken to be one; the fitted
    value is reported alongside.  ``stderr`` is a bootstrap over orbits,
    floored at the rounding level of the weights.
    """
    if rep is not None:
        table = orbit_weights(table, rep, [rank])
    lengths = table.lengths
    keep = lengths <= table.cutoff
    if keep.sum() < MIN_ORBITS:
        raise InsufficientDataError(f"need at least {MIN_ORBITS} orbits below the cutoff")
    ratio = table.weights(rank)[keep] / lengths[keep]
    rng = np.random.default_rng(check_seed(seed))
    boot = rng.choice(ratio, size=(n_boot, ratio.size), replace=True).mean(axis=1)
    h = None
    if with_entropy:
        try:
            h = entropy(table, rank).h
        except InsufficientDataError:
            h = None
    return IntersectionEstimate(float(ratio.mean()), max(float(boot.std(ddof=1)), STDERR_FLOOR), rank, int(keep.sum()),
                                table.cutoff, h)


class RenormalizedIntersection(BaseEstimator):
    """``fit(rep)`` enumerates closed geodesics (once per instance) and sets
    ``J_`` and ``stderr_`` per requested rank."""

    def __init__(self, max_length=12.0, ranks=None, n_boot=200, random_state=0, surface=None):
        self.max_length = max_length
        self.ranks = ranks
        self.n_boot = n_boot
        self.random_state = random_state
        self.surface = surface

    def fit(self, rep, y=None):
        rep = check_representation(rep, min_d=2)
        surface = self.surface if self.surface is not None else build_bolza_surface()
        if getattr(self, "table_", None) is None or self.table_.cutoff != self.max_length:
            self.table_ = enumerate_closed_geodesics(surface, self.max_length)
        ranks = list(range(1, rep.d)) if self.ranks is None else list(self.ranks)
        weighted = orbit_weights(self.table_, rep, ranks)
        self.estimates_ = {
            r: renormalized_intersection(weighted, None, r, self.n_boot, self.random_state) for r in ranks
        }
        self.J_ = np.array([self.estimates_[r].J for r in ranks])
        self.stderr_ = np.array([self.estimates_[r].stderr for r in ranks])
        return self


# -- persistence ---------------------------------------------------------------------------


def table_to_csv(table: OrbitTable) -> str:
    ranks = sorted(table.orbits[0].weights) if table.orbits else []
    header = {
        "cutoff": table.cutoff,
        "complete_word_length": table.complete_word_length,
        "kind": table.kind,
        "weight_source": table.weight_source,
        "ranks": ranks,
    }
    buf = io.StringIO()
    buf.write("# " + json.dumps(header, sort_keys=True) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["word", "length"] + [f"weight_{r}" for r in ranks])
    for o in table.orbits:
        writer.writerow([str(o.word), repr(o.length)] + [repr(o.weights[r]) for r in ranks])
    return buf.getvalue()


def table_from_csv(text: str) -> OrbitTable:
    lines = text.splitlines()
    if not lines or not lines[0].startswith("# "):
        raise ValueError("orbit table is missing its JSON header line")
    header = json.loads(lines[0][2:])
    ranks = [int(r) for r in header.get("ranks", [])]
    reader = csv.reader(lines[1:])
    next(reader)
    orbits = []
    for row in reader:
        weights = {r: float(x) for r, x in zip(ranks, row[2:])}
        orbits.append(ClosedOrbit(Word.parse(row[0]), float(row[1]), weights))
    return OrbitTable(tuple(orbits), float(header["cutoff"]), header.get("complete_word_length"),
                      header.get("kind", "geometric"), header.get("weight_source", ""))


def save_table(table: OrbitTable, path: str | Path) -> None:
    Path(path).write_text(table_to_csv(table))


def load_table(path: str | Path) -> OrbitTable:
    return table_from_csv(Path(path).read_text())


__all__ = [
    "ClosedOrbit",
    "OrbitTable",
    "enumerate_orbits",
    "enumerate_closed_geodesics",
    "orbit_weights",
    "word_weights",
    "EntropyFit",
    "entropy",
    "IntersectionEstimate",
    "renormalized_intersection",
    "RenormalizedIntersection",
    "table_to_csv",
    "table_from_csv",
    "save_table",
    "load_table",
]
