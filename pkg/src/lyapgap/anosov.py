"""Boundary maps, Anosov and hyperconvexity diagnostics, and the transverse exponent."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed
from scipy.linalg import subspace_angles
from sklearn.base import BaseEstimator

from ._validation import (
    check_horizon,
    check_positive_int,
    check_representation,
    check_seed,
    effective_n_jobs,
)
from .exceptions import (
    DegenerateInputError,
    DimensionError,
    NoConvergenceError,
    SamplingError,
    TangencyError,
)
from .hyperbolic import (
    SurfaceModel,
    UnitTangent,
    build_bolza_surface,
    crossings,
    sample_liouville,
)
from .lyapunov import MAX_RETRIES, spectrum, transport_matrices, tracked_orbit
from .representation import Representation
from .words import RELATOR, inverse_letter

FLAG_SEED = 20240611
MIN_SV_RATIO = 10.0
CONVERGENCE_ANGLE = 1e-4


def subspace_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Largest principal angle between the column spans of ``a`` and ``b``."""
    return float(np.max(subspace_angles(a, b)))


@dataclass(frozen=True)
class ProjectivePoint:
    v: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.v, dtype=float)
        n = np.linalg.norm(v)
        if n == 0:
            raise DegenerateInputError("zero vector has no projective class")
        object.__setattr__(self, "v", v / n)


@dataclass(frozen=True)
class FlagApprox:
    """Nested orthonormal bases for the requested ranks.

    ``subspaces[p]`` is a ``d x p`` matrix; ``log_sv`` holds approximate log
    singular values of the long product.
    """

    subspaces: dict
    at: UnitTangent
    converged: bool
    log_sv: np.ndarray = field(repr=False)
    frame: np.ndarray = field(repr=False)


def _sign_fixed_qr(m: np.ndarray):
    q, r = np.linalg.qr(m)
    diag = np.diag(r)
    signs = np.where(diag < 0, -1.0, 1.0)
    return q * signs, np.log(np.abs(diag))


def _initial_frame(d: int) -> np.ndarray:
    rng = np.random.default_rng(FLAG_SEED)
    q, _ = np.linalg.qr(rng.standard_normal((d, d)))
    return q


def flag_from_letters(rep: Representation, letters) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal frame whose leading columns span the top left singular
    subspaces of ``rho(letters)``, with accumulated log R-diagonals.

    Letters are applied last-first, which is the numerically stable way to
    form ``rho(g1) ... rho(gn) V``.
    """
    mats = rep.letter_matrices
    frame = _initial_frame(rep.d)
    logs = np.zeros(rep.d)
    for c in reversed(letters):
        frame, lr = _sign_fixed_qr(mats[c] @ frame)
        logs += lr
    return frame, logs


def _check_ratios(logs: np.ndarray, ps) -> None:
    for p in ps:
        if logs[p - 1] - logs[p] < np.log(MIN_SV_RATIO):
            raise NoConvergenceError(
                f"singular value ratio sigma_{p}/sigma_{p + 1} = {np.exp(logs[p - 1] - logs[p]):.3g}"
                f" < {MIN_SV_RATIO}: representation is likely not {p}-Anosov"
            )


def boundary_flag(
    surface: SurfaceModel, rep: Representation, start: UnitTangent, horizon: float, ps=(1,)
) -> FlagApprox:
    """Approximate xi_p at the forward endpoint of the ray from ``start``."""
    rep = check_representation(rep, min_d=2)
    ps = sorted(set(int(p) for p in ps))
    if not ps or ps[0] < 1 or ps[-1] > rep.d - 1:
        raise ValueError(f"ranks must lie in 1..{rep.d - 1}")
    letters, times, _ = crossings(surface, start, horizon)
    frame, logs = flag_from_letters(rep, letters)
    _check_ratios(logs, ps)
    half = [c for c, t in zip(letters, times) if t <= horizon / 2]
    frame_half, _ = flag_from_letters(rep, half)
    converged = all(subspace_distance(frame[:, :p], frame_half[:, :p]) < CONVERGENCE_ANGLE for p in ps)
    return FlagApprox({p: frame[:, :p].copy() for p in ps}, start, converged, logs, frame)


# -- p-Anosov diagnostic -----------------------------------------------------------


def _forbidden_subwords() -> dict[int, set[int]]:
    """Base-8 codes of subwords longer than half a cyclic rotation of R or R^-1."""
    out: dict[int, set[int]] = {}
    n = len(RELATOR)
    for rel in (RELATOR.letters, RELATOR.inverse().letters):
        for k in range(n):
            rot = rel[k:] + rel[:k]
            for length in range(n // 2 + 1, n + 1):
                code = 0
                for c in rot[:length]:
                    code = code * 8 + c
                out.setdefault(length, set()).add(code)
    return out


@dataclass(frozen=True)
class AnosovFit:
    p: int
    slope: float
    intercept: float
    per_length: np.ndarray

    @property
    def consistent(self) -> bool:
        return self.slope < -0.05

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "slope": self.slope,
            "intercept": self.intercept,
            "per_length_max": self.per_length.tolist(),
            "consistent_with_anosov": self.consistent,
        }


def anosov_diagnostic(rep: Representation, max_word_length: int, chunk: int = 200_000) -> list[AnosovFit]:
    """Fit ``max_{|w| = n} log(sigma_{p+1}/sigma_p)(rho(w))`` against ``n``.

    Words are freely reduced and contain no subword longer than half a
    relator, so none of them collapses to a short element.  Singular value
    ratios come from operator norms of exterior powers,
    ``sigma_1 ... sigma_k = ||wedge^k g||``, which stay accurate when the
    spread of singular values exceeds machine precision.
    """
    from .representation import compound_matrix

    rep = check_representation(rep, min_d=2)
    L = check_positive_int(max_word_length, "max_word_length")
    d = rep.d
    letter_stacks = [
        np.array([compound_matrix(m, k) for m in rep.letter_matrices]) for k in range(1, d)
    ]
    forbidden = {k: np.array(sorted(v), dtype=np.int64) for k, v in _forbidden_subwords().items()}
    mod = 8 ** max(forbidden)

    def level_max(stacks):
        out = np.full(d - 1, -np.inf)
        for i in range(0, stacks[0].shape[0], chunk):
            # log ||wedge^k||, with wedge^0 and wedge^d of norm one
            logs = [np.zeros(min(chunk, stacks[0].shape[0] - i))]
            logs += [np.log(np.linalg.norm(s[i : i + chunk], 2, axis=(1, 2))) for s in stacks]
            logs.append(logs[0])
            for p in range(1, d):
                ratio = logs[p + 1] - 2 * logs[p] + logs[p - 1]
                out[p - 1] = max(out[p - 1], float(ratio.max()))
        return out

    worst = np.full((L, d - 1), -np.inf)
    stacks = [s.copy() for s in letter_stacks]
    last = np.arange(8)
    codes = np.arange(8, dtype=np.int64)
    for level in range(1, L + 1):
        worst[level - 1] = level_max(stacks)
        if level == L:
            break
        parts, new_last, new_codes = [], [], []
        for c in range(8):
            keep = last != inverse_letter(c)
            code = (codes[keep] * 8 + c) % mod
            ok = np.ones(code.shape, dtype=bool)
            for length, table in forbidden.items():
                if length <= level + 1:
                    ok &= ~np.isin(code % (8**length), table)
            idx = np.flatnonzero(keep)[ok]
            parts.append([s[idx] @ m[c] for s, m in zip(stacks, letter_stacks)])
            new_last.append(np.full(idx.size, c))
            new_codes.append(code[ok])
        stacks = [np.concatenate([part[k] for part in parts]) for k in range(d - 1)]
        last = np.concatenate(new_last)
        codes = np.concatenate(new_codes)

    n = np.arange(1, L + 1)
    fits = []
    for p in range(1, d):
        y = worst[:, p - 1]
        slope, intercept = np.polyfit(n, y, 1)
        fits.append(AnosovFit(p, float(slope), float(intercept), y.copy()))
    return fits


# -- hyperconvexity -------------------------------------------------------------------


def validate_triple(rays) -> None:
    """Reject triples of rays that do not have pairwise distinct endpoints."""
    rays = list(rays)
    if len(rays) != 3:
        raise ValueError("expected three rays")
    for i in range(3):
        for j in range(i + 1, 3):
            a, b = rays[i], rays[j]
            if abs(a.base - b.base) < 1e-12 and abs(a.direction - b.direction) < 1e-9:
                raise ValueError("rays of a triple must be pairwise distinct")


def sample_triple(surface: SurfaceModel, rng: np.random.Generator, min_separation: float = np.pi / 6):
    """Three rays from the centre of the octagon whose directions are pairwise
    at least ``min_separation`` apart, so the endpoints are distinct."""
    while True:
        angles = np.sort(rng.uniform(0, 2 * np.pi, size=3))
        gaps = np.diff(np.concatenate([angles, [angles[0] + 2 * np.pi]]))
        if gaps.min() >= min_separation:
            break
    rays = [UnitTangent(0j, complex(np.cos(a), np.sin(a))) for a in angles]
    validate_triple(rays)
    return rays


def transversality_score(xi_x: np.ndarray, xi_y: np.ndarray, xi_z: np.ndarray) -> float:
    """Smallest principal angle between span(xi_x, xi_y) and xi_z."""
    plane = np.column_stack([xi_x, xi_y])
    return float(np.min(subspace_angles(plane, xi_z)))


def hyperconvexity_check(
    surface: SurfaceModel,
    rep: Representation,
    n_triples: int,
    horizon: float,
    seed: int,
    min_separation: float = np.pi / 6,
) -> float:
    """Minimum transversality score over random triples of boundary points."""
    rep = check_representation(rep)
    if rep.d < 3:
        raise DimensionError("hyperconvexity needs d >= 3")
    n_triples = check_positive_int(n_triples, "n_triples")
    rng = np.random.default_rng(check_seed(seed))
    q = rep.d - 2
    scores = []
    for _ in range(n_triples):
        for _attempt in range(MAX_RETRIES + 1):
            x, y, z = sample_triple(surface, rng, min_separation)
            try:
                fx = boundary_flag(surface, rep, x, horizon, (1,))
                fy = boundary_flag(surface, rep, y, horizon, (1,))
                fz = boundary_flag(surface, rep, z, horizon, (q,))
            except TangencyError:
                continue
            break
        else:
            raise SamplingError("could not draw a triple avoiding polygon vertices")
        scores.append(transversality_score(fx.subspaces[1], fy.subspaces[1], fz.subspaces[q]))
    return float(min(scores))


# -- projective derivative and transverse exponent ---------------------------------------


def _wedge_norm(u: np.ndarray, v: np.ndarray) -> float:
    r = np.linalg.qr(np.column_stack([u, v]), mode="r")
    return float(abs(r[0, 0] * r[1, 1]))


def projective_derivative_norm(g: np.ndarray, u: np.ndarray, v: np.ndarray) -> float:
    """Norm of the derivative at [u] of the projective map of ``g`` restricted
    to the projective line P(span(u, v)):

        ||gu ^ gv|| / ||u ^ v|| * (||gu|| / ||u||)^-2
    """
    g = np.asarray(g, dtype=float)
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    uv = _wedge_norm(u, v)
    if uv < 1e-12 * max(1.0, np.linalg.norm(u) * np.linalg.norm(v)):
        raise DegenerateInputError("u and v are (numerically) parallel")
    gu, gv = g @ u, g @ v
    ratio = np.linalg.norm(gu) / np.linalg.norm(u)
    return _wedge_norm(gu, gv) / uv / ratio**2


@dataclass(frozen=True)
class TransverseEstimate:
    value: float
    stderr: float
    samples: int
    horizon: float
    method: str
    per_sample: np.ndarray = field(repr=False)

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "stderr": self.stderr,
            "samples": self.samples,
            "horizon": self.horizon,
            "method": self.method,
        }


def _backward_letters(surface, state: UnitTangent, flag_horizon: float) -> list[int]:
    letters, _, _ = crossings(surface, state.reversed(), flag_horizon)
    return letters


def _plane_from_backward(rep, letters):
    frame, logs = flag_from_letters(rep, letters)
    _check_ratios(logs, (1, 2))
    return frame[:, 0].copy(), frame[:, 1].copy()


def _backward_plane(surface, rep, state: UnitTangent, flag_horizon: float):
    return _plane_from_backward(rep, _backward_letters(surface, state, flag_horizon))


def _transport_pair(a, u, v):
    au = a @ u
    q, _ = np.linalg.qr(np.column_stack([au, a @ v]))
    # keep u on the transported line; v completes the plane
    return q[:, 0] * np.sign(q[:, 0] @ au), q[:, 1]


def _transverse_sample(surface, rep, horizon, flag_horizon, refresh_every, seed_seq):
    rng = np.random.default_rng(seed_seq)
    mats = transport_matrices(rep)
    for _attempt in range(MAX_RETRIES + 1):
        start = sample_liouville(surface, rng)
        try:
            past = _backward_letters(surface, start, flag_horizon)
            window = len(past)
            u, v = _plane_from_backward(rep, past)
            letters, _, _ = crossings(surface, start, horizon)
        except TangencyError:
            continue
        total = 0.0
        for step, letter in enumerate(letters, 1):
            a = mats[letter]
            total += np.log(projective_derivative_norm(a, u, v))
            u, v = _transport_pair(a, u, v)
            past.insert(0, inverse_letter(letter))
            if refresh_every and step % refresh_every == 0:
                # the backward ray from here retraces the orbit's past
                del past[window:]
                u, v = _plane_from_backward(rep, past)
        return total / horizon
    return None


def transverse_exponent(
    surface: SurfaceModel,
    rep: Representation,
    horizon: float,
    n_samples: int,
    seed: int,
    flag_horizon: float = 60.0,
    refresh_every: int = 1000,
    n_jobs: int | None = None,
) -> TransverseEstimate:
    """Transverse exponent through the fibre formula, expected to equal lambda_2 - lambda_1.

    Per sample: take u in xi_1 and v completing xi_2 at the backward endpoint
    (from the backward boundary flag), then average the log projective
    derivative of each crossing matrix on the transported pair.  For d = 2
    the curve has no transverse direction and the value is taken from the
    QR spectrum instead (``method`` records which).
    """
    rep = check_representation(rep)
    horizon = check_horizon(horizon, minimum=1.0)
    n_samples = check_positive_int(n_samples, "n_samples")
    seed = check_seed(seed)
    if rep.d < 2:
        raise DimensionError("transverse exponent needs d >= 2")
    if rep.d == 2:
        est = spectrum(surface, rep, horizon, n_samples, seed, n_jobs)
        per = est.per_sample[:, 1] - est.per_sample[:, 0]
        return TransverseEstimate(
            float(per.mean()), float(est.gap_stderr[0]), est.samples, horizon,
            "identity: lambda_2 - lambda_1 from the QR spectrum (d=2)", per,
        )
    children = np.random.SeedSequence(seed).spawn(n_samples)
    jobs = effective_n_jobs(n_jobs)
    args = (surface, rep, horizon, flag_horizon, refresh_every)
    if jobs == 1:
        vals = [_transverse_sample(*args, s) for s in children]
    else:
        vals = Parallel(n_jobs=jobs)(delayed(_transverse_sample)(*args, s) for s in children)
    good = np.array([v for v in vals if v is not None])
    if n_samples - len(good) > 0.01 * n_samples:
        raise SamplingError("too many transverse samples aborted on vertex tangencies")
    stderr = float(good.std(ddof=1) / np.sqrt(len(good))) if len(good) > 1 else float("nan")
    return TransverseEstimate(float(good.mean()), stderr, len(good), horizon, "fibre formula", good)


class TransverseExponent(BaseEstimator):
    def __init__(self, horizon=1e4, n_samples=16, random_state=0, flag_horizon=60.0,
                 refresh_every=1000, n_jobs=None, surface=None):
        self.horizon = horizon
        self.n_samples = n_samples
        self.random_state = random_state
        self.flag_horizon = flag_horizon
        self.refresh_every = refresh_every
        self.n_jobs = n_jobs
        self.surface = surface

    def fit(self, rep, y=None):
        surface = self.surface if self.surface is not None else build_bolza_surface()
        est = transverse_exponent(surface, rep, self.horizon, self.n_samples, self.random_state,
                                  self.flag_horizon, self.refresh_every, self.n_jobs)
        self.estimate_ = est
        self.exponent_ = est.value
        self.stderr_ = est.stderr
        self.method_ = est.method
        return self


# -- diagnostics used by the property tests -------------------------------------------


def oseledets_angles(
    surface: SurfaceModel,
    rep: Representation,
    horizon: float,
    checkpoints,
    seed: int,
    flag_horizon: float = 60.0,
) -> np.ndarray:
    """Angle between running approximations of E^1 and E^2 at each checkpoint.

    E^1 is the transported backward line, E^2 the intersection of the
    transported backward plane with the forward (d-1)-flag of the future ray.
    """
    rep = check_representation(rep, min_d=3)
    rng = np.random.default_rng(check_seed(seed))
    mats = transport_matrices(rep)
    start, letters, times, _ = tracked_orbit(surface, horizon + flag_horizon, rng)
    u, v = _backward_plane(surface, rep, start, flag_horizon)
    letters = np.asarray(letters)
    times = np.asarray(times)
    # number of crossings already applied at each checkpoint
    marks = np.searchsorted(times, np.asarray(checkpoints, dtype=float), side="right")
    out = []
    applied = 0
    for mark in marks:
        for letter in letters[applied:mark]:
            u, v = _transport_pair(mats[letter], u, v)
        applied = mark
        t = times[mark - 1] if mark else 0.0
        future = letters[(times > t) & (times <= t + flag_horizon)]
        frame, _ = flag_from_letters(rep, list(future))
        normal = np.linalg.svd(frame[:, : rep.d - 1].T)[2][-1]
        # E^2 is the line of the transported plane inside the forward hyperplane
        w = (normal @ v) * u - (normal @ u) * v
        out.append(float(np.min(subspace_angles(u[:, None], w[:, None]))))
    return np.array(out)


def lambda_sigma_gap(rep: Representation, letters) -> float:
    """``log lambda_1 - log sigma_1`` of ``rho(letters)``, with running rescaling
    so that long products do not overflow."""
    mats = rep.letter_matrices
    prod = np.eye(rep.d)
    for c in letters:
        prod = prod @ mats[c]
        prod /= np.linalg.norm(prod, 2)
    ev = np.max(np.abs(np.linalg.eigvals(prod)))
    return float(np.log(ev) - np.log(np.linalg.norm(prod, 2)))


__all__ = [
    "ProjectivePoint",
    "FlagApprox",
    "boundary_flag",
    "flag_from_letters",
    "subspace_distance",
    "AnosovFit",
    "anosov_diagnostic",
    "validate_triple",
    "sample_triple",
    "transversality_score",
    "hyperconvexity_check",
    "projective_derivative_norm",
    "TransverseEstimate",
    "transverse_exponent",
    "TransverseExponent",
    "oseledets_angles",
    "lambda_sigma_gap",
]
