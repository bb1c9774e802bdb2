"""Lyapunov spectra of the flat bundle over the geodesic flow.

Each sample tracks a Liouville-random geodesic and pushes an orthonormal
frame through the transport matrices of the crossed sides, re-orthonormalising
with QR at every crossing.  Crossing side ``k`` (letter ``x``) re-centres the
orbit with ``x^-1``, so the frame is multiplied on the left by ``rho(x)^-1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed
from sklearn.base import BaseEstimator

from ._validation import (
    check_horizon,
    check_positive_int,
    check_representation,
    check_seed,
    effective_n_jobs,
)
from .exceptions import SamplingError, TangencyError
from .hyperbolic import SurfaceModel, build_bolza_surface, crossings, sample_liouville
from .representation import Representation

MAX_RETRIES = 10


@dataclass
class QrAccumulator:
    """Orthonormal frame plus running sums of log R-diagonal entries."""

    frame: np.ndarray
    log_diag: np.ndarray
    elapsed: float = 0.0
    steps: int = 0

    @classmethod
    def identity(cls, d: int) -> "QrAccumulator":
        return cls(np.eye(d), np.zeros(d))

    def push(self, a: np.ndarray) -> None:
        q, r = np.linalg.qr(a @ self.frame)
        diag = np.diag(r)
        signs = np.where(diag < 0, -1.0, 1.0)
        self.frame = q * signs
        self.log_diag += np.log(np.abs(diag))
        self.steps += 1


@dataclass(frozen=True)
class SpectrumEstimate:
    lambdas: np.ndarray
    stderr: np.ndarray
    samples: int
    horizon: float
    per_sample: np.ndarray = field(repr=False)
    seed: int | None = None
    crossings: int = 0
    retries: int = 0

    @property
    def d(self) -> int:
        return len(self.lambdas)

    @property
    def gaps(self) -> np.ndarray:
        return self.lambdas[:-1] - self.lambdas[1:]

    @property
    def gap_stderr(self) -> np.ndarray:
        per = self.per_sample[:, :-1] - self.per_sample[:, 1:]
        return _stderr(per)

    def to_dict(self) -> dict:
        return {
            "lambdas": self.lambdas.tolist(),
            "stderr": self.stderr.tolist(),
            "gaps": self.gaps.tolist(),
            "gap_stderr": self.gap_stderr.tolist(),
            "samples": self.samples,
            "horizon": self.horizon,
            "seed": self.seed,
            "crossings": self.crossings,
            "retries": self.retries,
        }


def _stderr(x: np.ndarray) -> np.ndarray:
    n = x.shape[0]
    if n < 2:
        return np.full(x.shape[1:], np.nan)
    return x.std(axis=0, ddof=1) / np.sqrt(n)


def transport_matrices(rep: Representation) -> tuple[np.ndarray, ...]:
    """Matrix applied to the frame when the orbit crosses with each letter."""
    return tuple(rep.letter_matrix((c + 4) % 8) for c in range(8))


def tracked_orbit(surface: SurfaceModel, horizon: float, rng: np.random.Generator):
    """Liouville start and its crossings, redrawing the start after a vertex hit."""
    for attempt in range(MAX_RETRIES + 1):
        start = sample_liouville(surface, rng)
        try:
            letters, times, _ = crossings(surface, start, horizon)
        except TangencyError:
            continue
        return start, letters, times, attempt
    raise TangencyError(f"{MAX_RETRIES + 1} consecutive starts hit a vertex")


def qr_exponents(rep: Representation, letters, times, horizon: float, checkpoints=None):
    """Log-diagonal growth along one orbit; optionally sampled at checkpoints.

    Returns the unsorted log-diagonal divided by ``horizon`` and, when
    checkpoints are given, an array of running (sorted) estimates.
    """
    mats = transport_matrices(rep)
    acc = QrAccumulator.identity(rep.d)
    curve = []
    cps = list(checkpoints) if checkpoints is not None else []
    ci = 0
    for letter, t in zip(letters, times):
        while ci < len(cps) and cps[ci] < t:
            curve.append(np.sort(acc.log_diag / cps[ci])[::-1])
            ci += 1
        acc.push(mats[letter])
    while ci < len(cps):
        curve.append(np.sort(acc.log_diag / cps[ci])[::-1])
        ci += 1
    acc.elapsed = horizon
    return acc.log_diag / horizon, np.array(curve)


def _one_sample(surface, rep, horizon, seed_seq):
    rng = np.random.default_rng(seed_seq)
    try:
        _, letters, times, retries = tracked_orbit(surface, horizon, rng)
    except TangencyError:
        return None, 0, MAX_RETRIES + 1
    lam, _ = qr_exponents(rep, letters, times, horizon)
    return np.sort(lam)[::-1], len(letters), retries


def spectrum(
    surface: SurfaceModel,
    rep: Representation,
    horizon: float,
    n_samples: int,
    seed: int,
    n_jobs: int | None = None,
) -> SpectrumEstimate:
    """Mean Lyapunov spectrum over ``n_samples`` independent geodesics of length ``horizon``."""
    rep = check_representation(rep)
    horizon = check_horizon(horizon, minimum=1.0)
    n_samples = check_positive_int(n_samples, "n_samples")
    seed = check_seed(seed)
    children = np.random.SeedSequence(seed).spawn(n_samples)
    jobs = effective_n_jobs(n_jobs)
    if jobs == 1:
        results = [_one_sample(surface, rep, horizon, s) for s in children]
    else:
        results = Parallel(n_jobs=jobs)(delayed(_one_sample)(surface, rep, horizon, s) for s in children)
    good = [r[0] for r in results if r[0] is not None]
    aborted = n_samples - len(good)
    if aborted > 0.01 * n_samples:
        raise SamplingError(f"{aborted} of {n_samples} samples aborted on vertex tangencies")
    per = np.array(good)
    return SpectrumEstimate(
        lambdas=per.mean(axis=0),
        stderr=_stderr(per),
        samples=len(good),
        horizon=horizon,
        per_sample=per,
        seed=seed,
        crossings=int(sum(r[1] for r in results)),
        retries=int(sum(r[2] for r in results)),
    )


def gap_report(est: SpectrumEstimate) -> list[tuple[int, float, float]]:
    """Consecutive gaps ``(i, lambda_i - lambda_{i+1}, stderr)`` with 1-based ``i``."""
    return [(i + 1, float(g), float(s)) for i, (g, s) in enumerate(zip(est.gaps, est.gap_stderr))]


def convergence_curve(
    surface: SurfaceModel,
    rep: Representation,
    horizon: float,
    seed: int,
    n_points: int = 40,
    t_min: float = 10.0,
) -> tuple[np.ndarray, np.ndarray]:
    """Running spectrum of one sample at geometrically spaced times.

    Returns ``(t, lambdas)`` with ``lambdas[j]`` sorted descending; the last
    row is the one-sample spectrum at ``horizon``.
    """
    rep = check_representation(rep)
    horizon = check_horizon(horizon, minimum=1.0)
    seed = check_seed(seed)
    rng = np.random.default_rng(np.random.SeedSequence(seed).spawn(1)[0])
    _, letters, times, _ = tracked_orbit(surface, horizon, rng)
    t = np.geomspace(min(t_min, horizon), horizon, n_points)
    t[-1] = horizon
    _, curve = qr_exponents(rep, letters, times, horizon, checkpoints=t)
    return t, curve


class LyapunovSpectrum(BaseEstimator):
    """Estimator wrapper around :func:`spectrum`.

    ``fit(rep)`` sets ``lambdas_``, ``stderr_``, ``gaps_``, ``gap_stderr_`` and
    ``estimate_``.
    """

    def __init__(self, horizon=1e4, n_samples=32, random_state=0, n_jobs=None, surface=None):
        self.horizon = horizon
        self.n_samples = n_samples
        self.random_state = random_state
        self.n_jobs = n_jobs
        self.surface = surface

    def fit(self, rep, y=None):
        surface = self.surface if self.surface is not None else build_bolza_surface()
        est = spectrum(surface, rep, self.horizon, self.n_samples, self.random_state, self.n_jobs)
        self.estimate_ = est
        self.lambdas_ = est.lambdas
        self.stderr_ = est.stderr
        self.gaps_ = est.gaps
        self.gap_stderr_ = est.gap_stderr
        return self


__all__ = [
    "QrAccumulator",
    "SpectrumEstimate",
    "spectrum",
    "gap_report",
    "convergence_curve",
    "qr_exponents",
    "tracked_orbit",
    "transport_matrices",
    "LyapunovSpectrum",
]
