"""Experiment configuration, representation recipes and the gap report."""

from __future__ import annotations

import json
import re
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .anosov import transverse_exponent
from .exceptions import ConfigError, LyapgapError
from .hyperbolic import SurfaceModel, build_bolza_surface, fenchel_nielsen_twist, load_surface
from .lyapunov import convergence_curve, spectrum
from .representation import (
    Representation,
    contragredient,
    direct_sum,
    load_representation,
    symmetric_power,
    trivial_representation,
    wedge_power,
)
from .thermo import enumerate_closed_geodesics, orbit_weights, renormalized_intersection

ESTIMATORS = ("spectrum", "transverse", "thermo")

# -- recipes ---------------------------------------------------------------------------
#
#   fuchsian | twist(t) | sym(d, R) | wedge(k, R) | dual(R) | sum(R, R, ...)
#   trivial(d) | file(path)
#
# ``sym(d)`` alone means ``sym(d, fuchsian)``; ``d`` is the target dimension.

_NAME = re.compile(r"\s*([A-Za-z_]+)\s*")


def _split_args(text: str) -> list[str]:
    args, depth, cur = [], 0, []
    for ch in text:
        if ch == "," and depth == 0:
            args.append("".join(cur).strip())
            cur = []
            continue
        depth += ch == "("
        depth -= ch == ")"
        if depth < 0:
            raise ConfigError(f"unbalanced parentheses in recipe argument {text!r}")
        cur.append(ch)
    if depth:
        raise ConfigError(f"unbalanced parentheses in recipe argument {text!r}")
    if "".join(cur).strip():
        args.append("".join(cur).strip())
    return args


def build_representation(recipe: str, surface: SurfaceModel | None = None) -> Representation:
    """Resolve a recipe string (see module comment) to a Representation."""
    surface = surface if surface is not None else build_bolza_surface()
    text = recipe.strip()
    m = _NAME.match(text)
    if m is None:
        raise ConfigError(f"cannot parse recipe {recipe!r}")
    name = m.group(1).lower()
    rest = text[m.end():]
    if rest:
        if not (rest.startswith("(") and rest.endswith(")")):
            raise ConfigError(f"cannot parse recipe {recipe!r}")
        args = _split_args(rest[1:-1])
    else:
        args = []

    def sub(i, default="fuchsian"):
        return build_representation(args[i] if len(args) > i else default, surface)

    try:
        if name == "fuchsian" and not args:
            return surface.fuchsian()
        if name == "twist" and len(args) == 1:
            return fenchel_nielsen_twist(surface, float(args[0]))
        if name == "sym" and len(args) in (1, 2):
            return symmetric_power(sub(1), int(args[0]))
        if name == "wedge" and len(args) in (1, 2):
            return wedge_power(sub(1), int(args[0]))
        if name == "dual" and len(args) <= 1:
            return contragredient(sub(0))
        if name == "sum" and args:
            return direct_sum(*(build_representation(a, surface) for a in args))
        if name == "trivial" and len(args) == 1:
            return trivial_representation(int(args[0]))
        if name == "file" and len(args) == 1:
            return load_representation(args[0])
    except ValueError as exc:
        raise ConfigError(f"bad argument in recipe {recipe!r}: {exc}") from exc
    raise ConfigError(f"unknown recipe {recipe!r}")


def resolve_representation(spec: str, surface: SurfaceModel | None = None) -> Representation:
    """A path to a representation file, or a recipe string."""
    if Path(spec).is_file():
        return load_representation(spec)
    return build_representation(spec, surface)


def resolve_surface(spec: str | None) -> SurfaceModel:
    if spec in (None, "", "bolza"):
        return build_bolza_surface()
    return load_surface(spec)


# -- configuration ------------------------------------------------------------------------


@dataclass
class ExperimentConfig:
    """Everything ``run`` needs.  Stored as JSON; every field may be
    overridden from the command line."""

    representation: str
    seed: int
    surface: str = "bolza"
    estimators: list[str] = field(default_factory=lambda: list(ESTIMATORS))
    ranks: list[int] | None = None
    spectrum_horizon: float = 1e4
    spectrum_samples: int = 32
    transverse_horizon: float = 1e4
    transverse_samples: int = 16
    thermo_max_length: float = 12.0
    n_boot: int = 200
    tolerance: float = 0.05
    equality_tolerance: float = 0.04
    report: str | None = "report.json"
    curves: str | None = None
    n_jobs: int | None = None

    def __post_init__(self):
        if self.seed is None:
            raise ConfigError("a seed is required")
        if isinstance(self.seed, bool) or int(self.seed) != self.seed or self.seed < 0:
            raise ConfigError(f"seed must be a non-negative integer, got {self.seed!r}")
        unknown = set(self.estimators) - set(ESTIMATORS)
        if unknown:
            raise ConfigError(f"unknown estimators {sorted(unknown)}")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = set(cls.__dataclass_fields__)
        extra = set(data) - known
        if extra:
            raise ConfigError(f"unknown config keys {sorted(extra)}")
        if "representation" not in data or "seed" not in data:
            raise ConfigError("config needs 'representation' and 'seed'")
        return cls(**data)

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return asdict(self)


# -- report ---------------------------------------------------------------------------------


@dataclass
class GapReport:
    """Per-rank gap estimates, their pairwise agreement, checks and verdicts.

    Verdicts and checks are functions of the stored numbers only; see
    :meth:`derive`.
    """

    config: dict
    d: int
    provenance: str
    estimates: dict = field(default_factory=dict)
    spectrum: dict | None = None
    errors: dict = field(default_factory=dict)
    agreement: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)
    verdicts: dict = field(default_factory=dict)
    verdict: str = ""
    created: str = ""

    def derive(self, tolerance: float, equality_tolerance: float) -> None:
        self.agreement, self.verdicts = {}, {}
        checks: dict[str, bool] = {}
        for rank, ests in sorted(self.estimates.items(), key=lambda kv: int(kv[0])):
            names = sorted(ests)
            mat = {}
            for a in names:
                for b in names:
                    va, vb = ests[a]["value"], ests[b]["value"]
                    mat.setdefault(a, {})[b] = abs(va - vb) / max(abs(va), abs(vb), 1e-300)
            self.agreement[rank] = mat
            values = [ests[n]["value"] for n in names]
            errs = [ests[n]["stderr"] for n in names]
            strict = all(v - 1 > max(3 * s, 1e-3) for v, s in zip(values, errs))
            equal = all(abs(v - 1) <= equality_tolerance for v in values)
            lower = all(v >= 1 - tolerance for v in values)
            if strict:
                self.verdicts[rank] = "gap >= 1, strict"
            elif equal:
                self.verdicts[rank] = "equality-consistent"
            elif lower:
                self.verdicts[rank] = ">= 1 - tol"
            else:
                self.verdicts[rank] = "violated"
            checks[f"rank{rank}:gap_lower_bound"] = lower
            checks[f"rank{rank}:agreement"] = all(
                mat[a][b] <= tolerance for a in names for b in names
            )
            if "J" in ests:
                checks[f"rank{rank}:J_lower_bound"] = ests["J"]["value"] >= 1 - 2 * ests["J"]["stderr"]
            if "transverse" in ests:
                checks[f"rank{rank}:transverse_bound"] = ests["transverse"]["exponent"] <= -(1 - tolerance)
        if self.spectrum is not None:
            lam = self.spectrum["lambdas"]
            checks["determinant"] = abs(sum(lam)) <= 1e-6
            checks["ordering"] = all(a >= b for a, b in zip(lam, lam[1:]))
        for name in self.errors:
            checks[f"error:{name}"] = False
        self.checks = checks
        kinds = set(self.verdicts.values())
        if not kinds:
            self.verdict = "no estimates"
        elif kinds == {"gap >= 1, strict"}:
            self.verdict = "gap >= 1, strict"
        elif kinds <= {"equality-consistent"}:
            self.verdict = "equality-consistent"
        elif "violated" in kinds:
            self.verdict = "violated"
        else:
            self.verdict = ">= 1 - tol"

    @property
    def ok(self) -> bool:
        return bool(self.checks) and all(self.checks.values())

    def to_dict(self) -> dict:
        return _jsonable(asdict(self))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def _jsonable(obj: Any):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    return obj


def write_curve_csv(path: str | Path, t: np.ndarray, curve: np.ndarray) -> None:
    d = curve.shape[1]
    lines = ["t," + ",".join(f"lambda_{i + 1}" for i in range(d))]
    for ti, row in zip(t, curve):
        lines.append(",".join(repr(float(x)) for x in (ti, *row)))
    Path(path).write_text("\n".join(lines) + "\n")


def run(config: ExperimentConfig) -> GapReport:
    """Run the selected estimators and write the report (and curves).

    Estimator failures are recorded in ``errors`` with their module code;
    the remaining estimators still run and the report is still written.
    """
    surface = resolve_surface(config.surface)
    rep = resolve_representation(config.representation, surface)
    d = rep.d
    ranks = list(range(1, d)) if config.ranks is None else [int(r) for r in config.ranks]
    if not ranks or min(ranks) < 1 or max(ranks) > d - 1:
        raise ConfigError(f"ranks must lie in 1..{d - 1}")
    report = GapReport(config=config.to_dict(), d=d, provenance=rep.provenance)
    estimates: dict[int, dict] = {r: {} for r in ranks}

    def record_error(name, exc):
        code = getattr(exc, "code", "lyapgap.error")
        report.errors[name] = {"code": code, "message": str(exc)}

    if "spectrum" in config.estimators:
        try:
            est = spectrum(surface, rep, config.spectrum_horizon, config.spectrum_samples,
                           config.seed, config.n_jobs)
            report.spectrum = est.to_dict()
            for r in ranks:
                estimates[r]["qr"] = {"value": float(est.gaps[r - 1]), "stderr": float(est.gap_stderr[r - 1])}
            if config.curves:
                t, curve = convergence_curve(surface, rep, config.spectrum_horizon, config.seed)
                write_curve_csv(config.curves, t, curve)
        except LyapgapError as exc:
            record_error("spectrum", exc)

    if "transverse" in config.estimators:
        for r in ranks:
            try:
                est = transverse_exponent(surface, wedge_power(rep, r), config.transverse_horizon,
                                          config.transverse_samples, config.seed, n_jobs=config.n_jobs)
                estimates[r]["transverse"] = {
                    "value": -est.value, "stderr": est.stderr, "exponent": est.value, "method": est.method,
                }
            except LyapgapError as exc:
                record_error(f"transverse:rank{r}", exc)

    if "thermo" in config.estimators:
        try:
            table = enumerate_closed_geodesics(surface, config.thermo_max_length)
            weighted = orbit_weights(table, rep, ranks)
            for r in ranks:
                j = renormalized_intersection(weighted, None, r, config.n_boot, config.seed)
                estimates[r]["J"] = {"value": j.J, "stderr": j.stderr, "entropy": j.entropy,
                                     "orbits": j.n_orbits}
        except LyapgapError as exc:
            record_error("thermo", exc)

    report.estimates = {r: e for r, e in estimates.items() if e}
    report.derive(config.tolerance, config.equality_tolerance)
    report.created = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())
    if config.report:
        Path(config.report).write_text(report.to_json())
    return report


__all__ = [
    "ExperimentConfig",
    "GapReport",
    "build_representation",
    "resolve_representation",
    "resolve_surface",
    "run",
    "write_curve_csv",
]
