"""Surface-group representations into SL(d, R) and the functors applied to them."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from math import comb
from pathlib import Path
from typing import Callable, Mapping

import numpy as np

from .exceptions import ConvergenceError, RepFileError, RepresentationError
from .words import GENERATORS, LABELS, RELATOR, Word, inverse_letter

DET_TOL = 1e-9
RELATOR_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class Representation:
    """Images of ``a1, b1, a2, b2`` in SL(d, R).

    ``inverses`` may be supplied when the caller can compute the inverse images
    more accurately than ``numpy.linalg.inv`` (functorial constructions do).
    Construction validates the determinant and relator conditions.
    """

    d: int
    images: Mapping[str, np.ndarray]
    provenance: str = ""
    comment: str = ""
    inverses: Mapping[str, np.ndarray] | None = None
    relator_sign: int = field(default=1, init=False)

    def __post_init__(self):
        images = {}
        for label in GENERATORS:
            if label not in self.images:
                raise RepresentationError(f"missing generator image {label!r}")
            m = np.array(self.images[label], dtype=float)
            if m.shape != (self.d, self.d):
                raise RepresentationError(
                    f"image of {label} has shape {m.shape}, expected {(self.d, self.d)}"
                )
            if not np.all(np.isfinite(m)):
                raise RepresentationError(f"image of {label} is not finite")
            det = np.linalg.det(m)
            if abs(det - 1.0) > DET_TOL:
                raise RepresentationError(f"det of image of {label} is {det!r}, not 1")
            m.setflags(write=False)
            images[label] = m
        if self.inverses is None:
            inverses = {label: np.linalg.inv(images[label]) for label in GENERATORS}
        else:
            inverses = {label: np.array(self.inverses[label], dtype=float) for label in GENERATORS}
        for m in inverses.values():
            m.setflags(write=False)
        object.__setattr__(self, "images", images)
        object.__setattr__(self, "inverses", inverses)
        letters = tuple(images[g] for g in GENERATORS) + tuple(inverses[g] for g in GENERATORS)
        object.__setattr__(self, "_letters", letters)

        sign, err = relator_deviation(self)
        if err > RELATOR_TOL or (sign == -1 and self.d % 2):
            raise RepresentationError(f"relator image is not +-I (relative deviation {err:.3e})")
        object.__setattr__(self, "relator_sign", sign)

    def letter_matrix(self, code: int) -> np.ndarray:
        return self._letters[code]

    @property
    def letter_matrices(self) -> tuple[np.ndarray, ...]:
        """Images of the eight letter codes, generators first."""
        return self._letters

    def __repr__(self) -> str:
        return f"Representation(d={self.d}, provenance={self.provenance!r})"


def evaluate(rep: Representation, w: Word) -> np.ndarray:
    """Image of ``w``: the product of letter images, left to right."""
    out = np.eye(rep.d)
    for c in w:
        out = out @ rep._letters[c]
    return out


def relator_deviation(rep: Representation) -> tuple[int, float]:
    """Sign s and relative error of ``rho(first half) = s * rho(second half)^-1``.

    Comparing the two halves instead of the full product against I keeps the
    check at relative precision: the partial products of high symmetric
    powers are large and the full product loses digits to cancellation.
    """
    half = len(RELATOR) // 2
    left = evaluate(rep, Word(RELATOR.letters[:half]))
    right = evaluate(rep, Word(RELATOR.letters[half:]).inverse())
    scale = max(1.0, float(np.max(np.abs(left))))
    errs = {s: float(np.max(np.abs(left - s * right))) / scale for s in (1, -1)}
    sign = min(errs, key=errs.get)
    return sign, errs[sign]


def trivial_representation(d: int) -> Representation:
    eye = np.eye(d)
    return Representation(d, {g: eye for g in GENERATORS}, provenance="trivial")


def _apply_functor(
    rep: Representation, d: int, functor: Callable[[np.ndarray], np.ndarray], tag: str
) -> Representation:
    images = {g: functor(rep.images[g]) for g in GENERATORS}
    inverses = {g: functor(rep.inverses[g]) for g in GENERATORS}
    return Representation(d, images, provenance=tag, inverses=inverses)


def symmetric_power_matrix(g: np.ndarray, n: int) -> np.ndarray:
    """Action of a 2x2 matrix on degree-``n`` binary forms.

    Basis ``sqrt(C(n, i)) x^(n-i) y^i``; this orthonormal scaling makes the
    functor send O(2) to O(n + 1), so singular values are ``s1^(n-i) s2^i``.
    """
    g = np.asarray(g, dtype=float)
    a, b = g[0]
    c, d = g[1]
    out = np.zeros((n + 1, n + 1))
    for i in range(n + 1):
        # image of x^(n-i) y^i; coefficients indexed by the power of y
        col = np.polynomial.polynomial.polypow([a, c], n - i)
        col = np.polynomial.polynomial.polymul(col, np.polynomial.polynomial.polypow([b, d], i))
        out[: len(col), i] = col[: n + 1]
    scale = np.sqrt([comb(n, i) for i in range(n + 1)])
    return out * scale[None, :] / scale[:, None]


def symmetric_power(rep2: Representation, d: int) -> Representation:
    """Compose a d=2 representation with the irreducible SL(2) -> SL(d)."""
    if rep2.d != 2:
        raise RepresentationError("symmetric_power expects a d=2 representation")
    if d < 2:
        raise RepresentationError("target dimension must be >= 2")
    if d == 2:
        return rep2
    return _apply_functor(
        rep2, d, lambda g: symmetric_power_matrix(g, d - 1), f"sym{d - 1}({rep2.provenance})"
    )


def compound_matrix(g: np.ndarray, k: int) -> np.ndarray:
    """k-th exterior power in the lexicographic basis of k-subsets (k x k minors)."""
    g = np.asarray(g, dtype=float)
    n = g.shape[0]
    subsets = list(itertools.combinations(range(n), k))
    out = np.empty((len(subsets), len(subsets)))
    for r, rows in enumerate(subsets):
        sub = g[list(rows)]
        for s, cols in enumerate(subsets):
            out[r, s] = np.linalg.det(sub[:, list(cols)])
    return out


def wedge_power(rep: Representation, k: int) -> Representation:
    if not 1 <= k <= rep.d - 1:
        raise RepresentationError(f"wedge rank must be in 1..{rep.d - 1}, got {k}")
    if k == 1:
        return rep
    return _apply_functor(rep, comb(rep.d, k), lambda g: compound_matrix(g, k), f"wedge{k}({rep.provenance})")


def contragredient(rep: Representation) -> Representation:
    images = {g: rep.inverses[g].T.copy() for g in GENERATORS}
    inverses = {g: rep.images[g].T.copy() for g in GENERATORS}
    return Representation(rep.d, images, provenance=f"dual({rep.provenance})", inverses=inverses)


def conjugate(rep: Representation, h: np.ndarray) -> Representation:
    h = np.asarray(h, dtype=float)
    hinv = np.linalg.inv(h)
    images = {g: h @ rep.images[g] @ hinv for g in GENERATORS}
    inverses = {g: h @ rep.inverses[g] @ hinv for g in GENERATORS}
    return Representation(rep.d, images, provenance=f"conj({rep.provenance})", inverses=inverses)


def direct_sum(*reps: Representation) -> Representation:
    from scipy.linalg import block_diag

    d = sum(r.d for r in reps)
    images = {g: block_diag(*(r.images[g] for r in reps)) for g in GENERATORS}
    inverses = {g: block_diag(*(r.inverses[g] for r in reps)) for g in GENERATORS}
    tag = "+".join(r.provenance for r in reps)
    return Representation(d, images, provenance=f"sum({tag})", inverses=inverses)


def eigenvalue_moduli(g: np.ndarray) -> np.ndarray:
    """Moduli of the eigenvalues of ``g``, descending.

    Accurate relative to ``||g||``; for long products with a large spectral
    spread use :func:`log_spectral_radius` on exterior powers instead.
    """
    g = np.asarray(g, dtype=float)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise ValueError("expected a square matrix")
    try:
        ev = np.linalg.eigvals(g)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"eigenvalue iteration failed: {exc}") from exc
    mod = np.sort(np.abs(ev))[::-1]
    if not np.all(np.isfinite(mod)):
        raise ConvergenceError("non-finite eigenvalues")
    det = abs(np.linalg.det(g))
    if det == 0.0:
        raise ConvergenceError("matrix is singular")
    sv = np.linalg.svd(g, compute_uv=False)
    # small eigenvalues carry absolute error ~ eps * ||g||, so the product
    # check can only be as tight as the condition number allows
    cond = sv[0] / sv[-1] if sv[-1] > 0 else np.inf
    tol = 1e-6 + 100 * g.shape[0] * np.finfo(float).eps * cond
    if abs(np.prod(mod) - det) > tol * det:
        raise ConvergenceError("eigenvalue moduli do not multiply to |det g|")
    return mod


def log_spectral_radius(g: np.ndarray) -> float:
    ev = np.linalg.eigvals(np.asarray(g, dtype=float))
    r = np.max(np.abs(ev))
    if not np.isfinite(r) or r <= 0:
        raise ConvergenceError("spectral radius is not finite and positive")
    return float(np.log(r))


# -- RepFile -----------------------------------------------------------------


def rep_to_dict(rep: Representation) -> dict:
    return {
        "d": rep.d,
        "generators": {g: [float(x) for x in rep.images[g].ravel()] for g in GENERATORS},
        "provenance": rep.provenance,
        "comment": rep.comment,
    }


def rep_from_dict(data: Mapping) -> Representation:
    try:
        d = int(data["d"])
        gens = data["generators"]
        images = {}
        for g in GENERATORS:
            flat = np.asarray(gens[g], dtype=float)
            if flat.size != d * d:
                raise RepFileError(f"generator {g} has {flat.size} entries, expected {d * d}")
            images[g] = flat.reshape(d, d)
    except RepFileError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise RepFileError(f"malformed representation file: {exc!r}") from exc
    try:
        rep = Representation(d, images, provenance=str(data.get("provenance", "file")),
                             comment=str(data.get("comment", "")))
    except RepresentationError as exc:
        raise RepFileError(str(exc)) from exc
    if rep.relator_sign == -1 and "relator=-I" not in rep.provenance:
        rep = Representation(d, images, provenance=rep.provenance + " [relator=-I]", comment=rep.comment)
    return rep


def save_representation(rep: Representation, path: str | Path) -> None:
    Path(path).write_text(json.dumps(rep_to_dict(rep), indent=2) + "\n")


def load_representation(path: str | Path) -> Representation:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise RepFileError(f"cannot read representation file {path}: {exc}") from exc
    return rep_from_dict(data)


__all__ = [
    "Representation",
    "evaluate",
    "relator_deviation",
    "trivial_representation",
    "symmetric_power",
    "symmetric_power_matrix",
    "wedge_power",
    "compound_matrix",
    "contragredient",
    "conjugate",
    "direct_sum",
    "eigenvalue_moduli",
    "log_spectral_radius",
    "rep_to_dict",
    "rep_from_dict",
    "save_representation",
    "load_representation",
    "LABELS",
    "inverse_letter",
]
