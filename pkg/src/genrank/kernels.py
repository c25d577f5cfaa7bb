"""Kernels on experimental results.

Three kernels act on rankings with ties (Borda, Jaccard, Mallows) and one on
raw score vectors (RBF). All take values in ``[k_inf, 1]`` and equal 1 on
identical inputs.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist, pdist

from .exceptions import InputError
from .utils.validation import check_level, check_rankings, check_vectors

FAMILIES = ("borda", "jaccard", "mallows", "rbf")
RANKING_FAMILIES = ("borda", "jaccard", "mallows")

PSD_TOL = 1e-8


@dataclass(frozen=True)
class KernelBounds:
    k_inf: float
    k_sup: float


@dataclass(frozen=True)
class KernelSpec:
    """A kernel family with its parameters, bound to ``n_a`` alternatives.

    Use the ``borda``/``jaccard``/``mallows``/``rbf`` constructors; they fill
    in the recommended parameters when ``nu`` is omitted.
    """

    family: str
    n_a: int
    nu: float | None = None
    target: int | None = None
    k: int | None = None
    gamma: float | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InputError(f"unknown kernel family {self.family!r}; choose from {FAMILIES}")
        if not isinstance(self.n_a, (int, np.integer)) or self.n_a < 1:
            raise InputError(f"n_a must be a positive integer, got {self.n_a!r}")
        expected = {
            "borda": {"nu", "target"},
            "jaccard": {"k"},
            "mallows": {"nu"},
            "rbf": {"gamma"},
        }[self.family]
        given = {p for p in ("nu", "target", "k", "gamma") if getattr(self, p) is not None}
        if given != expected:
            raise InputError(
                f"{self.family} kernel takes parameters {sorted(expected)}, got {sorted(given)}"
            )
        if self.nu is not None and not (self.nu > 0 and math.isfinite(self.nu)):
            raise InputError(f"nu must be positive, got {self.nu}")
        if self.gamma is not None and not (self.gamma > 0 and math.isfinite(self.gamma)):
            raise InputError(f"gamma must be positive, got {self.gamma}")
        if self.k is not None and not (1 <= self.k <= self.n_a):
            raise InputError(f"k must lie in [1, {self.n_a}], got {self.k}")
        if self.target is not None and not (0 <= self.target < self.n_a):
            raise InputError(f"target must lie in [0, {self.n_a}), got {self.target}")

    @classmethod
    def borda(cls, n_a, target=0, nu=None):
        if nu is None:
            nu = recommended_param("borda", n_a)
        return cls("borda", int(n_a), nu=float(nu), target=int(target))

    @classmethod
    def jaccard(cls, n_a, k=1):
        return cls("jaccard", int(n_a), k=int(k))

    @classmethod
    def mallows(cls, n_a, nu=None):
        if nu is None:
            nu = recommended_param("mallows", n_a)
        return cls("mallows", int(n_a), nu=float(nu))

    @classmethod
    def rbf(cls, n_a, gamma):
        return cls("rbf", int(n_a), gamma=float(gamma))

    @property
    def on_rankings(self) -> bool:
        return self.family in RANKING_FAMILIES

    def describe(self) -> str:
        if self.family == "borda":
            return f"borda(target={self.target}, nu={self.nu:.6g})"
        if self.family == "jaccard":
            return f"jaccard(k={self.k})"
        if self.family == "mallows":
            return f"mallows(nu={self.nu:.6g})"
        return f"rbf(gamma={self.gamma:.6g})"


def as_results(spec: KernelSpec, sample, name="sample") -> np.ndarray:
    """Coerce ``sample`` to the result array type the kernel family expects."""
    if spec.on_rankings:
        return check_rankings(sample, n_alternatives=spec.n_a, name=name)
    return check_vectors(sample, n_alternatives=spec.n_a, name=name)


def _borda_counts(R, target):
    return (R >= R[:, [target]]).sum(axis=1).astype(float)


def _top_mask(R, k):
    return (R <= k - 1).astype(float)


def _sign_features(R):
    # sign(r(a_i) - r(a_j)) for all ordered pairs, flattened per ranking
    return np.sign(R[:, :, None] - R[:, None, :]).reshape(len(R), -1).astype(float)


def cross_gram(spec: KernelSpec, X, Y) -> np.ndarray:
    """Kernel matrix between two validated result arrays."""
    if spec.family == "borda":
        bx, by = _borda_counts(X, spec.target), _borda_counts(Y, spec.target)
        return np.exp(-spec.nu * np.abs(bx[:, None] - by[None, :]))
    if spec.family == "jaccard":
        mx, my = _top_mask(X, spec.k), _top_mask(Y, spec.k)
        inter = mx @ my.T
        union = mx.sum(1)[:, None] + my.sum(1)[None, :] - inter
        return inter / union
    if spec.family == "mallows":
        # ordered-pair L1 distance of sign matrices is 4x the discordant-pair count
        nd = cdist(_sign_features(X), _sign_features(Y), "cityblock") / 4.0
        return np.exp(-spec.nu * nd)
    return np.exp(-spec.gamma * cdist(X, Y, "sqeuclidean"))


def kernel_eval(spec: KernelSpec, x1, x2) -> float:
    X = as_results(spec, [x1], "x1")
    Y = as_results(spec, [x2], "x2")
    return float(cross_gram(spec, X, Y)[0, 0])


def gram_matrix(spec: KernelSpec, sample) -> np.ndarray:
    """Symmetric m x m kernel matrix of a sample, unit diagonal."""
    X = as_results(spec, sample)
    K = cross_gram(spec, X, X)
    K = 0.5 * (K + K.T)
    np.fill_diagonal(K, 1.0)
    return K


def recommended_param(family: str, n_a: int):
    """Recommended sensitivity for a family.

    Borda ``1/n_a``; Mallows ``1/C(n_a, 2)``. Jaccard has no sensitivity
    parameter and RBF uses :func:`median_gamma`, so both return ``None``.
    """
    if family == "borda":
        if n_a < 1:
            raise InputError(f"n_a must be >= 1, got {n_a}")
        return 1.0 / n_a
    if family == "mallows":
        if n_a < 2:
            raise InputError("the Mallows kernel needs at least 2 alternatives")
        return 1.0 / math.comb(n_a, 2)
    if family in ("jaccard", "rbf"):
        return None
    raise InputError(f"unknown kernel family {family!r}")


def median_gamma(sample) -> float:
    """RBF bandwidth from the median heuristic over distinct pairs."""
    X = check_vectors(sample)
    X = np.unique(X, axis=0)
    if len(X) < 2:
        warnings.warn("all vectors identical; falling back to gamma = 1", RuntimeWarning, stacklevel=2)
        return 1.0
    med = float(np.median(pdist(X, "sqeuclidean")))
    return 1.0 / (2.0 * med)


def kernel_bounds(spec: KernelSpec) -> KernelBounds:
    if spec.family == "borda":
        return KernelBounds(math.exp(-spec.nu * spec.n_a), 1.0)
    if spec.family == "mallows":
        return KernelBounds(math.exp(-spec.nu * math.comb(spec.n_a, 2)), 1.0)
    return KernelBounds(0.0, 1.0)


def _f_kernel(family, x):
    if family == "jaccard":
        return 1.0 - x
    return math.exp(-x)


def epsilon_star(spec: KernelSpec, delta_star: float) -> float:
    """MMD threshold corresponding to the interpretable similarity level ``delta_star``.

    For the RBF family ``delta_star`` is read as gamma times the tolerated
    squared distance, so the same ``exp(-x)`` map applies.
    """
    delta_star = check_level(delta_star, name="delta_star", closed=(True, True))
    k_sup = kernel_bounds(spec).k_sup
    radicand = 2.0 * (k_sup - _f_kernel(spec.family, delta_star))
    return math.sqrt(max(radicand, 0.0))


def is_psd(K, tol=PSD_TOL) -> bool:
    w = np.linalg.eigvalsh(K)
    return bool(w.min() >= -tol * max(w.max(), 1.0))


__all__ = [
    "KernelSpec",
    "KernelBounds",
    "as_results",
    "cross_gram",
    "kernel_eval",
    "gram_matrix",
    "recommended_param",
    "median_gamma",
    "kernel_bounds",
    "epsilon_star",
]
