"""Biased MMD between equal-size samples and its resampling distribution.

Samples are reduced to their distinct results once; every resample is then a
signed weight vector ``w`` over that support, and ``MMD^2 = w' K w`` with the
cached Gram matrix ``K``. This keeps each repetition O(l^2) regardless of the
original sample size.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from ._rng import spawn_rng
from .exceptions import InputError, NumericError, SizeError
from .kernels import KernelSpec, as_results, cross_gram, gram_matrix
from .powerlaw import MmdQuantileCurve
from .ranking import AlternativeSet, Ranking
from .utils.validation import check_level, check_positive_int, check_rankings, check_vectors

MODES = ("subsample", "bootstrap")
CLAMP_TOL = 1e-12
# slack when comparing an MMD value against a threshold
EPS_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class EmpiricalSample:
    """Observed results of one configuration.

    ``results`` is an ``(N, n_a)`` array: integer tier indices when ``kind`` is
    ``"ranking"``, raw scores when ``kind`` is ``"vector"``.
    """

    results: np.ndarray
    kind: str = "ranking"
    alternatives: AlternativeSet | None = None
    label: str | None = None
    _gram_cache: dict = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self):
        if self.kind not in ("ranking", "vector"):
            raise InputError(f"kind must be 'ranking' or 'vector', got {self.kind!r}")
        n_a = None if self.alternatives is None else self.alternatives.n_a
        check = check_rankings if self.kind == "ranking" else check_vectors
        arr = check(self.results, n_alternatives=n_a, name="results")
        arr.setflags(write=False)
        object.__setattr__(self, "results", arr)

    @classmethod
    def from_rankings(cls, rankings, alternatives=None, label=None):
        return cls(check_rankings(rankings), "ranking", alternatives, label)

    @classmethod
    def from_vectors(cls, vectors, alternatives=None, label=None):
        return cls(check_vectors(vectors), "vector", alternatives, label)

    @property
    def N(self) -> int:
        return self.results.shape[0]

    @property
    def n_a(self) -> int:
        return self.results.shape[1]

    def __len__(self):
        return self.N

    def rankings(self) -> list[Ranking]:
        if self.kind != "ranking":
            raise InputError("this sample holds score vectors, not rankings")
        return [Ranking(tuple(r)) for r in self.results.tolist()]

    @cached_property
    def _support(self):
        support, inverse, counts = np.unique(
            self.results, axis=0, return_inverse=True, return_counts=True
        )
        return support, inverse.ravel(), counts

    @property
    def support(self) -> np.ndarray:
        return self._support[0]

    @property
    def inverse(self) -> np.ndarray:
        return self._support[1]

    def gram(self, spec: KernelSpec) -> np.ndarray:
        """Gram matrix over the distinct results, cached per kernel."""
        self._check_spec(spec)
        K = self._gram_cache.get(spec)
        if K is None:
            K = gram_matrix(spec, self.support)
            K.setflags(write=False)
            self._gram_cache[spec] = K
        return K

    def _check_spec(self, spec):
        if (self.kind == "ranking") != spec.on_rankings:
            raise InputError(f"{spec.family} kernel does not apply to {self.kind} results")
        if spec.n_a != self.n_a:
            raise InputError(f"kernel bound to {spec.n_a} alternatives, sample has {self.n_a}")


def as_sample(sample, spec: KernelSpec | None = None) -> EmpiricalSample:
    if isinstance(sample, EmpiricalSample):
        return sample
    if spec is not None and not spec.on_rankings:
        return EmpiricalSample.from_vectors(sample)
    return EmpiricalSample.from_rankings(sample)


@dataclass(frozen=True, eq=False)
class MmdSample:
    values: np.ndarray
    n: int
    n_rep: int
    spec: KernelSpec
    mode: str
    seed: int | None

    def quantile(self, alpha: float) -> float:
        return empirical_quantile(self.values, alpha)


def _sqrt_mmd2(mmd2):
    mmd2 = np.asarray(mmd2, dtype=float)
    if np.any(mmd2 < -CLAMP_TOL):
        raise NumericError(f"negative squared MMD {mmd2.min():.3e} beyond rounding tolerance")
    return np.sqrt(np.clip(mmd2, 0.0, None))


def mmd_from_weights(W: np.ndarray, K: np.ndarray) -> np.ndarray:
    """MMD for each row of signed weights ``W`` against Gram matrix ``K``."""
    return _sqrt_mmd2(np.einsum("ij,jk,ik->i", W, K, W))


def mmd_biased(spec: KernelSpec, x, y) -> float:
    """Biased (V-statistic) MMD between two equal-size samples."""
    X = as_results(spec, x, "x")
    Y = as_results(spec, y, "y")
    if len(X) != len(Y):
        raise SizeError(f"samples must have equal size, got {len(X)} and {len(Y)}")
    n = len(X)
    # signed counts over the pooled distinct results: swapping x and y only
    # flips the sign of w, so the value is exactly symmetric
    support, inverse = np.unique(np.vstack([X, Y]), axis=0, return_inverse=True)
    inverse = inverse.ravel()
    m = len(support)
    w = (np.bincount(inverse[:n], minlength=m) - np.bincount(inverse[n:], minlength=m)) / n
    K = cross_gram(spec, support, support)
    K = 0.5 * (K + K.T)
    return float(_sqrt_mmd2(w @ K @ w))


def _check_mode(mode):
    if mode not in MODES:
        raise InputError(f"mode must be one of {MODES}, got {mode!r}")


def _resample_weights(rng, inverse, n_support, n, n_rep, mode):
    N = len(inverse)
    if mode == "subsample":
        # first 2n entries of independent random permutations: disjoint halves
        idx = np.argsort(rng.random((n_rep, N)), axis=1)[:, : 2 * n]
    else:
        idx = rng.integers(0, N, size=(n_rep, 2 * n))
    u = inverse[idx]
    offs = (np.arange(n_rep) * n_support)[:, None]
    size = n_rep * n_support
    cx = np.bincount((u[:, :n] + offs).ravel(), minlength=size)
    cy = np.bincount((u[:, n:] + offs).ravel(), minlength=size)
    return ((cx - cy) / n).reshape(n_rep, n_support)


def mmd_distribution(
    sample,
    spec: KernelSpec,
    n: int,
    n_rep: int = 100,
    mode: str = "subsample",
    seed: int | None = 0,
    *,
    rng: np.random.Generator | None = None,
) -> MmdSample:
    """Draw ``n_rep`` realizations of MMD_n from the empirical distribution.

    ``mode="subsample"`` splits a without-replacement draw of ``2n`` results
    into two disjoint halves; ``mode="bootstrap"`` draws both halves with
    replacement.
    """
    sample = as_sample(sample, spec)
    n = check_positive_int(n, name="n")
    n_rep = check_positive_int(n_rep, name="n_rep")
    _check_mode(mode)
    if mode == "subsample" and 2 * n > sample.N:
        raise SizeError(f"subsampling needs 2n <= N, got n={n}, N={sample.N}")
    K = sample.gram(spec)
    if rng is None:
        rng = spawn_rng(seed, n)
    W = _resample_weights(rng, sample.inverse, len(K), n, n_rep, mode)
    return MmdSample(mmd_from_weights(W, K), n, n_rep, spec, mode, seed)


def empirical_quantile(values, alpha: float) -> float:
    """Smallest order statistic whose empirical cdf reaches ``alpha``.

    Uses the 1-based index ``ceil(alpha * m)`` ("higher" interpolation),
    which never understates the quantile.
    """
    alpha = check_level(alpha, name="alpha")
    v = np.sort(np.asarray(values, dtype=float).ravel())
    if v.size == 0:
        raise InputError("cannot take the quantile of an empty sequence")
    idx = math.ceil(alpha * v.size - 1e-9)
    return float(v[min(max(idx, 1), v.size) - 1])


def generalizability(
    sample,
    spec: KernelSpec,
    n: int,
    eps: float,
    n_rep: int = 100,
    mode: str = "subsample",
    seed: int | None = 0,
) -> float:
    """Estimated probability that two size-``n`` samples lie within ``eps``."""
    d = mmd_distribution(sample, spec, n, n_rep, mode, seed)
    return float(np.mean(d.values <= eps + EPS_TOL))


def n_grid(N: int, max_points: int = 20, start: int = 2) -> list[int]:
    """Subsample sizes used to build a quantile curve from N results.

    All of ``start..N//2`` for ``N <= 64``, otherwise about ``max_points``
    log-spaced sizes over the same range.
    """
    top = N // 2
    if top < max(start, 2):
        return []
    if N <= 64:
        return list(range(start, top + 1))
    grid = np.unique(np.round(np.geomspace(start, top, max_points)).astype(int))
    return grid.tolist()


def mmd_curve_samples(
    sample,
    spec: KernelSpec,
    grid=None,
    n_rep: int = 100,
    mode: str = "subsample",
    seed: int | None = 0,
    threads: int = 1,
) -> dict[int, MmdSample]:
    """MMD_n draws for every n in ``grid``; each n gets its own seeded stream."""
    sample = as_sample(sample, spec)
    if grid is None:
        grid = n_grid(sample.N)
    sample.gram(spec)  # populate the cache before fanning out

    def one(n):
        return mmd_distribution(sample, spec, n, n_rep, mode, seed)

    if threads > 1 and len(grid) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            draws = list(pool.map(one, grid))
    else:
        draws = [one(n) for n in grid]
    return dict(zip(grid, draws))


def curve_from_draws(draws: dict[int, MmdSample], alpha: float) -> MmdQuantileCurve:
    points = tuple((int(n), d.quantile(alpha)) for n, d in sorted(draws.items()))
    return MmdQuantileCurve(points, float(alpha))


def quantile_curve(
    sample,
    spec: KernelSpec,
    alpha: float,
    grid=None,
    n_rep: int = 100,
    mode: str = "subsample",
    seed: int | None = 0,
    threads: int = 1,
) -> MmdQuantileCurve:
    """The (n, alpha-quantile of MMD_n) curve of an empirical sample."""
    draws = mmd_curve_samples(sample, spec, grid, n_rep, mode, seed, threads)
    return curve_from_draws(draws, alpha)


def n_star_exact(
    dist,
    spec: KernelSpec,
    alpha_star: float,
    eps_star: float,
    n_max: int = 512,
    n_rep: int = 2000,
    seed: int | None = 0,
) -> int | None:
    """Smallest n whose Monte-Carlo generalizability under ``dist`` reaches alpha*.

    Both samples are true i.i.d. draws from the explicit distribution. Returns
    ``None`` when no ``n <= n_max`` qualifies.
    """
    alpha_star = check_level(alpha_star, name="alpha_star", closed=(False, True))
    n_max = check_positive_int(n_max, name="n_max")
    K = gram_matrix(spec, dist.support)
    p = dist.probs
    for n in range(1, n_max + 1):
        rng = spawn_rng(seed, n)
        cx = rng.multinomial(n, p, size=n_rep)
        cy = rng.multinomial(n, p, size=n_rep)
        vals = mmd_from_weights((cx - cy) / n, K)
        if np.mean(vals <= eps_star + EPS_TOL) >= alpha_star:
            return n
    return None
