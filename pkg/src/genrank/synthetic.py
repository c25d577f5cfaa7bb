"""Explicit result distributions and the estimator-accuracy simulation."""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import permutations, product

import numpy as np

from ._rng import derive_seed, spawn_rng
from .exceptions import FitError, InputError, SizeError
from .kernels import KernelSpec, epsilon_star
from .mmd import EmpiricalSample, mmd_curve_samples, curve_from_draws, n_grid, n_star_exact
from .powerlaw import FREE, Q_FLOOR, fit_quantile_curve, predict_n_star
from .utils.validation import check_probability_vector, check_rankings, check_vectors

MAX_N_A_TIES = 6
MAX_N_A_PERMUTATIONS = 7
NSTAR_DRAWS = 2000
NSTAR_MAX = 512


@dataclass(frozen=True, eq=False)
class DiscreteRankingDistribution:
    """Finite-support distribution over rankings (or score vectors)."""

    support: np.ndarray
    probs: np.ndarray
    kind: str = "ranking"

    def __post_init__(self):
        check = check_rankings if self.kind == "ranking" else check_vectors
        support = check(self.support, name="support")
        probs = check_probability_vector(self.probs, size=len(support))
        if len(np.unique(support, axis=0)) != len(support):
            raise InputError("support entries must be distinct")
        support.setflags(write=False)
        probs.setflags(write=False)
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "probs", probs)

    @property
    def n_a(self) -> int:
        return self.support.shape[1]

    @property
    def size(self) -> int:
        return len(self.support)


def enumerate_rankings(n_a: int, with_ties: bool = True) -> list[tuple[int, ...]]:
    """All rankings of ``n_a`` alternatives in lexicographic order of rank vectors.

    With ties these are the ordered set partitions (ordered Bell numbers);
    without ties, the ``n_a!`` permutations.
    """
    if n_a < 1:
        raise InputError(f"n_a must be >= 1, got {n_a}")
    if with_ties:
        if n_a > MAX_N_A_TIES:
            raise SizeError(f"enumeration with ties is limited to n_a <= {MAX_N_A_TIES}")
        out = []
        for ranks in product(range(n_a), repeat=n_a):
            used = set(ranks)
            if used == set(range(len(used))):
                out.append(ranks)
        return out
    if n_a > MAX_N_A_PERMUTATIONS:
        raise SizeError(f"enumeration of permutations is limited to n_a <= {MAX_N_A_PERMUTATIONS}")
    return sorted(permutations(range(n_a)))


def uniform_distribution(n_a: int, with_ties: bool = False) -> DiscreteRankingDistribution:
    support = np.array(enumerate_rankings(n_a, with_ties), dtype=np.int64)
    return DiscreteRankingDistribution(support, np.full(len(support), 1.0 / len(support)))


def explicit_distribution(pairs) -> DiscreteRankingDistribution:
    """Build a distribution from ``(ranking, probability)`` pairs."""
    pairs = list(pairs)
    if not pairs:
        raise InputError("at least one (ranking, probability) pair is required")
    rankings = [r for r, _ in pairs]
    probs = [float(p) for _, p in pairs]
    return DiscreteRankingDistribution(check_rankings(rankings), np.asarray(probs))


def point_mass(ranking) -> DiscreteRankingDistribution:
    return explicit_distribution([(ranking, 1.0)])


def two_point_distribution() -> DiscreteRankingDistribution:
    """Two permutations of five alternatives differing only in the top pair."""
    return explicit_distribution([((0, 1, 2, 3, 4), 0.55), ((1, 0, 2, 3, 4), 0.45)])


def sample_from(dist: DiscreteRankingDistribution, n: int, seed: int | None = 0, label=None) -> EmpiricalSample:
    if n < 1:
        raise InputError(f"n must be >= 1, got {n}")
    rng = spawn_rng(seed, 0)
    idx = rng.choice(dist.size, size=n, p=dist.probs)
    return EmpiricalSample(dist.support[idx], dist.kind, label=label)


def estimate_n_star_from_sample(
    sample: EmpiricalSample,
    spec: KernelSpec,
    alpha_star: float,
    eps_star: float,
    n_rep: int = 100,
    mode: str = "bootstrap",
    fit_mode: str = FREE,
    seed: int | None = 0,
    n_min: int = 1,
):
    """Fit the power law on a sample's quantile curve; return ``(n_hat, curve, fit)``.

    The curve covers ``n_min..N//2``; the default ``n_min=1`` includes the
    single-result comparisons.
    """
    grid = n_grid(sample.N, start=n_min)
    curve = curve_from_draws(mmd_curve_samples(sample, spec, grid, n_rep, mode, seed), alpha_star)
    if all(q <= Q_FLOOR for _, q in curve.points):
        return 1, curve, None
    fit = fit_quantile_curve(curve, fit_mode)
    return predict_n_star(fit, eps_star), curve, fit


def estimator_accuracy_experiment(
    dist: DiscreteRankingDistribution,
    spec: KernelSpec,
    alpha_star: float = 0.95,
    delta_star: float = 0.05,
    N_values=(10, 20, 40, 80),
    reps: int = 100,
    seed: int | None = 0,
    n_rep: int = 100,
    mode: str = "bootstrap",
    fit_mode: str = FREE,
    n_star: int | None = None,
    n_min: int = 1,
) -> list[dict]:
    """Ratio of the estimated to the exact n* over repeated preliminary samples.

    One row per (N, repetition). Fit failures are kept as rows with
    ``status="fit-failed"`` and no ratio.
    """
    eps = epsilon_star(spec, delta_star)
    if n_star is None:
        n_star = n_star_exact(dist, spec, alpha_star, eps, NSTAR_MAX, NSTAR_DRAWS, derive_seed(seed, 1))
        if n_star is None:
            raise SizeError(f"exact n* exceeds {NSTAR_MAX}; raise delta_star or lower alpha_star")
    rows = []
    for N in N_values:
        for rep in range(reps):
            sample = sample_from(dist, N, derive_seed(seed, 2, N, rep))
            row = {"N": int(N), "rep": rep, "n_star": int(n_star), "n_hat": None, "ratio": None}
            try:
                n_hat, _, _ = estimate_n_star_from_sample(
                    sample, spec, alpha_star, eps, n_rep, mode, fit_mode, derive_seed(seed, 3, N, rep), n_min
                )
            except FitError as exc:
                row["status"] = "fit-failed"
                row["error"] = str(exc)
            else:
                row.update(status="ok", n_hat=int(n_hat), ratio=n_hat / n_star)
            rows.append(row)
    return rows


def summarize_ratios(rows, low=0.5, high=2.0) -> dict[int, dict]:
    """Per-N median ratio and the fraction of repetitions inside ``[low, high]``."""
    out = {}
    for N in sorted({r["N"] for r in rows}):
        ratios = np.array([r["ratio"] for r in rows if r["N"] == N and r["ratio"] is not None])
        total = sum(1 for r in rows if r["N"] == N)
        inside = int(np.sum((ratios >= low) & (ratios <= high)))
        out[N] = {
            "reps": total,
            "failed": total - len(ratios),
            "median_ratio": float(np.median(ratios)) if len(ratios) else math.nan,
            "fraction_within": inside / total if total else math.nan,
        }
    return out
