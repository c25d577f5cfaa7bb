"""Friedman and Conover-Iman tests on a sample of rankings, and a demo
contrasting significance with generalizability."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.special import gammaincc
from scipy.stats import rankdata
from scipy.stats import t as t_dist

from ._rng import derive_seed
from .exceptions import SizeError
from .kernels import KernelSpec, epsilon_star
from .mmd import EmpiricalSample, as_sample, generalizability
from .utils.validation import check_level

DEFAULT_SIGNIFICANCE = 0.05


@dataclass(frozen=True)
class SignificanceResult:
    friedman_stat: float
    friedman_p: float
    ci_pairwise: np.ndarray
    best_alternative: frozenset[int]
    best_is_significant: bool


def _block_ranks(sample) -> np.ndarray:
    sample = as_sample(sample)
    R = sample.results
    if R.shape[0] < 2:
        raise SizeError(f"need at least 2 blocks, got {R.shape[0]}")
    if R.shape[1] < 2:
        raise SizeError(f"need at least 2 alternatives, got {R.shape[1]}")
    # tier 0 is best; average ranks 1..k within each block, ties share the mean
    return rankdata(R, method="average", axis=1)


def _tie_correction(R) -> float:
    """Sum over blocks and tie groups of ``t^3 - t``."""
    total = 0.0
    for row in R:
        _, counts = np.unique(row, return_counts=True)
        total += float(np.sum(counts.astype(float) ** 3 - counts))
    return total


def friedman_test(sample) -> tuple[float, float]:
    """Tie-corrected Friedman statistic and its chi-square(k - 1) p-value."""
    R = _block_ranks(sample)
    b, k = R.shape
    rank_sums = R.sum(axis=0)
    denom = 1.0 - _tie_correction(R) / (b * k * (k * k - 1))
    if denom <= 0:
        return 0.0, 1.0
    stat = (12.0 / (b * k * (k + 1)) * np.sum(rank_sums**2) - 3.0 * b * (k + 1)) / denom
    stat = max(float(stat), 0.0)
    return stat, float(gammaincc((k - 1) / 2.0, stat / 2.0))


def conover_iman(sample, significance: float = DEFAULT_SIGNIFICANCE) -> SignificanceResult:
    """Friedman test followed by Conover's pairwise comparisons of rank sums.

    With ``A1 = sum r_ij^2``, ``C1 = b k (k+1)^2 / 4`` and
    ``T1 = (k-1)(sum_j R_j^2 - b C1) / (A1 - C1)``, alternatives i and j
    differ when

        |R_i - R_j| / sqrt(2 b (A1 - C1) / ((b-1)(k-1)) * (1 - T1 / (b (k-1))))

    exceeds the t quantile with ``(b-1)(k-1)`` degrees of freedom (two-sided).
    The best alternative only counts as significant when the Friedman test
    rejects first.
    """
    significance = check_level(significance, name="significance")
    R = _block_ranks(sample)
    b, k = R.shape
    stat, p_friedman = friedman_test(sample)
    rank_sums = R.sum(axis=0)
    A1 = float(np.sum(R**2))
    C1 = b * k * (k + 1) ** 2 / 4.0
    diff = np.abs(rank_sums[:, None] - rank_sums[None, :])
    spread = A1 - C1
    pvals = np.ones((k, k))
    if spread > 0:
        T1 = (k - 1) * (float(np.sum(rank_sums**2)) - b * C1) / spread
        var = 2.0 * b * spread / ((b - 1) * (k - 1)) * (1.0 - T1 / (b * (k - 1)))
        if var > 0:
            pvals = 2.0 * t_dist.sf(diff / math.sqrt(var), (b - 1) * (k - 1))
        else:
            # rankings agree perfectly across blocks: any gap is decisive
            pvals = np.where(diff > 0, 0.0, 1.0)
    np.fill_diagonal(pvals, 1.0)
    pvals = np.clip(pvals, 0.0, 1.0)

    best = np.flatnonzero(np.isclose(rank_sums, rank_sums.min(), rtol=0, atol=1e-9))
    significant = False
    if p_friedman < significance and len(best) == 1:
        others = np.delete(pvals[best[0]], best[0])
        significant = bool(np.all(others < significance))
    return SignificanceResult(stat, p_friedman, pvals, frozenset(best.tolist()), significant)


@dataclass(frozen=True)
class DemoCell:
    ci_significant: bool | None
    best_alternative: str
    count: int
    mean_generalizability: float
    std_generalizability: float


@dataclass(frozen=True)
class DemoSummary:
    cells: tuple[DemoCell, ...]
    friedman_fraction: float
    ci_fraction: float
    reps: int
    n: int
    seed: int | None

    @property
    def total(self) -> DemoCell:
        return self.cells[-1]

    def rows(self) -> list[dict]:
        return [asdict(c) for c in self.cells]

    def to_json(self) -> dict:
        return {
            "reps": self.reps,
            "n": self.n,
            "seed": self.seed,
            "friedman_fraction": self.friedman_fraction,
            "ci_fraction": self.ci_fraction,
            "cells": self.rows(),
        }

    def write(self, path, fmt: str = "json") -> None:
        with open(path, "w", newline="") as fh:
            if fmt == "json":
                json.dump(self.to_json(), fh, indent=2)
                fh.write("\n")
                return
            fields = list(DemoCell.__dataclass_fields__)
            writer = csv.DictWriter(fh, fieldnames=fields)
            writer.writeheader()
            for row in self.rows():
                writer.writerow({k: _csv_value(v) for k, v in row.items()})


def _csv_value(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return v


def _best_label(best) -> str:
    items = sorted(best)
    return str(items[0]) if len(items) == 1 else "{" + ", ".join(map(str, items)) + "}"


def _cell(sig, label, values) -> DemoCell:
    v = np.asarray(values, dtype=float)
    std = float(np.std(v, ddof=1)) if len(v) > 1 else 0.0
    return DemoCell(sig, label, len(v), float(np.mean(v)), std)


def significance_vs_generalizability_demo(
    reps: int = 1000,
    n: int = 20,
    seed: int | None = 0,
    dist=None,
    delta_star: float = 0.05,
    n_rep: int = 100,
    significance: float = DEFAULT_SIGNIFICANCE,
) -> DemoSummary:
    """Repeatedly sample ``n`` rankings, test them, and measure their ``n/2``-generalizability.

    Generalizability uses the Jaccard kernel on the top tier. Cells group the
    repetitions by Conover-Iman significance and by the best alternative; the
    last cell is the total over all repetitions.
    """
    from .synthetic import sample_from, two_point_distribution

    dist = two_point_distribution() if dist is None else dist
    spec = KernelSpec.jaccard(dist.n_a, 1)
    eps = epsilon_star(spec, delta_star)
    groups: dict[tuple[bool, str], list[float]] = {}
    all_g = []
    n_friedman = n_ci = 0
    for rep in range(reps):
        sample: EmpiricalSample = sample_from(dist, n, derive_seed(seed, 0, rep))
        res = conover_iman(sample, significance)
        g = generalizability(sample, spec, n // 2, eps, n_rep, "subsample", derive_seed(seed, 1, rep))
        n_friedman += res.friedman_p < significance
        n_ci += res.best_is_significant
        groups.setdefault((res.best_is_significant, _best_label(res.best_alternative)), []).append(g)
        all_g.append(g)
    cells = [_cell(sig, label, groups[(sig, label)]) for sig, label in sorted(groups)]
    cells.append(_cell(None, "all", all_g))
    return DemoSummary(tuple(cells), n_friedman / reps, n_ci / reps, reps, n, seed)
