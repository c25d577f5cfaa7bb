"""Sequential planning of a generalizable study and one-shot assessment.

A study is grown in batches of ``N0`` experiments. After each batch the
MMD quantile curve of all results so far is fitted with the power law and the
required sample size ``n_hat`` is predicted; the loop stops once the study
is at least that large.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Protocol, Sequence

import numpy as np

from ._rng import derive_seed, spawn_rng
from .exceptions import FitError, GenrankError, InputError, SizeError
from .kernels import KernelSpec, as_results, epsilon_star
from .mmd import EmpiricalSample, MmdSample, as_sample, curve_from_draws, mmd_curve_samples, n_grid
from .powerlaw import FREE, Q_FLOOR, MmdQuantileCurve, PowerLawFit, fit_quantile_curve, predict_n_star
from .utils.validation import check_level, check_positive_int

CONVERGED = "converged"
EXHAUSTED = "source-exhausted"
CAPPED = "cap-reached"

MIN_N0 = 4


@dataclass(frozen=True)
class GenRequirement:
    """Target generalizability ``alpha_star`` at similarity ``delta_star``.

    Build it with :meth:`for_kernel` so that ``eps_star`` matches the kernel.
    """

    alpha_star: float
    delta_star: float
    eps_star: float

    def __post_init__(self):
        check_level(self.alpha_star, name="alpha_star")
        check_level(self.delta_star, name="delta_star", closed=(True, True))
        if not (math.isfinite(self.eps_star) and self.eps_star >= 0):
            raise InputError(f"eps_star must be finite and non-negative, got {self.eps_star}")

    @classmethod
    def for_kernel(cls, spec: KernelSpec, alpha_star: float = 0.95, delta_star: float = 0.05):
        return cls(float(alpha_star), float(delta_star), epsilon_star(spec, delta_star))


class Assessment(NamedTuple):
    n_hat: int
    generalizable: bool
    curve: MmdQuantileCurve
    fit: PowerLawFit | None


def assess_from_draws(
    draws: dict[int, MmdSample], N: int, req: GenRequirement, fit_mode: str = FREE
) -> Assessment:
    """Fit and predict from precomputed MMD draws (lets alpha sweeps share draws)."""
    curve = curve_from_draws(draws, req.alpha_star)
    if len(curve) and all(q <= Q_FLOOR for _, q in curve.points):
        # every pair of subsamples already coincides
        return Assessment(1, N >= 1, curve, None)
    fit = fit_quantile_curve(curve, fit_mode)
    n_hat = predict_n_star(fit, req.eps_star)
    return Assessment(n_hat, N >= n_hat, curve, fit)


def assess_study(
    sample,
    spec: KernelSpec,
    req: GenRequirement,
    n_rep: int = 100,
    seed: int | None = 0,
    mode: str = "subsample",
    fit_mode: str = FREE,
    threads: int = 1,
) -> Assessment:
    """Estimate n* from an existing study and say whether the study reaches it."""
    sample = as_sample(sample, spec)
    if sample.N < MIN_N0:
        raise SizeError(f"need at least {MIN_N0} results to assess a study, got {sample.N}")
    draws = mmd_curve_samples(sample, spec, n_grid(sample.N), n_rep, mode, seed, threads)
    return assess_from_draws(draws, sample.N, req, fit_mode)


class ExperimentSource(Protocol):
    def next_batch(self, count: int) -> Sequence:
        """Up to ``count`` new results; fewer means the source is exhausted."""


class DistributionSource:
    """Draws i.i.d. results from an explicit distribution."""

    def __init__(self, dist, seed: int | None = 0):
        self.dist = dist
        self._rng = spawn_rng(seed, 0)

    def next_batch(self, count: int):
        idx = self._rng.choice(self.dist.size, size=count, p=self.dist.probs)
        return self.dist.support[idx]


class PoolSource:
    """Hands out a fixed pool of results, optionally in a seeded random order."""

    def __init__(self, results, shuffle: bool = False, seed: int | None = 0):
        self.results = np.asarray(results)
        order = np.arange(len(self.results))
        if shuffle:
            order = spawn_rng(seed, 0).permutation(len(self.results))
        self._order = order
        self._pos = 0

    def __len__(self):
        return len(self.results)

    def next_batch(self, count: int):
        idx = self._order[self._pos : self._pos + count]
        self._pos += len(idx)
        return self.results[idx]


class CallbackSource:
    """Wraps ``fn(count)``; ``None`` or a short batch signals exhaustion."""

    def __init__(self, fn: Callable[[int], Sequence | None]):
        self.fn = fn

    def next_batch(self, count: int):
        out = self.fn(count)
        return [] if out is None else out


@dataclass(frozen=True)
class IterationRecord:
    N: int
    n_hat: int | None
    curve: MmdQuantileCurve | None = None
    fit: PowerLawFit | None = None
    error: str | None = None


@dataclass(frozen=True)
class WorkflowReport:
    iterations: tuple[IterationRecord, ...]
    n_hat: int | None
    stopped_reason: str
    seed: int | None
    N0: int
    sample: EmpiricalSample | None = field(default=None, compare=False, repr=False)

    @property
    def N(self) -> int:
        return self.iterations[-1].N if self.iterations else 0

    @property
    def generalizable(self) -> bool:
        return self.stopped_reason == CONVERGED

    def trace(self) -> list[tuple[int, int | None]]:
        return [(it.N, it.n_hat) for it in self.iterations]


def run_generalizable_study(
    source: ExperimentSource,
    spec: KernelSpec,
    req: GenRequirement,
    N0: int = 10,
    max_N: int = 10_000,
    max_iter: int = 20,
    n_rep: int = 100,
    seed: int | None = 0,
    mode: str = "subsample",
    fit_mode: str = FREE,
    threads: int = 1,
) -> WorkflowReport:
    """Run experiments in batches of ``N0`` until the study is generalizable.

    Stops with ``"converged"`` once ``N >= n_hat``, ``"source-exhausted"``
    when the source returns a short batch, or ``"cap-reached"`` at ``max_N``
    results or ``max_iter`` batches. A failed fit is recorded on its
    iteration and the loop moves on to the next batch.
    """
    N0 = check_positive_int(N0, name="N0", minimum=MIN_N0)
    max_N = check_positive_int(max_N, name="max_N", minimum=N0)
    max_iter = check_positive_int(max_iter, name="max_iter")
    chunks: list[np.ndarray] = []
    records: list[IterationRecord] = []
    N = 0
    n_hat = None
    reason = CAPPED
    for it in range(max_iter):
        want = min(N0, max_N - N)
        batch = source.next_batch(want)
        try:
            batch = as_results(spec, batch, "batch") if len(batch) else np.empty((0, spec.n_a))
        except GenrankError as exc:
            raise InputError(f"iteration {it}: malformed result batch: {exc}") from exc
        if len(batch) == 0:
            reason = EXHAUSTED
            break
        chunks.append(batch)
        N += len(batch)
        sample = _cumulative(chunks, spec)
        if N < MIN_N0:
            records.append(IterationRecord(N, None, error=f"need at least {MIN_N0} results"))
        else:
            try:
                res = assess_study(sample, spec, req, n_rep, derive_seed(seed, it), mode, fit_mode, threads)
            except FitError as exc:
                records.append(IterationRecord(N, None, error=str(exc)))
            else:
                n_hat = res.n_hat
                records.append(IterationRecord(N, res.n_hat, res.curve, res.fit))
                if N >= res.n_hat:
                    reason = CONVERGED
                    break
        if len(batch) < want:
            reason = EXHAUSTED
            break
        if N >= max_N:
            reason = CAPPED
            break
    sample = _cumulative(chunks, spec) if chunks else None
    return WorkflowReport(tuple(records), n_hat, reason, seed, N0, sample)


def _cumulative(chunks, spec):
    results = np.vstack(chunks)
    if spec.on_rankings:
        return EmpiricalSample.from_rankings(results)
    return EmpiricalSample.from_vectors(results)
