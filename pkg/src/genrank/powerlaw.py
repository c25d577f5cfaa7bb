"""Power law linking sample size and MMD quantiles.

Empirically and asymptotically, ``log n ~ -2 log q_alpha(n) + beta``. This
module fits that law to quantile curves, predicts the sample size for a
target threshold, and provides two analytic routes to the same law: a
closed-form approximation of the MMD quantile for discrete distributions and
a distribution-free upper bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .exceptions import DegenerateDistributionError, FitError, InputError, NumericError
from .kernels import KernelSpec, gram_matrix, kernel_bounds
from .utils.validation import check_level, check_probability_vector

FREE = "free"
FIXED = "fixed"
FIXED_SLOPE = -2.0
Q_FLOOR = 1e-12

# inverse of Lin's (1989) normal cdf approximation 1 - 0.5 exp(-0.717x - 0.416x^2)
LIN_C0 = -0.861779
LIN_C1 = 0.00120192
LIN_C2 = 514089.0
LIN_C3 = 1664000.0

JACOBI_TOL = 1e-10
JACOBI_MAX_SWEEPS = 100


@dataclass(frozen=True)
class MmdQuantileCurve:
    points: tuple[tuple[int, float], ...]
    alpha: float

    def __post_init__(self):
        pts = tuple((int(n), float(q)) for n, q in self.points)
        ns = [n for n, _ in pts]
        if any(b <= a for a, b in zip(ns, ns[1:])):
            raise InputError(f"curve sizes must be strictly increasing: {ns}")
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> np.ndarray:
        return np.array([p[0] for p in self.points], dtype=float)

    @property
    def q(self) -> np.ndarray:
        return np.array([p[1] for p in self.points], dtype=float)

    def usable(self) -> "MmdQuantileCurve":
        """Drop points whose quantile is too small to take a log of."""
        return MmdQuantileCurve(tuple(p for p in self.points if p[1] > Q_FLOOR), self.alpha)

    def __len__(self):
        return len(self.points)


@dataclass(frozen=True)
class PowerLawFit:
    """``log n = beta1 * log q + beta0``."""

    beta0: float
    beta1: float
    mode: str = FREE
    residual: float = 0.0

    def __post_init__(self):
        if self.mode not in (FREE, FIXED):
            raise InputError(f"fit mode must be {FREE!r} or {FIXED!r}, got {self.mode!r}")
        if self.mode == FIXED and self.beta1 != FIXED_SLOPE:
            raise InputError("a fixed-slope fit must have beta1 == -2")

    def log_n(self, q):
        return self.beta1 * np.log(q) + self.beta0


@dataclass(frozen=True)
class ChiSquareMatch:
    lambdas: tuple[float, ...]
    lambda1: float
    lambda2: float
    a: float
    dof: float


def fit_quantile_curve(curve: MmdQuantileCurve, mode: str = FREE) -> PowerLawFit:
    """Least-squares fit of ``log n`` on ``log q`` over the usable points.

    ``mode="fixed"`` pins the slope at -2 and only estimates the intercept.
    """
    if mode not in (FREE, FIXED):
        raise InputError(f"fit mode must be {FREE!r} or {FIXED!r}, got {mode!r}")
    pts = curve.usable()
    need = 3 if mode == FREE else 1
    if len(pts) < need:
        raise FitError(
            f"{mode}-slope fit needs {need} points with q > {Q_FLOOR:g}, got {len(pts)}",
            n_points=len(pts),
        )
    x, y = np.log(pts.q), np.log(pts.n)
    if mode == FIXED:
        beta1 = FIXED_SLOPE
        beta0 = float(np.mean(y - beta1 * x))
    else:
        if np.ptp(x) == 0:
            raise FitError("all usable quantiles are equal; slope undefined", n_points=len(pts))
        A = np.column_stack([x, np.ones_like(x)])
        (beta1, beta0), *_ = np.linalg.lstsq(A, y, rcond=None)
        beta1, beta0 = float(beta1), float(beta0)
    resid = y - (beta1 * x + beta0)
    return PowerLawFit(beta0, beta1, mode, float(np.sqrt(np.mean(resid**2))))


def predict_n_star(fit: PowerLawFit, eps_star: float) -> int:
    """Smallest integer sample size the fitted law gives for ``eps_star`` (at least 1)."""
    if not eps_star > 0:
        raise InputError(f"eps_star must be positive, got {eps_star}")
    log_n = fit.beta1 * math.log(eps_star) + fit.beta0
    if not math.isfinite(log_n):
        raise NumericError(f"non-finite n* prediction (log n = {log_n})")
    if log_n > 700:
        raise NumericError(f"predicted n* overflows (log n = {log_n:.1f})")
    # tolerance keeps exp(2 ln 10) = 100.00000000000004 at 100
    return max(1, math.ceil(math.exp(log_n) - 1e-9))


def _off_diagonal_norm(A):
    return float(np.linalg.norm(A - np.diag(A.diagonal())))


def jacobi_eigenvalues(A, tol: float = JACOBI_TOL, max_sweeps: int = JACOBI_MAX_SWEEPS) -> np.ndarray:
    """Eigenvalues of a real symmetric matrix by cyclic Jacobi rotations.

    Rotations follow a round-robin schedule so each step annihilates ``l/2``
    disjoint pivots at once. Stops when the off-diagonal Frobenius norm drops
    below ``tol`` times the Frobenius norm of ``A``.
    """
    A = np.array(A, dtype=float)
    l = A.shape[0]
    if A.ndim != 2 or A.shape[1] != l:
        raise InputError(f"expected a square matrix, got shape {A.shape}")
    if l == 1:
        return A.diagonal().copy()
    scale = max(np.linalg.norm(A), np.finfo(float).tiny)
    m = l + (l % 2)  # pad to even size for the tournament schedule
    players = list(range(m))
    for _ in range(max_sweeps):
        off = _off_diagonal_norm(A)
        if off <= tol * scale:
            break
        for _ in range(m - 1):
            pairs = [
                (min(players[i], players[m - 1 - i]), max(players[i], players[m - 1 - i]))
                for i in range(m // 2)
            ]
            pairs = [(p, q) for p, q in pairs if q < l]
            players = [players[0], players[-1]] + players[1:-1]
            P = np.array([p for p, _ in pairs])
            Q = np.array([q for _, q in pairs])
            apq = A[P, Q]
            active = np.abs(apq) > 0
            if not np.any(active):
                continue
            P, Q, apq = P[active], Q[active], apq[active]
            theta = (A[Q, Q] - A[P, P]) / (2.0 * apq)
            big = np.abs(theta) > 1e150
            th = np.where(big, 1.0, theta)
            t = np.sign(th) / (np.abs(th) + np.sqrt(th**2 + 1.0))
            # for huge theta, t ~ 1/(2 theta)
            t = np.where(big, 0.5 / np.where(big, theta, 1.0), t)
            t[theta == 0] = 1.0
            c = 1.0 / np.sqrt(t**2 + 1.0)
            s = t * c
            # A <- J' A J with J[p,p]=J[q,q]=c, J[p,q]=s, J[q,p]=-s
            colP, colQ = A[:, P].copy(), A[:, Q].copy()
            A[:, P] = c * colP - s * colQ
            A[:, Q] = s * colP + c * colQ
            rowP, rowQ = A[P, :].copy(), A[Q, :].copy()
            A[P, :] = c[:, None] * rowP - s[:, None] * rowQ
            A[Q, :] = s[:, None] * rowP + c[:, None] * rowQ
            A[P, Q] = 0.0
            A[Q, P] = 0.0
    else:
        off = _off_diagonal_norm(A)
        if off > tol * scale:
            raise NumericError(f"Jacobi iteration did not converge (off-diagonal norm {off:.3e})")
    return A.diagonal().copy()


def centered_kernel_eigenvalues(K, p) -> np.ndarray:
    """Eigenvalues of the probability-centered kernel matrix times ``diag(p)``.

    Centering uses the weights ``p``: ``Kc = (I - 1p')K(I - p1')``. The
    eigenvalues of ``Kc diag(p)`` are computed from the similar symmetric
    matrix ``diag(sqrt p) Kc diag(sqrt p)``. Returned in descending order.
    """
    K = np.asarray(K, dtype=float)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise InputError(f"K must be square, got shape {K.shape}")
    if not np.allclose(K, K.T, atol=1e-12):
        raise InputError("K must be symmetric")
    p = check_probability_vector(p, size=K.shape[0], name="p")
    l = len(p)
    C = np.eye(l) - np.outer(np.ones(l), p)
    Kc = C @ K @ C.T
    sp = np.sqrt(p)
    S = sp[:, None] * Kc * sp[None, :]
    S = 0.5 * (S + S.T)
    return np.sort(jacobi_eigenvalues(S))[::-1]


def chi2_moment_match(lambdas: Sequence[float]) -> ChiSquareMatch:
    """Scaled chi-square ``a * chi2(dof)`` matching the first two moments of
    ``Q = 2 sum_k lambda_k Z_k^2``.
    """
    lam = np.asarray(lambdas, dtype=float).ravel()
    lambda1 = float(lam.sum())
    s2 = float(np.sum(lam**2))
    # 3 sum l_k^2 + sum_{i != j} l_i l_j
    lambda2 = 3.0 * s2 + (lambda1**2 - s2)
    spread = lambda2 - lambda1**2
    if not (lambda1 > 0 and spread > 0):
        raise DegenerateDistributionError(
            f"degenerate spectrum (Lambda1={lambda1:.3e}, Lambda2-Lambda1^2={spread:.3e}); "
            "the result distribution is effectively a point mass under this kernel"
        )
    a = spread / lambda1
    dof = 2.0 * lambda1**2 / spread
    return ChiSquareMatch(tuple(lam.tolist()), lambda1, lambda2, a, dof)


def lin_inverse_normal(alpha: float) -> float:
    """Closed-form standard-normal quantile, valid in the upper tail (0.6 <= alpha < 1)."""
    alpha = check_level(alpha, name="alpha", low=0.6, closed=(True, False))
    return LIN_C0 + LIN_C1 * math.sqrt(LIN_C2 - LIN_C3 * math.log(2.0 * (1.0 - alpha)))


def wilson_hilferty_inverse(z: float, a: float, dof: float) -> float:
    """Quantile of ``a * chi2(dof)`` from a standard-normal quantile ``z``."""
    h = 2.0 / (9.0 * dof)
    base = math.sqrt(h) * z + (1.0 - h)
    return a * dof * base**3


def closed_form_quantile(dist, spec: KernelSpec, n: int, alpha: float) -> float:
    """Approximate alpha-quantile of MMD_n for i.i.d. samples from ``dist``.

    Chain: ``n MMD_n^2 -> Q = 2 sum lambda_k Z_k^2 -> a chi2(d) -> normal``,
    then Lin's closed-form normal quantile. Returns 0 for a point mass.
    """
    if n < 1:
        raise InputError(f"n must be >= 1, got {n}")
    K = gram_matrix(spec, dist.support)
    lam = centered_kernel_eigenvalues(K, dist.probs)
    lam = np.clip(lam, 0.0, None)
    if lam.sum() <= 1e-12 * max(1.0, float(np.abs(K).max())):
        return 0.0
    match = chi2_moment_match(lam)
    y = wilson_hilferty_inverse(lin_inverse_normal(alpha), match.a, match.dof)
    if y < 0:
        raise NumericError(
            f"Wilson-Hilferty inverse is negative (dof={match.dof:.3g}); closed form unavailable"
        )
    return math.sqrt(y / n)


def closed_form_coefficients(dist, spec: KernelSpec, alpha: float) -> tuple[float, float]:
    """``(beta0, beta1)`` of the closed-form law ``log n = -2 log q + beta0``."""
    q1 = closed_form_quantile(dist, spec, 1, alpha)
    if q1 <= 0:
        raise DegenerateDistributionError("point-mass distribution has no power law")
    return 2.0 * math.log(q1), FIXED_SLOPE


def distribution_free_epsilon(spec: KernelSpec, alpha: float, n: int) -> float:
    """Upper bound on the alpha-quantile of MMD_n that holds for every distribution.

    ``n^(-1/2) * (sqrt(-4 k_sup log(1 - alpha)) + sqrt(2 k_sup))``, from the
    large-deviation bound on the biased MMD.
    """
    alpha = check_level(alpha, name="alpha")
    if n < 1:
        raise InputError(f"n must be >= 1, got {n}")
    k_sup = kernel_bounds(spec).k_sup
    return (math.sqrt(-4.0 * k_sup * math.log1p(-alpha)) + math.sqrt(2.0 * k_sup)) / math.sqrt(n)


def distribution_free_coefficients(spec: KernelSpec, alpha: float) -> tuple[float, float]:
    """``(beta0, beta1)`` such that ``log n = beta1 log(eps_bar) + beta0`` exactly."""
    alpha = check_level(alpha, name="alpha")
    k_sup = kernel_bounds(spec).k_sup
    beta0 = math.log(2.0 * k_sup) + 2.0 * math.log(math.sqrt(-2.0 * math.log1p(-alpha)) + 1.0)
    return beta0, FIXED_SLOPE
