"""Input validation helpers, in the spirit of ``sklearn.utils.validation``."""

from __future__ import annotations

import math
from numbers import Integral, Real

import numpy as np

from ..exceptions import InputError

PROB_TOL = 1e-9


def check_rankings(X, *, n_alternatives=None, name="rankings"):
    """Validate a 2-D array of tier indices and return it as ``int64``.

    Each row must be a ranking with ties: non-negative integers whose set of
    values is exactly ``{0, ..., t_max}``.
    """
    from ..ranking import Ranking

    if isinstance(X, Ranking):
        X = [X]
    if len(X) and isinstance(X[0], Ranking):
        X = [r.ranks for r in X]
    try:
        arr = np.asarray(X, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InputError(f"{name}: could not convert to a numeric array ({exc})") from None
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2 or arr.shape[0] == 0 or arr.shape[1] == 0:
        raise InputError(f"{name}: expected a non-empty 2-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)) or np.any(arr != np.round(arr)):
        raise InputError(f"{name}: tier indices must be finite integers")
    arr = arr.astype(np.int64)
    if n_alternatives is not None and arr.shape[1] != n_alternatives:
        raise InputError(
            f"{name}: expected {n_alternatives} alternatives, got {arr.shape[1]}"
        )
    srt = np.sort(arr, axis=1)
    gaps = np.diff(srt, axis=1)
    bad = (srt[:, 0] != 0) | np.any(gaps > 1, axis=1)
    if np.any(bad):
        row = int(np.flatnonzero(bad)[0])
        raise InputError(
            f"{name}: row {row} is not a gap-free ranking: {arr[row].tolist()}"
        )
    return arr


def check_vectors(X, *, n_alternatives=None, name="vectors"):
    """Validate a 2-D array of real-valued result vectors."""
    from ..ranking import Ranking

    if isinstance(X, Ranking) or (len(X) and isinstance(X[0], Ranking)):
        raise InputError(f"{name}: got Ranking objects where score vectors are expected")
    try:
        arr = np.asarray(X, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InputError(f"{name}: could not convert to a numeric array ({exc})") from None
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2 or arr.shape[0] == 0 or arr.shape[1] == 0:
        raise InputError(f"{name}: expected a non-empty 2-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{name}: values must be finite")
    if n_alternatives is not None and arr.shape[1] != n_alternatives:
        raise InputError(
            f"{name}: expected {n_alternatives} alternatives, got {arr.shape[1]}"
        )
    return arr


def check_probability_vector(p, *, size=None, name="probs"):
    p = np.asarray(p, dtype=float).ravel()
    if p.size == 0:
        raise InputError(f"{name}: empty probability vector")
    if size is not None and p.size != size:
        raise InputError(f"{name}: expected {size} entries, got {p.size}")
    if not np.all(np.isfinite(p)) or np.any(p < 0):
        raise InputError(f"{name}: entries must be finite and non-negative")
    if abs(p.sum() - 1.0) > PROB_TOL:
        raise InputError(f"{name}: must sum to 1 (got {p.sum():.12g})")
    return p


def check_level(alpha, *, name="alpha", low=0.0, high=1.0, closed=(False, False)):
    """Check ``low < alpha < high`` (endpoints included per ``closed``)."""
    if not isinstance(alpha, Real) or not math.isfinite(alpha):
        raise InputError(f"{name} must be a finite real, got {alpha!r}")
    lo_ok = alpha >= low if closed[0] else alpha > low
    hi_ok = alpha <= high if closed[1] else alpha < high
    if not (lo_ok and hi_ok):
        lb = "[" if closed[0] else "("
        rb = "]" if closed[1] else ")"
        raise InputError(f"{name} must lie in {lb}{low}, {high}{rb}, got {alpha}")
    return float(alpha)


def check_positive_int(value, *, name, minimum=1):
    if isinstance(value, bool) or not isinstance(value, Integral) or value < minimum:
        raise InputError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return int(value)
