"""Closed-form expected sparsity of uniformly random adversarial sets.

When the adversarial region is a union of k independent uniform "targets"
(caps on the sphere, vertices of the cube), the expected size of the
smallest direction-constrained family containing one of them has a closed
form: the integral or sum over constraint sizes of the probability that
all k targets miss the constraint set. This module evaluates those closed
forms, the interval bounds for the pixel-count variant, and Monte-Carlo
estimators used as independent cross-checks.

The survival probabilities are raised to the k-th power in log space, so
k may be astronomically large (2**100 and beyond) without underflow.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate

from . import geometry
from .errors import NumericError

__all__ = [
    "expected_sparsity_l2",
    "expected_sparsity_linf",
    "linf_bounds",
    "mc_oracle_l2",
    "mc_oracle_linf",
]

#: Overshoot factor e/(e-1) appearing in the upper interval bound.
_UPPER_SLACK = math.e / (math.e - 1.0)


def _survival_pow(g: float, k: int) -> float:
    """(1 - g)^k for g in [0, 1], computed stably for huge k."""
    if g >= 1.0:
        return 0.0
    if g <= 0.0:
        return 1.0
    return math.exp(float(k) * math.log1p(-g))


def _check_nk(n: int, k: int, min_n: int) -> tuple[int, int]:
    if int(n) != n or n < min_n:
        raise ValueError(f"dimension must be an integer >= {min_n}, got {n!r}")
    if int(k) != k or k < 1:
        raise ValueError(f"set size k must be an integer >= 1, got {k!r}")
    return int(n), int(k)


def expected_sparsity_l2(n: int, k: int, *, tol: float = 1e-8) -> float:
    """Expected angular sparsity for k independent uniform directions in R^n.

    Evaluates the closed form integral over [0, pi] of (1 - g(alpha))^k,
    where g is the spherical cap fraction. Equals pi/2 exactly at k = 1,
    is monotone non-increasing in k and non-decreasing in n.

    Adaptive quadrature with absolute tolerance `tol`; raises NumericError
    with the achieved error estimate if the quadrature does not converge.
    Requires n >= 3.
    """
    n, k = _check_nk(n, k, min_n=3)
    value, abserr = integrate.quad(
        lambda a: _survival_pow(geometry.cap_fraction(n, a), k),
        0.0,
        math.pi,
        epsabs=tol * 1e-2,
        epsrel=1e-12,
        limit=400,
    )
    if abserr > tol:
        raise NumericError(
            f"quadrature for expected_sparsity_l2(n={n}, k={k}) reached only "
            f"absolute error {abserr:.3e} (target {tol:.1e})"
        )
    return value


def expected_sparsity_linf(n: int, k: int) -> float:
    """Expected pixel-count sparsity for k independent uniform sign vertices.

    Direct summation of (1 - 2^-m)^k for m = 0..n. The m = 0 term is zero,
    so the value lies in [0, n]. Requires n >= 1.
    """
    n, k = _check_nk(n, k, min_n=1)
    return sum(_survival_pow(2.0 ** (-m), k) for m in range(n + 1))


def linf_bounds(n: int, k: int) -> tuple[float, float]:
    """Interval (lower, upper) bracketing expected_sparsity_linf(n, k).

    lower = (n - log2 k)/4 and upper = n - log2 k + e/(e - 1). Requires
    n >= 3 so the lower bound's derivation applies.
    """
    n, k = _check_nk(n, k, min_n=3)
    log2k = math.log2(k)
    return (n - log2k) / 4.0, n - log2k + _UPPER_SLACK


def mc_oracle_l2(
    n: int, k: int, trials: int, rng: np.random.Generator
) -> tuple[float, float]:
    """Monte-Carlo estimate of the expected angular sparsity.

    Per trial: draw k uniform unit vectors and one uniform direction u,
    record the smallest angle from u to any of the k vectors. Returns the
    sample mean and its standard error. Independent of the closed form;
    intended as the cross-check oracle.
    """
    n, k = _check_nk(n, k, min_n=2)
    if trials < 2:
        raise ValueError(f"need at least 2 trials for a standard error, got {trials}")
    mins = np.empty(trials)
    # Chunked so memory stays bounded; chunk boundaries do not change the
    # generator stream, so any chunk size yields identical results.
    chunk = max(1, int(2_000_000 // ((k + 1) * n)))
    done = 0
    while done < trials:
        b = min(chunk, trials - done)
        g = rng.standard_normal((b, k + 1, n))
        g /= np.linalg.norm(g, axis=2, keepdims=True)
        u = g[:, 0, :]
        dots = np.einsum("bn,bkn->bk", u, g[:, 1:, :])
        angles = np.arccos(np.clip(dots, -1.0, 1.0))
        mins[done : done + b] = angles.min(axis=1)
        done += b
    return float(mins.mean()), float(mins.std(ddof=1) / math.sqrt(trials))


def mc_oracle_linf(
    n: int, k: int, trials: int, rng: np.random.Generator
) -> tuple[float, float]:
    """Monte-Carlo estimate of the expected pixel-count sparsity.

    Per trial: draw k uniform sign vertices, one uniform vertex u and one
    uniform permutation sigma; record the smallest, over the k vertices, of
    the largest 1-based sigma-position at which the vertex differs from u
    (zero when the vertex equals u). Returns sample mean and standard error.
    """
    n, k = _check_nk(n, k, min_n=1)
    if trials < 2:
        raise ValueError(f"need at least 2 trials for a standard error, got {trials}")
    mins = np.empty(trials)
    positions = np.arange(1, n + 1)
    chunk = max(1, int(2_000_000 // ((k + 1) * n)))
    done = 0
    while done < trials:
        b = min(chunk, trials - done)
        verts = rng.integers(0, 2, size=(b, k, n)) * 2 - 1
        u = rng.integers(0, 2, size=(b, 1, n)) * 2 - 1
        sigma = rng.permuted(np.broadcast_to(np.arange(n), (b, n)), axis=1)
        diff = verts != u
        diff_in_order = np.take_along_axis(diff, sigma[:, None, :], axis=2)
        largest = (diff_in_order * positions).max(axis=2)
        mins[done : done + b] = largest.min(axis=1)
        done += b
    return float(mins.mean()), float(mins.std(ddof=1) / math.sqrt(trials))
