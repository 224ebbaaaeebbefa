"""Unit-sphere and hypercube-vertex geometry.

Uniform sampling on the sphere and on cube vertices, angular arithmetic,
spherical-cap area fractions via the regularized incomplete beta function,
and the exact Euclidean projection onto a spherical cap. These primitives
back both the direction-constrained attacks and the closed-form theory.

Conventions:
  * vectors are 1-D float64 numpy arrays; batched variants take one row
    per vector,
  * angles are radians in [0, pi],
  * permutations are 0-based index arrays (a bijection of range(n)).
"""

from __future__ import annotations

import math

import numpy as np

from .errors import NumericError

__all__ = [
    "sample_uniform_sphere",
    "sample_vertex_and_permutation",
    "regularized_incomplete_beta",
    "cap_fraction",
    "angle_between",
    "project_to_cap",
]

# Rows with an orthogonal component smaller than this are treated as parallel
# (or antiparallel) to the cap axis during projection.
_PARALLEL_TOL = 1e-12


def sample_uniform_sphere(n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw one point uniformly from the unit sphere in R^n.

    Normalized Gaussian sampling; rotation invariance of the Gaussian makes
    the direction exactly uniform. Requires n >= 2.
    """
    if int(n) != n or n < 2:
        raise ValueError(f"sphere dimension must be an integer >= 2, got {n!r}")
    n = int(n)
    while True:
        v = rng.standard_normal(n)
        norm = np.linalg.norm(v)
        if norm > 0.0:  # zero draw has probability 0 but guard anyway
            return v / norm


def sample_vertex_and_permutation(
    n: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Draw a uniform sign vertex of {-1,+1}^n and a uniform permutation of range(n).

    Returns (signs, perm): signs is an int array with entries exactly +-1,
    perm a 0-based index array. Requires n >= 1.
    """
    if int(n) != n or n < 1:
        raise ValueError(f"vertex dimension must be an integer >= 1, got {n!r}")
    n = int(n)
    signs = rng.integers(0, 2, size=n) * 2 - 1
    perm = rng.permutation(n)
    return signs, perm


def _beta_continued_fraction(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta (modified Lentz recurrence).

    Converges quickly for x < (a + 1)/(a + b + 2); the caller applies the
    symmetry switch so evaluation always lands in that region.
    """
    max_iter = 500
    eps = 1e-16
    tiny = 1e-300

    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        # even step
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        # odd step
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            return h
    raise NumericError(
        f"incomplete beta continued fraction did not converge for a={a}, b={b}, x={x}"
    )


def regularized_incomplete_beta(x: float, a: float, b: float) -> float:
    """Regularized incomplete beta function I_x(a, b).

    Continued-fraction evaluation with the standard symmetry switch at
    x = (a + 1)/(a + b + 2), so the fraction is always evaluated in its
    fast-convergence region. Absolute error is around 1e-13 over the
    parameter range exercised here (a up to a few thousand, b >= 1/2).

    Raises ValueError outside the domain x in [0, 1], a > 0, b > 0.
    """
    x = float(x)
    a = float(a)
    b = float(b)
    if not (0.0 <= x <= 1.0):
        raise ValueError(f"x must lie in [0, 1], got {x}")
    if a <= 0.0 or b <= 0.0:
        raise ValueError(f"shape parameters must be positive, got a={a}, b={b}")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_continued_fraction(a, b, x) / a
    return 1.0 - front * _beta_continued_fraction(b, a, 1.0 - x) / b


def cap_fraction(n: int, alpha: float, *, halved: bool = True) -> float:
    """Fraction of the unit sphere in R^n covered by a cap of half-angle alpha.

    For alpha <= pi/2 the cap area is proportional to
    I_{sin^2 alpha}((n - 1)/2, 1/2); dividing by the full sphere area leaves
    half that value, so a hemisphere has fraction exactly 1/2. For
    alpha > pi/2 the complement identity f(alpha) = 1 - f(pi - alpha)
    applies. Monotone increasing in alpha, with f(0) = 0 and f(pi) = 1.

    With halved=False the raw incomplete-beta value is returned instead
    (it reaches 1 already at the hemisphere). That variant overstates the
    fraction by a factor of two on [0, pi/2] and is kept only for
    comparison against the uncorrected convention.

    Requires n >= 3.
    """
    if int(n) != n or n < 3:
        raise ValueError(f"cap fraction requires integer dimension n >= 3, got {n!r}")
    alpha = float(alpha)
    if not (0.0 <= alpha <= math.pi):
        raise ValueError(f"alpha must lie in [0, pi], got {alpha}")
    n = int(n)
    if alpha > math.pi / 2.0:
        return 1.0 - cap_fraction(n, math.pi - alpha, halved=halved)
    s = math.sin(alpha)
    t = regularized_incomplete_beta(s * s, (n - 1) / 2.0, 0.5)
    return 0.5 * t if halved else t


def angle_between(a: np.ndarray, b: np.ndarray) -> float:
    """Angle in [0, pi] between two vectors (arccos of the clamped cosine).

    Lengths are divided out, so the result only depends on directions;
    zero vectors have no direction and are rejected.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"expected two vectors of equal dimension, got {a.shape} and {b.shape}")
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise ValueError("cannot measure an angle against a zero vector")
    return float(np.arccos(np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0)))


def _first_orthogonal_axis(u: np.ndarray) -> np.ndarray:
    """Unit vector orthogonal to u, built from the first canonical axis not parallel to u."""
    for i in range(u.shape[0]):
        if abs(u[i]) < 1.0 - _PARALLEL_TOL:
            v = -u[i] * u
            v[i] += 1.0
            return v / np.linalg.norm(v)
    raise ValueError("could not find a canonical axis not parallel to u")


def project_to_cap(
    delta: np.ndarray,
    u: np.ndarray,
    alpha,
    eps: float,
) -> np.ndarray:
    """Project delta onto the spherical cap of half-angle alpha around axis u.

    Returns the closest point of {s : ||s|| = min(eps, ||delta||),
    angle(s, u) <= alpha} to delta: the direction of delta is rotated toward
    u until its angle is min(angle(delta, u), alpha), then rescaled. The
    output therefore satisfies the norm contract exactly, keeps the
    direction of any delta already inside the cap, and is idempotent.

    delta may be a single vector or a matrix of row vectors; u and alpha
    broadcast accordingly (shared axis or one per row). Ties at the
    antipode (delta exactly opposite u) are broken by rotating toward the
    first canonical basis vector not parallel to u, deterministically.

    Requires alpha in (0, pi], eps >= 0, and nonzero delta rows.
    """
    delta = np.asarray(delta, dtype=float)
    single = delta.ndim == 1
    rows = np.atleast_2d(delta)
    n = rows.shape[1]
    axes = np.broadcast_to(np.asarray(u, dtype=float), rows.shape)
    alphas = np.broadcast_to(np.asarray(alpha, dtype=float), (rows.shape[0],))
    if np.any(alphas <= 0.0) or np.any(alphas > math.pi):
        raise ValueError("cap half-angle must lie in (0, pi]")
    if eps < 0.0:
        raise ValueError(f"eps must be nonnegative, got {eps}")

    norms = np.linalg.norm(rows, axis=1)
    if np.any(norms == 0.0):
        raise ValueError("cannot project a zero vector onto a cap")

    c = np.einsum("ij,ij->i", rows, axes)
    p = rows - c[:, None] * axes
    p_norm = np.linalg.norm(p, axis=1)
    theta = np.arctan2(p_norm, c)

    # Rows already inside the cap keep their direction bit for bit and only
    # clip the radius, so projecting twice is exactly a no-op there and the
    # alpha = pi cap degenerates to plain L2 ball projection.
    out = np.array(rows, copy=True)
    factor = np.ones_like(norms)
    np.divide(eps, norms, out=factor, where=norms > eps)
    inside = theta <= alphas
    out[inside] *= factor[inside, None]

    rotated = ~inside
    if rotated.any():
        p_hat = np.zeros_like(rows[rotated])
        sub_p, sub_pn = p[rotated], p_norm[rotated]
        ok = sub_pn > _PARALLEL_TOL * norms[rotated]
        p_hat[ok] = sub_p[ok] / sub_pn[ok, None]
        # Antipodal rows (theta = pi with no usable tangential part): every
        # cap boundary point is equidistant, so break the tie by rotating
        # toward the first canonical axis not parallel to u.
        sub_axes = axes[rotated]
        for i in np.nonzero(~ok)[0]:
            p_hat[i] = _first_orthogonal_axis(sub_axes[i])
        phi = alphas[rotated]
        s_hat = np.cos(phi)[:, None] * sub_axes + np.sin(phi)[:, None] * p_hat
        s_hat /= np.linalg.norm(s_hat, axis=1)[:, None]
        out[rotated] = np.minimum(eps, norms[rotated])[:, None] * s_hat
    return out[0] if single else out
