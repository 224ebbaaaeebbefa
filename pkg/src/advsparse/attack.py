"""Projected gradient ascent attacks, unconstrained and direction-constrained.

Three variants share one ascent loop: classic norm-ball PGD, PGD restricted
to a spherical cap around a given direction (L2), and PGD over cube
vertices where only the first m coordinates of a permutation may move
(Linf). The constrained variants accept a batch of constraints against a
single input, one row per direction, so a binary search over many
directions advances in lockstep with batched model evaluations.

All loops are deterministic: there is no random initialization, so results
depend only on the model, input, constraint, and configuration.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .errors import AttackError
from .geometry import project_to_cap
from .micronet import MicroNet, loss_and_input_grad, predict

__all__ = [
    "ThreatModel",
    "AttackConfig",
    "AttackResult",
    "resolve_step_size",
    "pgd",
    "pgd_cap",
    "pgd_vertex",
]

_NORMS = ("l2", "linf")


@dataclass(frozen=True)
class ThreatModel:
    """Perturbation budget: norm in {"l2", "linf"} and radius eps.

    eps == 0 is permitted as the degenerate no-perturbation budget (useful
    for reducing adversarial training to plain training); eps must not be
    negative.
    """

    norm: str
    eps: float

    def __post_init__(self):
        if self.norm not in _NORMS:
            raise ValueError(f"norm must be one of {_NORMS}, got {self.norm!r}")
        if not self.eps >= 0.0:
            raise ValueError(f"eps must be >= 0, got {self.eps!r}")
        object.__setattr__(self, "eps", float(self.eps))


@dataclass(frozen=True)
class AttackConfig:
    """Ascent loop settings.

    step_size None resolves per threat: 2.5*eps/steps for L2 and eps/4 for
    Linf. ascent "sign" moves by the gradient sign pattern; "normalized"
    moves along the unit gradient (useful when the exact ascent direction
    matters, e.g. against linear models). success_reference chooses the
    class the final prediction is compared against: the given label, or
    the model's own clean prediction.
    """

    steps: int = 20
    step_size: Optional[float] = None
    ascent: str = "sign"
    success_reference: str = "label"
    seed: Optional[int] = None

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError(f"steps must be >= 1, got {self.steps}")
        if self.step_size is not None and not self.step_size >= 0.0:
            raise ValueError(f"step_size must be >= 0, got {self.step_size!r}")
        if self.ascent not in ("sign", "normalized"):
            raise ValueError(f"ascent must be 'sign' or 'normalized', got {self.ascent!r}")
        if self.success_reference not in ("label", "prediction"):
            raise ValueError(
                f"success_reference must be 'label' or 'prediction', got "
                f"{self.success_reference!r}"
            )


class AttackResult(NamedTuple):
    delta: np.ndarray
    success: np.ndarray


def resolve_step_size(config: AttackConfig, threat: ThreatModel) -> float:
    if config.step_size is not None:
        return float(config.step_size)
    if threat.norm == "l2":
        return 2.5 * threat.eps / config.steps
    return threat.eps / 4.0


def _reference_classes(model, X, y, config) -> np.ndarray:
    if config.success_reference == "prediction":
        return np.atleast_1d(predict(model, X))
    ref = np.asarray(y)
    if ref.ndim == 0:
        ref = np.full(X.shape[0], int(ref))
    return ref.astype(int)


def _ascent_direction(grad: np.ndarray, config: AttackConfig) -> np.ndarray:
    if not np.isfinite(grad).all():
        raise AttackError("non-finite gradient during attack")
    if config.ascent == "sign":
        return np.sign(grad)
    norms = np.linalg.norm(grad, axis=1, keepdims=True)
    return np.divide(grad, norms, out=np.zeros_like(grad), where=norms > 0.0)


def _project_ball(delta: np.ndarray, threat: ThreatModel) -> np.ndarray:
    if threat.norm == "linf":
        return np.clip(delta, -threat.eps, threat.eps)
    norms = np.linalg.norm(delta, axis=1, keepdims=True)
    factor = np.ones_like(norms)
    np.divide(threat.eps, norms, out=factor, where=norms > threat.eps)
    return delta * factor


def pgd(model: MicroNet, x, y, threat: ThreatModel, config: AttackConfig) -> AttackResult:
    """Norm-ball PGD from delta = 0.

    Each step ascends the cross-entropy toward misclassifying the reference
    class, then projects back into the eps-ball (clip for Linf, radial
    rescale for L2). Success means the final prediction differs from the
    reference. Accepts a single vector or a batch of rows with labels.
    """
    X, single = _atleast_rows(x)
    ref = _reference_classes(model, X, y, config)
    eta = resolve_step_size(config, threat)
    delta = np.zeros_like(X)
    for _ in range(config.steps):
        _, grad = loss_and_input_grad(model, X + delta, ref)
        grad = np.atleast_2d(grad)
        delta = _project_ball(delta + eta * _ascent_direction(grad, config), threat)
    success = np.atleast_1d(predict(model, X + delta)) != ref
    return AttackResult(delta[0], bool(success[0])) if single else AttackResult(delta, success)


def _atleast_rows(x) -> tuple[np.ndarray, bool]:
    arr = np.asarray(x, dtype=float)
    if not np.isfinite(arr).all():
        raise AttackError("non-finite attack input")
    if arr.ndim == 1:
        return arr[None, :], True
    return arr, False


def pgd_cap(
    model: MicroNet,
    x,
    y,
    u,
    alpha,
    threat: ThreatModel,
    config: AttackConfig,
    init_delta=None,
) -> AttackResult:
    """PGD restricted to the spherical cap of half-angle alpha around u (L2).

    One input x, one or many cap axes: u may be a single unit vector or a
    matrix of rows with a matching alpha per row. After every ascent step
    the iterate is projected onto the cap at radius min(eps, ||delta||),
    so the final perturbation satisfies ||delta|| <= eps and
    angle(delta, u) <= alpha. alpha = pi makes the cap the whole sphere and
    reproduces unconstrained L2 PGD exactly. init_delta warm-starts the
    loop (it is projected before use).
    """
    if threat.norm != "l2":
        raise ValueError("pgd_cap requires an l2 threat model")
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("pgd_cap attacks a single input vector")
    if not np.isfinite(x).all():
        raise AttackError("non-finite attack input")
    axes = np.asarray(u, dtype=float)
    single = axes.ndim == 1
    axes = np.atleast_2d(axes)
    alphas = np.broadcast_to(np.asarray(alpha, dtype=float), (axes.shape[0],))

    ref_class = _reference_classes(model, x[None, :], y, config)[0]
    ref = np.full(axes.shape[0], ref_class)
    eta = resolve_step_size(config, threat)

    if init_delta is None:
        delta = np.zeros_like(axes)
    else:
        delta = np.array(np.atleast_2d(np.asarray(init_delta, dtype=float)), copy=True)
        delta = _cap_project_nonzero(delta, axes, alphas, threat.eps)
    for _ in range(config.steps):
        _, grad = loss_and_input_grad(model, x[None, :] + delta, ref)
        delta = delta + eta * _ascent_direction(np.atleast_2d(grad), config)
        delta = _cap_project_nonzero(delta, axes, alphas, threat.eps)
    success = np.atleast_1d(predict(model, x[None, :] + delta)) != ref
    return AttackResult(delta[0], bool(success[0])) if single else AttackResult(delta, success)


def _cap_project_nonzero(delta, axes, alphas, eps) -> np.ndarray:
    """Project rows onto their caps; all-zero rows (no gradient yet) stay zero."""
    nonzero = np.linalg.norm(delta, axis=1) > 0.0
    if nonzero.all():
        return project_to_cap(delta, axes, alphas, eps)
    out = np.zeros_like(delta)
    if nonzero.any():
        out[nonzero] = project_to_cap(delta[nonzero], axes[nonzero], alphas[nonzero], eps)
    return out


def pgd_vertex(
    model: MicroNet,
    x,
    y,
    signs,
    perm,
    m,
    threat: ThreatModel,
    config: AttackConfig,
    init_delta=None,
) -> AttackResult:
    """PGD over the Linf ball where only m permuted coordinates are free.

    Starts from the vertex eps*signs. Coordinates at permutation positions
    >= m are pinned to eps*signs exactly at every step; the free
    coordinates follow sign (or normalized) ascent clipped to [-eps, eps].
    m = 0 freezes everything (the attack just evaluates the vertex);
    m = n is unconstrained Linf PGD started at the vertex. signs/perm may
    be single vectors or row batches with one m per row.
    """
    if threat.norm != "linf":
        raise ValueError("pgd_vertex requires an linf threat model")
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("pgd_vertex attacks a single input vector")
    if not np.isfinite(x).all():
        raise AttackError("non-finite attack input")
    signs_arr = np.asarray(signs, dtype=float)
    single = signs_arr.ndim == 1
    signs_arr = np.atleast_2d(signs_arr)
    perms = np.atleast_2d(np.asarray(perm, dtype=int))
    if perms.shape != signs_arr.shape:
        perms = np.broadcast_to(perms, signs_arr.shape)
    n = signs_arr.shape[1]
    if np.any(np.abs(signs_arr) != 1.0):
        raise ValueError("signs must have entries exactly +-1")
    ms = np.broadcast_to(np.asarray(m, dtype=int), (signs_arr.shape[0],))
    if np.any(ms < 0) or np.any(ms > n):
        raise ValueError(f"m must lie in [0, {n}]")

    # rank[i, j] = position of coordinate j in permutation i; free iff rank < m.
    ranks = np.argsort(perms, axis=1)
    free = ranks < ms[:, None]

    vertex = threat.eps * signs_arr
    if init_delta is None:
        delta = vertex.copy()
    else:
        delta = np.array(np.atleast_2d(np.asarray(init_delta, dtype=float)), copy=True)
        delta = np.where(free, np.clip(delta, -threat.eps, threat.eps), vertex)

    ref_class = _reference_classes(model, x[None, :], y, config)[0]
    ref = np.full(signs_arr.shape[0], ref_class)
    eta = resolve_step_size(config, threat)
    for _ in range(config.steps):
        _, grad = loss_and_input_grad(model, x[None, :] + delta, ref)
        step = delta + eta * _ascent_direction(np.atleast_2d(grad), config)
        delta = np.where(free, np.clip(step, -threat.eps, threat.eps), vertex)
    success = np.atleast_1d(predict(model, x[None, :] + delta)) != ref
    return AttackResult(delta[0], bool(success[0])) if single else AttackResult(delta, success)
