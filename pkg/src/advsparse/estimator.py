"""Binary-search estimation of directional adversarial sparsity.

For one input and one direction, the sparsity is the smallest constraint
size whose direction-constrained attack still succeeds: a cap half-angle
for L2 (bisection on [0, pi], final bracket width pi * 2**-K) and a free
coordinate count for Linf (integer bisection on {0..n}, exact). A point's
sparsity is the mean over sampled directions; a dataset report aggregates
natural accuracy, adversarial accuracy, and the residual sparsity over the
vulnerable points.

All directions of a point are searched in lockstep as one attack batch,
which both matches the batched-evaluation setup and keeps results
independent of worker count: parallelism only ever splits across points.
Direction j of point i is always drawn from the same derived stream, so
reported values do not depend on how many directions or points are
evaluated alongside.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .attack import AttackConfig, ThreatModel, pgd, pgd_cap, pgd_vertex
from .errors import RobustPointError
from .geometry import sample_uniform_sphere, sample_vertex_and_permutation
from .micronet import MicroNet, evaluate_accuracy
from .rng import STREAM_DIRECTIONS, substream

__all__ = [
    "EstimatorConfig",
    "SparsityRecord",
    "PointSparsity",
    "DatasetReport",
    "direction_sparsity_l2",
    "direction_sparsity_linf",
    "point_sparsity",
    "dataset_eval",
    "epsilon_sweep",
]

#: Sparsity reported for points the unconstrained attack cannot break:
#: the largest possible value, pi/2 being the expected angle between two
#: uniform directions (Linf uses the input dimension n instead).
ROBUST_DEFAULT_L2 = math.pi / 2.0


@dataclass(frozen=True)
class EstimatorConfig:
    """Search settings: direction count N, bisection depth K, inner attack."""

    directions: int = 100
    search_steps: int = 10
    attack: AttackConfig = field(default_factory=AttackConfig)
    seed: int = 0
    warm_start: bool = False

    def __post_init__(self):
        if self.directions < 1:
            raise ValueError(f"directions must be >= 1, got {self.directions}")
        if self.search_steps < 1:
            raise ValueError(f"search_steps must be >= 1, got {self.search_steps}")


@dataclass(frozen=True)
class SparsityRecord:
    """One (point, direction) measurement. L2 values are angles in [0, pi];
    Linf values are integer coordinate counts in [0, n]."""

    point_id: int
    direction: int
    value: float
    robust: bool


@dataclass(frozen=True)
class PointSparsity:
    """Mean sparsity of one point; robust points carry the default value
    and no per-direction records."""

    point_id: int
    value: float
    robust: bool
    records: tuple


@dataclass
class DatasetReport:
    natural_accuracy: float
    adversarial_accuracy: float
    residual_sparsity: Optional[float]
    points: list
    config: dict

    def to_dict(self) -> dict:
        return {
            "natural_accuracy": self.natural_accuracy,
            "adversarial_accuracy": self.adversarial_accuracy,
            "residual_sparsity": self.residual_sparsity,
            "points": [
                {
                    "point_id": p.point_id,
                    "value": p.value,
                    "robust": p.robust,
                    "directions": len(p.records),
                }
                for p in self.points
            ],
            "config": dict(self.config),
        }


def _require_vulnerable(model, x, y, threat, config) -> None:
    if not pgd(model, x, y, threat, config.attack).success:
        raise RobustPointError(
            "unconstrained attack failed; the point is robust within eps"
        )


def _search_l2(
    model: MicroNet, x, y, axes: np.ndarray, threat: ThreatModel, config: EstimatorConfig
) -> np.ndarray:
    """Lockstep bisection over cap half-angles, one row per direction.

    Bracket invariant per row: the attack failed at lo (or lo is the
    initial 0) and succeeded at hi (or hi is the initial pi). Returns the
    final bracket midpoints; the bracket width is exactly pi * 2**-K.
    """
    count = axes.shape[0]
    lo = np.zeros(count)
    hi = np.full(count, math.pi)
    warm = np.zeros_like(axes) if config.warm_start else None
    for _ in range(config.search_steps):
        mid = 0.5 * (lo + hi)
        result = pgd_cap(model, x, y, axes, mid, threat, config.attack, init_delta=warm)
        hi = np.where(result.success, mid, hi)
        lo = np.where(result.success, lo, mid)
        if warm is not None:
            warm[result.success] = result.delta[result.success]
    return 0.5 * (lo + hi)


def _search_linf(
    model: MicroNet,
    x,
    y,
    signs: np.ndarray,
    perms: np.ndarray,
    threat: ThreatModel,
    config: EstimatorConfig,
) -> np.ndarray:
    """Lockstep integer bisection over free-coordinate counts.

    Per row: try m = 0 (misclassifies outright -> 0), then m = n to anchor
    the bracket (failure even with full freedom -> n), then bisect keeping
    failure at lo and success at hi. Terminates with an exact integer.
    """
    count, n = signs.shape
    attack = config.attack

    res_zero = pgd_vertex(model, x, y, signs, perms, np.zeros(count, dtype=int), threat, attack)
    res_full = pgd_vertex(model, x, y, signs, perms, np.full(count, n), threat, attack)
    out = np.full(count, -1)
    out[res_zero.success] = 0
    out[~res_zero.success & ~res_full.success] = n

    lo = np.zeros(count, dtype=int)
    hi = np.full(count, n, dtype=int)
    warm = threat.eps * signs if config.warm_start else None
    if warm is not None:
        warm = np.where(res_full.success[:, None], res_full.delta, warm)
    active = out < 0
    while np.any(active & (hi - lo > 1)):
        mid = (lo + hi) // 2
        result = pgd_vertex(model, x, y, signs, perms, mid, threat, attack, init_delta=warm)
        update = active & (hi - lo > 1)
        hi = np.where(update & result.success, mid, hi)
        lo = np.where(update & ~result.success, mid, lo)
        if warm is not None:
            take = (update & result.success)[:, None]
            warm = np.where(take, result.delta, warm)
    out[active] = hi[active]
    return out


def direction_sparsity_l2(
    model: MicroNet, x, y, u, threat: ThreatModel, config: EstimatorConfig
) -> float:
    """Smallest cap half-angle around u containing a successful perturbation.

    Checks vulnerability with the unconstrained attack first and raises
    RobustPointError if it fails. The result is the midpoint of the final
    bisection bracket, so it is within pi * 2**-(K+1) of the bracketed
    threshold.
    """
    if threat.norm != "l2":
        raise ValueError("direction_sparsity_l2 requires an l2 threat model")
    _require_vulnerable(model, x, y, threat, config)
    axes = np.atleast_2d(np.asarray(u, dtype=float))
    return float(_search_l2(model, x, y, axes, threat, config)[0])


def direction_sparsity_linf(
    model: MicroNet, x, y, signs, perm, threat: ThreatModel, config: EstimatorConfig
) -> int:
    """Smallest free-coordinate count (in perm order, starting from the
    vertex eps*signs) whose constrained attack succeeds.

    Checks vulnerability with the unconstrained attack first and raises
    RobustPointError if it fails. Returns n when even full freedom fails
    from this vertex start.
    """
    if threat.norm != "linf":
        raise ValueError("direction_sparsity_linf requires an linf threat model")
    _require_vulnerable(model, x, y, threat, config)
    signs_arr = np.atleast_2d(np.asarray(signs))
    perms = np.atleast_2d(np.asarray(perm, dtype=int))
    return int(_search_linf(model, x, y, signs_arr, perms, threat, config)[0])


def _sample_directions(n: int, norm: str, config: EstimatorConfig, point_id: int):
    if norm == "l2":
        axes = np.stack(
            [
                sample_uniform_sphere(n, substream(config.seed, STREAM_DIRECTIONS, point_id, j))
                for j in range(config.directions)
            ]
        )
        return axes, None
    pairs = [
        sample_vertex_and_permutation(n, substream(config.seed, STREAM_DIRECTIONS, point_id, j))
        for j in range(config.directions)
    ]
    signs = np.stack([s for s, _ in pairs]).astype(float)
    perms = np.stack([p for _, p in pairs])
    return signs, perms


def point_sparsity(
    model: MicroNet,
    x,
    y,
    threat: ThreatModel,
    config: EstimatorConfig,
    point_id: int = 0,
    assume_vulnerable: bool = False,
) -> PointSparsity:
    """Mean sparsity of one input over N sampled directions.

    If the unconstrained attack fails, the point is robust and the default
    value is reported instead (pi/2 for L2, n for Linf) with no records.
    Directions are drawn from streams keyed by (seed, point_id, j), so
    direction j is the same no matter how many others are evaluated.
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    if not assume_vulnerable and not pgd(model, x, y, threat, config.attack).success:
        default = ROBUST_DEFAULT_L2 if threat.norm == "l2" else float(n)
        return PointSparsity(point_id, default, True, ())
    if threat.norm == "l2":
        axes, _ = _sample_directions(n, "l2", config, point_id)
        values = _search_l2(model, x, y, axes, threat, config)
    else:
        signs, perms = _sample_directions(n, "linf", config, point_id)
        values = _search_linf(model, x, y, signs, perms, threat, config)
    records = tuple(
        SparsityRecord(point_id, j, float(v), False) for j, v in enumerate(values)
    )
    return PointSparsity(point_id, float(np.mean(values)), False, records)


def _echo_config(threat, config, max_points) -> dict:
    # Everything that determines the numbers, and nothing that does not:
    # the worker count is deliberately absent so reports from different
    # --workers settings compare byte for byte.
    return {
        "norm": threat.norm,
        "eps": threat.eps,
        "directions": config.directions,
        "search_steps": config.search_steps,
        "attack_steps": config.attack.steps,
        "step_size": config.attack.step_size,
        "ascent": config.attack.ascent,
        "success_reference": config.attack.success_reference,
        "warm_start": config.warm_start,
        "seed": config.seed,
        "max_points": max_points,
    }


def dataset_eval(
    model: MicroNet,
    dataset,
    threat: ThreatModel,
    config: EstimatorConfig,
    max_points: int = 100,
    workers: int = 1,
) -> DatasetReport:
    """Accuracy and residual sparsity of a model over a dataset.

    Natural accuracy is computed over all rows; adversarial accuracy is the
    fraction surviving the unconstrained attack (evaluated as one batch).
    Sparsity is then averaged over the first max_points vulnerable inputs,
    split across `workers` threads; per-point results are deterministic and
    independent of the worker count. With no vulnerable points the residual
    sparsity is reported as absent (None).
    """
    if max_points < 0:
        raise ValueError(f"max_points must be >= 0, got {max_points}")
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")
    X = np.asarray(dataset.X, dtype=float)
    y = np.asarray(dataset.y, dtype=int)
    natural = evaluate_accuracy(model, X, y)
    attack_result = pgd(model, X, y, threat, config.attack)
    adversarial = float(1.0 - np.mean(attack_result.success))
    vulnerable = np.nonzero(attack_result.success)[0][:max_points]

    def one_point(i: int) -> PointSparsity:
        return point_sparsity(
            model, X[i], int(y[i]), threat, config, point_id=int(i), assume_vulnerable=True
        )

    if len(vulnerable) == 0:
        points = []
    elif workers == 1:
        points = [one_point(int(i)) for i in vulnerable]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            points = list(pool.map(one_point, [int(i) for i in vulnerable]))

    residual = float(np.mean([p.value for p in points])) if points else None
    return DatasetReport(
        natural_accuracy=natural,
        adversarial_accuracy=adversarial,
        residual_sparsity=residual,
        points=points,
        config=_echo_config(threat, config, max_points),
    )


def epsilon_sweep(
    model: MicroNet,
    dataset,
    eps_list,
    norm: str,
    config: EstimatorConfig,
    max_points: int = 100,
    workers: int = 1,
) -> list:
    """dataset_eval at each eps of a strictly increasing positive grid.

    Returns one row per eps: {epsilon, nat_acc, adv_acc, residual_sparsity}
    (residual None when no point is vulnerable at that eps).
    """
    eps_values = [float(e) for e in eps_list]
    if not eps_values or any(e <= 0.0 for e in eps_values):
        raise ValueError("eps_list must be nonempty and positive")
    if any(b <= a for a, b in zip(eps_values, eps_values[1:])):
        raise ValueError("eps_list must be strictly increasing")
    rows = []
    for eps in eps_values:
        report = dataset_eval(
            model, dataset, ThreatModel(norm, eps), config, max_points=max_points, workers=workers
        )
        rows.append(
            {
                "epsilon": eps,
                "nat_acc": report.natural_accuracy,
                "adv_acc": report.adversarial_accuracy,
                "residual_sparsity": report.residual_sparsity,
            }
        )
    return rows
