"""Command-line harness: data generation, training, sparsity reports, theory tables.

Subcommands: gen-data, train, advtrain, sparsity, theory, sweep. Every
parameter can come from a JSON config file (--config) or a flag; flags win.
A master --seed is mandatory and all randomness derives from it, so reruns
of the same resolved config are byte-identical, independent of --workers.

Exit codes: 0 success, 2 usage or input errors, 3 numeric or consistency
errors (the latter indicate an implementation bug, not bad input).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

from . import theory as theory_mod
from .attack import AttackConfig, ThreatModel
from .datasets import GENERATORS, generate, load_dataset, save_dataset, split_dataset
from .errors import ConsistencyError, ModelFormatError, NumericError, UsageError
from .estimator import EstimatorConfig, dataset_eval, epsilon_sweep
from .micronet import TrainConfig, adversarial_train, load_model, save_model, train_sgd
from .rng import STREAM_TRIALS, substream

__all__ = ["main"]

_REPORT_VERSION = 1


# ---------------------------------------------------------------------------
# Config resolution
# ---------------------------------------------------------------------------


def _load_config_file(path) -> dict:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise UsageError(f"config file not found: {path}") from None
    except json.JSONDecodeError as e:
        raise UsageError(
            f"config file {path} is not valid JSON: {e.msg} at line {e.lineno}"
        ) from None
    if not isinstance(doc, dict):
        raise UsageError(f"config file {path} must hold a JSON object")
    return doc


def _resolve(args: argparse.Namespace, defaults: dict, required: tuple) -> dict:
    """Merge defaults, config-file values, and flags; flags win.

    Unknown config-file keys and missing required parameters are usage
    errors. Returns the fully resolved parameter dict that reports echo.
    """
    resolved = dict(defaults)
    if getattr(args, "config", None):
        file_cfg = _load_config_file(args.config)
        unknown = sorted(set(file_cfg) - set(defaults))
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(unknown)}")
        resolved.update(file_cfg)
    for key in defaults:
        flag_value = getattr(args, key, None)
        if flag_value is not None:
            resolved[key] = flag_value
    missing = [k for k in required if resolved.get(k) is None]
    if missing:
        raise UsageError(f"missing required parameters: {', '.join(missing)}")
    return resolved


def _int_list(value, name: str) -> list:
    if isinstance(value, str):
        value = [v for v in value.replace(",", " ").split() if v]
    try:
        items = [int(v) for v in value]
    except (TypeError, ValueError):
        raise UsageError(f"{name} must be a list of integers, got {value!r}") from None
    if not items:
        raise UsageError(f"{name} must be nonempty")
    return items


def _float_list(value, name: str) -> list:
    if isinstance(value, str):
        value = [v for v in value.replace(",", " ").split() if v]
    try:
        items = [float(v) for v in value]
    except (TypeError, ValueError):
        raise UsageError(f"{name} must be a list of numbers, got {value!r}") from None
    if not items:
        raise UsageError(f"{name} must be nonempty")
    return items


def _git_blob_hash(path) -> str:
    """Hex digest of the file content, hashed the way git hashes blobs."""
    data = Path(path).read_bytes()
    return hashlib.sha1(b"blob %d\x00" % len(data) + data).hexdigest()


def _write_json(doc: dict, out) -> None:
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _csv_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_table(rows: list, header: list, out) -> None:
    """Rows as CSV, or as JSON when the output path ends in .json."""
    if out is not None and str(out).endswith(".json"):
        _write_json({"rows": rows}, out)
        return
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_csv_cell(row[h]) for h in header))
    text = "\n".join(lines) + "\n"
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


# ---------------------------------------------------------------------------
# Subcommand handlers
# ---------------------------------------------------------------------------

_GEN_DEFAULTS = {
    "generator": None, "n": None, "classes": 2, "size": None,
    "noise": 1.0, "seed": None, "out": None, "test_out": None, "test_size": 0,
}


def _cmd_gen_data(args) -> int:
    cfg = _resolve(args, _GEN_DEFAULTS, required=("generator", "n", "size", "seed", "out"))
    test_size = int(cfg["test_size"])
    if (test_size > 0) != (cfg["test_out"] is not None):
        raise UsageError("--test-out and --test-size must be given together")
    dataset = generate(
        cfg["generator"], int(cfg["n"]), int(cfg["classes"]),
        int(cfg["size"]) + test_size, float(cfg["noise"]), int(cfg["seed"]),
    )
    if test_size:
        train_part, test_part = split_dataset(dataset, int(cfg["size"]))
        save_dataset(train_part, cfg["out"])
        save_dataset(test_part, cfg["test_out"])
        sys.stdout.write(
            f"wrote {cfg['size']} rows to {cfg['out']} "
            f"and {test_size} rows to {cfg['test_out']}\n"
        )
    else:
        save_dataset(dataset, cfg["out"])
        sys.stdout.write(f"wrote {cfg['size']} rows to {cfg['out']}\n")
    return 0


_TRAIN_DEFAULTS = {
    "data": None, "test": None, "hidden": "32", "epochs": 30, "lr": 0.1,
    "batch": 64, "seed": None, "out": None, "norm": "l2", "eps": None,
    "steps": None, "step_size": None,
}


def _train_common(args, adversarial: bool) -> int:
    required = ("data", "seed", "out", "eps")
    cfg = _resolve(args, _TRAIN_DEFAULTS, required=required)
    if cfg["steps"] is None:
        cfg["steps"] = 10 if adversarial else 20
    hidden = tuple(_int_list(cfg["hidden"], "hidden"))
    train_cfg = TrainConfig(
        epochs=int(cfg["epochs"]), lr=float(cfg["lr"]), batch_size=int(cfg["batch"]),
        hidden=hidden, seed=int(cfg["seed"]),
    )
    threat = ThreatModel(cfg["norm"], float(cfg["eps"]))
    attack_cfg = AttackConfig(
        steps=int(cfg["steps"]),
        step_size=None if cfg["step_size"] is None else float(cfg["step_size"]),
    )
    dataset = load_dataset(cfg["data"])
    eval_ds = load_dataset(cfg["test"]) if cfg["test"] else None
    if adversarial:
        result = adversarial_train(dataset, threat, attack_cfg, train_cfg, eval_ds)
    else:
        result = train_sgd(dataset, train_cfg, eval_ds)
    save_model(result.model, cfg["out"])

    # nat/adv accuracy on the held-out set when given, else on the train set
    measure_ds = eval_ds if eval_ds is not None else dataset
    report = dataset_eval(
        result.model, measure_ds, threat,
        EstimatorConfig(directions=1, search_steps=1, attack=attack_cfg, seed=int(cfg["seed"])),
        max_points=0,
    )
    metrics = {
        "format_version": _REPORT_VERSION,
        "command": "advtrain" if adversarial else "train",
        "config": cfg,
        "model_hash": _git_blob_hash(cfg["out"]),
        "train_acc": result.train_accuracy,
        "test_acc": result.eval_accuracy,
        "nat_acc": report.natural_accuracy,
        "adv_acc": report.adversarial_accuracy,
    }
    _write_json(metrics, Path(cfg["out"]).with_suffix(".metrics.json"))
    sys.stdout.write(f"wrote model to {cfg['out']} (nat_acc={report.natural_accuracy:.4f}, "
                     f"adv_acc={report.adversarial_accuracy:.4f})\n")
    return 0


_SPARSITY_DEFAULTS = {
    "model": None, "data": None, "norm": "l2", "eps": None, "steps": 20,
    "step_size": None, "ascent": "sign", "directions": 100, "search_steps": 10,
    "max_points": 100, "workers": 1, "seed": None, "out": None,
}


def _estimator_from_cfg(cfg) -> EstimatorConfig:
    attack_cfg = AttackConfig(
        steps=int(cfg["steps"]),
        step_size=None if cfg["step_size"] is None else float(cfg["step_size"]),
        ascent=cfg["ascent"],
    )
    return EstimatorConfig(
        directions=int(cfg["directions"]), search_steps=int(cfg["search_steps"]),
        attack=attack_cfg, seed=int(cfg["seed"]),
    )


def _cmd_sparsity(args) -> int:
    cfg = _resolve(args, _SPARSITY_DEFAULTS, required=("model", "data", "eps", "seed"))
    model = load_model(cfg["model"])
    dataset = load_dataset(cfg["data"])
    threat = ThreatModel(cfg["norm"], float(cfg["eps"]))
    report = dataset_eval(
        model, dataset, threat, _estimator_from_cfg(cfg),
        max_points=int(cfg["max_points"]), workers=int(cfg["workers"]),
    )
    doc = report.to_dict()
    # workers and the output path steer execution, not results; leaving them
    # out keeps reports byte-identical across --workers and --out choices.
    echoed = {k: v for k, v in cfg.items() if k not in ("workers", "out")}
    doc.update(
        format_version=_REPORT_VERSION,
        command="sparsity",
        config=echoed,
        model_hash=_git_blob_hash(cfg["model"]),
        dataset_hash=_git_blob_hash(cfg["data"]),
    )
    _write_json(doc, cfg["out"])
    return 0


_THEORY_DEFAULTS = {
    "n": None, "k": None, "trials": 10000, "norm": "both", "seed": None, "out": None,
}

_THEORY_HEADER = ["norm", "n", "k", "closed_form", "mc_mean", "mc_stderr", "lower", "upper"]


def _cmd_theory(args) -> int:
    cfg = _resolve(args, _THEORY_DEFAULTS, required=("n", "k", "seed"))
    n_list = _int_list(cfg["n"], "n")
    k_list = _int_list(cfg["k"], "k")
    trials = int(cfg["trials"])
    if cfg["norm"] not in ("l2", "linf", "both"):
        raise UsageError(f"norm must be l2, linf, or both, got {cfg['norm']!r}")
    norms = ("l2", "linf") if cfg["norm"] == "both" else (cfg["norm"],)
    seed = int(cfg["seed"])
    rows = []
    for norm_id, norm in enumerate(norms):
        for i, n in enumerate(n_list):
            for j, k in enumerate(k_list):
                rng = substream(seed, STREAM_TRIALS, norm_id, i, j)
                if norm == "l2":
                    closed = theory_mod.expected_sparsity_l2(n, k)
                    mc_mean, mc_err = theory_mod.mc_oracle_l2(n, k, trials, rng)
                    lower = upper = None
                else:
                    closed = theory_mod.expected_sparsity_linf(n, k)
                    mc_mean, mc_err = theory_mod.mc_oracle_linf(n, k, trials, rng)
                    lower, upper = theory_mod.linf_bounds(n, k)
                    if not (lower <= closed <= upper):
                        raise ConsistencyError(
                            f"closed form {closed} escapes bounds [{lower}, {upper}] "
                            f"for norm=linf, n={n}, k={k}"
                        )
                rows.append(
                    {
                        "norm": norm, "n": n, "k": k, "closed_form": closed,
                        "mc_mean": mc_mean, "mc_stderr": mc_err,
                        "lower": lower, "upper": upper,
                    }
                )
    _write_table(rows, _THEORY_HEADER, cfg["out"])
    return 0


_SWEEP_DEFAULTS = dict(_SPARSITY_DEFAULTS)
del _SWEEP_DEFAULTS["eps"]
_SWEEP_DEFAULTS["eps_list"] = None

_SWEEP_HEADER = ["epsilon", "nat_acc", "adv_acc", "residual_sparsity"]


def _cmd_sweep(args) -> int:
    cfg = _resolve(args, _SWEEP_DEFAULTS, required=("model", "data", "eps_list", "seed"))
    eps_values = _float_list(cfg["eps_list"], "eps_list")
    model = load_model(cfg["model"])
    dataset = load_dataset(cfg["data"])
    rows = epsilon_sweep(
        model, dataset, eps_values, cfg["norm"], _estimator_from_cfg(cfg),
        max_points=int(cfg["max_points"]), workers=int(cfg["workers"]),
    )
    _write_table(rows, _SWEEP_HEADER, cfg["out"])
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="JSON config file; flags override its values")
    sub.add_argument("--seed", type=int, help="master seed (required here or in the config)")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="advsparse",
        description="Directional adversarial sparsity: attacks, estimators, and theory tables.",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("gen-data", help="generate a synthetic dataset CSV + sidecar")
    _add_common(p)
    p.add_argument("--generator", choices=sorted(GENERATORS))
    p.add_argument("--n", type=int, help="feature dimension")
    p.add_argument("--classes", type=int)
    p.add_argument("--size", type=int, help="number of rows")
    p.add_argument("--noise", type=float)
    p.add_argument("--out", help="output CSV path")
    p.add_argument("--test-out", dest="test_out", help="held-out CSV drawn from the same sample")
    p.add_argument("--test-size", dest="test_size", type=int, help="rows for --test-out")
    p.set_defaults(handler=_cmd_gen_data)

    for name, adversarial in (("train", False), ("advtrain", True)):
        p = subs.add_parser(
            name,
            help="train a classifier" if not adversarial
            else "train with attacked mini-batches",
        )
        _add_common(p)
        p.add_argument("--data", help="training CSV")
        p.add_argument("--test", help="held-out CSV for reported accuracy")
        p.add_argument("--hidden", help="comma-separated hidden widths, e.g. 32,32")
        p.add_argument("--epochs", type=int)
        p.add_argument("--lr", type=float)
        p.add_argument("--batch", type=int)
        p.add_argument("--norm", choices=("l2", "linf"))
        p.add_argument("--eps", type=float, help="attack budget (training and/or metrics)")
        p.add_argument("--steps", type=int, help="attack steps")
        p.add_argument("--step-size", dest="step_size", type=float)
        p.add_argument("--out", help="output model JSON path")
        p.set_defaults(handler=_train_common, adversarial=adversarial)

    p = subs.add_parser("sparsity", help="sparsity report for a model over a dataset")
    _add_common(p)
    p.add_argument("--model")
    p.add_argument("--data")
    p.add_argument("--norm", choices=("l2", "linf"))
    p.add_argument("--eps", type=float)
    p.add_argument("--steps", type=int, help="attack steps per bisection probe")
    p.add_argument("--step-size", dest="step_size", type=float)
    p.add_argument("--ascent", choices=("sign", "normalized"))
    p.add_argument("--directions", type=int, help="directions per point")
    p.add_argument("--search-steps", dest="search_steps", type=int, help="bisection depth")
    p.add_argument("--max-points", dest="max_points", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--out", help="report JSON path (stdout when omitted)")
    p.set_defaults(handler=_cmd_sparsity)

    p = subs.add_parser("theory", help="closed forms, bounds, and Monte-Carlo cross-checks")
    _add_common(p)
    p.add_argument("--n", help="comma-separated dimensions")
    p.add_argument("--k", help="comma-separated set sizes")
    p.add_argument("--trials", type=int)
    p.add_argument("--norm", choices=("l2", "linf", "both"))
    p.add_argument("--out", help="table path: .json for JSON, else CSV (stdout when omitted)")
    p.set_defaults(handler=_cmd_theory)

    p = subs.add_parser("sweep", help="sparsity report across an increasing eps grid")
    _add_common(p)
    p.add_argument("--model")
    p.add_argument("--data")
    p.add_argument("--norm", choices=("l2", "linf"))
    p.add_argument("--eps-list", dest="eps_list", help="comma-separated increasing budgets")
    p.add_argument("--steps", type=int)
    p.add_argument("--step-size", dest="step_size", type=float)
    p.add_argument("--ascent", choices=("sign", "normalized"))
    p.add_argument("--directions", type=int)
    p.add_argument("--search-steps", dest="search_steps", type=int)
    p.add_argument("--max-points", dest="max_points", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--out", help="curve CSV path (stdout when omitted)")
    p.set_defaults(handler=_cmd_sweep)

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.handler is _train_common:
            return _train_common(args, args.adversarial)
        return args.handler(args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (ModelFormatError, FileNotFoundError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (NumericError, ConsistencyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
