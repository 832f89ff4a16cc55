"""Batch front-end: expand | verify | simulate | report | fuzz.

Every command reads one JSON config (flags override keys), writes its results
plus the fully resolved config into the output directory, and is bit-for-bit
reproducible from (config, seed).  Exit codes: 0 pass, 1 contract violation,
2 usage/config error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import jsonschema
import numpy as np

from . import fuzzing
from .chaos import expand_product, moment_oracle, wick_eval_batch
from .kernels import (
    GridSpec,
    HermiteKernelSpec,
    KernelDiscretization,
    coupling_scaling_report,
    lower_scaling_report,
    overlap_scaling_report,
    truncation_report,
    upper_scaling_report,
)
from .regularity import (
    PathSample,
    dyadic_besov_seminorm,
    modulus_holder_statistic,
    moment_growth_report,
    scaling_exponent_fit,
)
from .simulate import default_workers, provenance_tag, sample_paths
from .tensors import SymTensor, symmetrize, tensor_product

KERNEL_SCHEMA = {
    "type": "object",
    "properties": {
        "type": {"enum": ["fbm", "hermite", "custom", "zero"]},
        "order": {"type": "integer", "minimum": 1},
        "alpha": {"type": "number"},
        "beta1": {"type": "number"},
        "beta2": {"type": "number"},
        "horizon": {"type": "number", "exclusiveMinimum": 0},
        "scale": {"type": ["number", "null"]},
    },
    "required": ["type"],
    "additionalProperties": False,
}

GRID_SCHEMA = {
    "type": "object",
    "properties": {
        "steps": {"type": "integer", "minimum": 1},
        "left_units": {"type": "number", "exclusiveMinimum": 0},
        "left": {"type": "number", "exclusiveMinimum": 0},
        "cells": {"type": "integer", "minimum": 2},
        "node_budget": {"type": "integer", "minimum": 1000},
    },
    "required": ["steps"],
    "additionalProperties": False,
}

CONFIG_SCHEMAS = {
    "expand": {
        "type": "object",
        "properties": {
            "tensors": {"type": "string"},
            "fixture": {"enum": ["counterexample", "first-order-product"]},
            "seed": {"type": "integer"},
            "pointwise_seeds": {"type": "integer", "minimum": 1},
            "tolerance": {"type": "number", "exclusiveMinimum": 0},
        },
        "additionalProperties": False,
    },
    "verify": {
        "type": "object",
        "properties": {
            "kernel": KERNEL_SCHEMA,
            "grid": GRID_SCHEMA,
            "upper_levels": {"type": "array", "items": {"type": "integer"}},
            "coupling_levels": {"type": "array", "items": {"type": "integer"}},
            "overlap_levels": {"type": "array", "items": {"type": "integer"}},
            "drift_tolerance": {"type": "number", "exclusiveMinimum": 0},
            "skip_refinement": {"type": "boolean"},
            "truncation_probe": {"type": "boolean"},
        },
        "required": ["kernel", "grid"],
        "additionalProperties": False,
    },
    "simulate": {
        "type": "object",
        "properties": {
            "kernel": KERNEL_SCHEMA,
            "grid": GRID_SCHEMA,
            "paths": {"type": "integer", "minimum": 1},
            "seed": {"type": "integer"},
            "first_stream": {"type": "integer", "minimum": 0},
        },
        "required": ["kernel", "grid", "paths"],
        "additionalProperties": False,
    },
    "report": {
        "type": "object",
        "properties": {
            "paths_dir": {"type": "string"},
            "simulate": {"type": "object"},
            "slope": {
                "type": "object",
                "properties": {
                    "p": {"type": "number", "minimum": 1},
                    "levels": {"type": "array", "items": {"type": "integer"}},
                    "expected_alpha": {"type": "number"},
                    "tolerance": {"type": "number", "exclusiveMinimum": 0},
                },
                "required": ["p", "levels"],
                "additionalProperties": False,
            },
            "besov": {
                "type": "object",
                "properties": {
                    "smoothness": {"type": "number"},
                    "p": {"type": "number"},
                    "orlicz_beta": {"type": "number"},
                },
                "required": ["smoothness"],
                "additionalProperties": False,
            },
            "moment_growth": {
                "type": "object",
                "properties": {
                    "alpha": {"type": "number"},
                    "exponents": {"type": "array", "items": {"type": "number"}},
                    "levels": {"type": "array", "items": {"type": "integer"}},
                    "ells": {"type": "array", "items": {"type": "number"}},
                },
                "required": ["alpha", "exponents"],
                "additionalProperties": False,
            },
            "modulus": {
                "type": "object",
                "properties": {
                    "alpha": {"type": "number"},
                    "log_exponent": {"type": "number"},
                    "subsample_factors": {"type": "array", "items": {"type": "integer"}},
                    "growth_tolerance": {"type": "number"},
                },
                "required": ["alpha", "log_exponent"],
                "additionalProperties": False,
            },
        },
        "additionalProperties": False,
    },
    "fuzz": {
        "type": "object",
        "properties": {
            "seed": {"type": "integer"},
            "equivalence_instances": {"type": "integer", "minimum": 0},
            "inequality_instances": {"type": "integer", "minimum": 0},
            "pointwise_seeds": {"type": "integer", "minimum": 1},
            "max_blocks": {"type": "integer", "minimum": 2},
            "max_order": {"type": "integer", "minimum": 1},
            "max_dim": {"type": "integer", "minimum": 2},
            "max_total": {"type": "integer", "minimum": 2},
            "tolerance": {"type": "number", "exclusiveMinimum": 0},
            "slack_tolerance": {"type": "number", "exclusiveMinimum": 0},
        },
        "additionalProperties": False,
    },
}


class ConfigError(Exception):
    pass


def make_spec(cfg):
    kind = cfg["type"]
    horizon = cfg.get("horizon", 1.0)
    scale = cfg.get("scale")
    if kind == "fbm":
        if "alpha" not in cfg:
            raise ConfigError("fbm kernel needs alpha")
        return HermiteKernelSpec.fbm(cfg["alpha"], beta2=cfg.get("beta2"), horizon=horizon, scale=scale)
    if kind == "hermite":
        if "alpha" not in cfg or "order" not in cfg:
            raise ConfigError("hermite kernel needs order and alpha")
        return HermiteKernelSpec.hermite(cfg["order"], cfg["alpha"], horizon=horizon, scale=scale)
    if kind == "zero":
        base = dict(cfg)
        base["type"] = "fbm" if cfg.get("order", 1) == 1 else "hermite"
        base.setdefault("alpha", 0.5 if base["type"] == "fbm" else 0.7)
        base["scale"] = 0.0
        return make_spec(base)
    return HermiteKernelSpec(
        order=cfg["order"], beta1=cfg["beta1"], beta2=cfg["beta2"], horizon=horizon, scale=scale
    )


def make_grid(cfg, spec):
    if "cells" in cfg and "left" in cfg:
        return GridSpec(left=cfg["left"], cells=cfg["cells"], steps=cfg["steps"])
    kwargs = {}
    if "left_units" in cfg:
        kwargs["left_units"] = cfg["left_units"]
    if "node_budget" in cfg:
        kwargs["node_budget"] = cfg["node_budget"]
    return GridSpec.build(spec, steps=cfg["steps"], **kwargs)


def _fmt(x):
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def write_csv(path, header, rows):
    with open(path, "w", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(x) for x in row])


def write_json(path, obj):
    with open(path, "w", newline="\n") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _dump_resolved(out_dir, command, cfg):
    write_json(out_dir / "resolved_config.json", {"command": command, "config": cfg})


# -- expand --------------------------------------------------------------------


def _counterexample_report():
    """Chaos-2 pair with zero correlation but fourth-moment covariance 4."""
    e1 = np.array([1.0, 0.0])
    e2 = np.array([0.0, 1.0])
    h_xi = SymTensor(np.outer(e1, e1) / math.sqrt(2.0), symmetric=True)
    h_eta = symmetrize(tensor_product(SymTensor(e1), SymTensor(e2)))
    cross = moment_oracle([h_xi, h_eta])
    var_xi = moment_oracle([h_xi, h_xi])
    var_eta = moment_oracle([h_eta, h_eta])
    fourth = (
        moment_oracle([h_xi, h_xi, h_eta, h_eta])
        - moment_oracle([h_xi, h_xi])
        - moment_oracle([h_eta, h_eta])
        + 1.0
    )
    rho = cross / math.sqrt(var_xi * var_eta)
    return {
        "rho": rho,
        "cross_moment": cross,
        "var_xi": var_xi,
        "var_eta": var_eta,
        "fourth_moment_covariance": fourth,
        "passed": bool(abs(cross) < 1e-12 and abs(fourth - 4.0) <= 4.0 * 1e-10),
    }


def cmd_expand(cfg, out_dir):
    tol = cfg.get("tolerance", 1e-9)
    if cfg.get("fixture") == "counterexample":
        report = _counterexample_report()
        write_json(out_dir / "expand_report.json", report)
        return 0 if report["passed"] else 1
    if cfg.get("fixture") == "first-order-product":
        tensors = [SymTensor(np.array([1.0, 0.0])), SymTensor(np.array([0.0, 1.0]))]
    elif "tensors" in cfg:
        with open(cfg["tensors"]) as fh:
            tensors = [SymTensor.from_dict(obj) for obj in json.load(fh)]
    else:
        raise ConfigError("expand needs 'tensors' or 'fixture'")
    expansion = expand_product(tensors)
    oracle = moment_oracle(tensors)
    seeds = cfg.get("pointwise_seeds", 100)
    rng_seed = cfg.get("seed", 0)
    from .chaos import philox_stream

    xis = philox_stream(rng_seed).standard_normal((seeds, tensors[0].dim))
    product = np.ones(seeds)
    for t in tensors:
        product *= wick_eval_batch(t, xis)
    pointwise = float(np.max(np.abs(product - expansion.evaluate_batch(xis))))
    rel_gap = abs(expansion.degree0() - oracle) / max(1.0, abs(oracle))
    report = {
        "degrees": sorted(expansion.terms),
        "degree0": expansion.degree0(),
        "oracle": oracle,
        "relative_gap": rel_gap,
        "pointwise_max_error": pointwise,
        "pointwise_seeds": seeds,
        "seed": rng_seed,
        "tolerance": tol,
        "passed": bool(rel_gap <= tol and pointwise <= tol),
    }
    write_json(out_dir / "expansion.json", expansion.to_dict())
    write_json(out_dir / "expand_report.json", report)
    return 0 if report["passed"] else 1


# -- verify --------------------------------------------------------------------


def cmd_verify(cfg, out_dir):
    spec = make_spec(cfg["kernel"])
    grid = make_grid(cfg["grid"], spec)
    kd = KernelDiscretization(spec, grid)
    refined = None if cfg.get("skip_refinement") else kd.refined(2)
    upper = upper_scaling_report(
        kd,
        levels=cfg.get("upper_levels", list(range(1, 8))),
        refined=refined,
        drift_tol=cfg.get("drift_tolerance", 0.10),
    )
    lower = lower_scaling_report(kd)
    degenerate = upper.kappa <= 0.0
    coupling = None
    if not degenerate:
        fit = coupling_scaling_report(kd, levels=cfg.get("coupling_levels", range(2, 7)))
        coupling = fit.to_dict()
        coupling["epsilon"] = fit.slope / 2.0
        coupling["passed"] = bool(fit.slope > 0)
    overlap = None
    if "overlap_levels" in cfg:
        rep = overlap_scaling_report(spec, levels=cfg["overlap_levels"])
        overlap = {
            "diagonal": rep["diagonal"].to_dict(),
            "slope_per_variable": rep["slope_per_variable"],
            "predicted_per_variable": rep["predicted_per_variable"],
        }
    trunc = None
    if cfg.get("truncation_probe", True) and spec.scale != 0.0:
        trunc = truncation_report(spec, grid.left / spec.horizon)
    passed = upper.passed and lower.passed and (degenerate or coupling["passed"])
    report = {
        "kernel": spec.to_dict(),
        "grid": vars(grid),
        "upper_scaling": upper.to_dict(),
        "lower_scaling": lower.to_dict(),
        "coupling": coupling,
        "overlap": overlap,
        "truncation": trunc,
        "passed": bool(passed),
    }
    write_json(out_dir / "verify_report.json", report)
    return 0 if passed else 1


# -- simulate -------------------------------------------------------------------


def _write_paths(out_dir, paths):
    for i, path in enumerate(paths):
        rows = zip(path.times.tolist(), path.values.tolist())
        write_csv(out_dir / f"path-{i:04d}.csv", ["t", "value"], rows)


def cmd_simulate(cfg, out_dir, workers=None):
    spec = make_spec(cfg["kernel"])
    grid = make_grid(cfg["grid"], spec)
    seed = cfg.get("seed", 0)
    paths = sample_paths(
        spec, grid, cfg["paths"], seed, workers=workers, first_stream=cfg.get("first_stream", 0)
    )
    _write_paths(out_dir, paths)
    kd = KernelDiscretization(spec, grid)
    write_json(
        out_dir / "run.json",
        {
            "kernel": spec.to_dict(),
            "grid": vars(grid),
            "paths": cfg["paths"],
            "seed": seed,
            "first_stream": cfg.get("first_stream", 0),
            "scale": kd.scale,
            "provenance": provenance_tag(spec, grid),
            "generator": "philox",
        },
    )
    return 0


# -- report ---------------------------------------------------------------------


def _load_paths(paths_dir):
    files = sorted(Path(paths_dir).glob("path-*.csv"))
    if not files:
        raise ConfigError(f"no path-*.csv files in {paths_dir}")
    meta = {}
    run = Path(paths_dir) / "run.json"
    if run.exists():
        meta = json.loads(run.read_text())
    out = []
    for i, f in enumerate(files):
        data = np.loadtxt(f, delimiter=",", skiprows=1)
        out.append(
            PathSample(
                times=data[:, 0],
                values=data[:, 1],
                seed=meta.get("seed", 0),
                stream=meta.get("first_stream", 0) + i,
                provenance=meta.get("provenance", ""),
            )
        )
    return out


def cmd_report(cfg, out_dir, workers=None):
    if "paths_dir" in cfg:
        paths = _load_paths(cfg["paths_dir"])
    elif "simulate" in cfg:
        sub = cfg["simulate"]
        jsonschema.validate(sub, CONFIG_SCHEMAS["simulate"])
        spec = make_spec(sub["kernel"])
        grid = make_grid(sub["grid"], spec)
        paths = sample_paths(
            spec, grid, sub["paths"], sub.get("seed", 0), workers=workers,
            first_stream=sub.get("first_stream", 0),
        )
    else:
        raise ConfigError("report needs 'paths_dir' or 'simulate'")
    summary = {
        "paths": len(paths),
        "seed": paths[0].seed,
        "provenance": paths[0].provenance,
        "checks": {},
    }
    failed = False
    if "slope" in cfg:
        sub = cfg["slope"]
        fit = scaling_exponent_fit(paths, p=sub["p"], levels=sub["levels"])
        write_csv(
            out_dir / "slopes.csv",
            ["path", "slope"],
            [(i, s) for i, s in enumerate(fit.slopes)],
        )
        entry = fit.to_dict()
        if "expected_alpha" in sub:
            tol = sub.get("tolerance", 0.05)
            entry["expected_alpha"] = sub["expected_alpha"]
            entry["tolerance"] = tol
            entry["passed"] = bool(abs(fit.slope_mean - sub["expected_alpha"]) <= tol)
            failed |= not entry["passed"]
        summary["checks"]["slope"] = entry
    if "besov" in cfg:
        sub = cfg["besov"]
        rows = []
        sups = []
        for i, path in enumerate(paths):
            rep = dyadic_besov_seminorm(
                path, sub["smoothness"], p=sub.get("p"), orlicz_beta=sub.get("orlicz_beta")
            )
            sups.append(rep.seminorm)
            rows.extend(
                (i, l.level, l.lag, l.increment_norm, l.weighted) for l in rep.levels
            )
        write_csv(out_dir / "besov_levels.csv", ["path", "level", "lag", "norm", "weighted"], rows)
        summary["checks"]["besov"] = {
            "smoothness": sub["smoothness"],
            "seminorm_mean": float(np.mean(sups)),
            "seminorm_max": float(np.max(sups)),
        }
    if "moment_growth" in cfg:
        sub = cfg["moment_growth"]
        rep = moment_growth_report(
            paths,
            alpha=sub["alpha"],
            exponents=sub["exponents"],
            levels=sub.get("levels", range(5, 11)),
            ells=sub.get("ells", (2, 4, 6, 8)),
        )
        rows = []
        for e, d in rep.by_exponent.items():
            rows.extend((e, ell, q) for ell, q in zip(rep.ells, d["quantiles"]))
        write_csv(out_dir / "moment_quantiles.csv", ["exponent", "ell", "q99"], rows)
        summary["checks"]["moment_growth"] = rep.to_dict()
    if "modulus" in cfg:
        sub = cfg["modulus"]
        factors = sub.get("subsample_factors", [1])
        rows = []
        by_factor = {}
        for factor in factors:
            vals = [
                modulus_holder_statistic(
                    p.subsample(factor) if factor > 1 else p, sub["alpha"], sub["log_exponent"]
                )
                for p in paths
            ]
            by_factor[factor] = float(np.mean(vals))
            rows.extend((factor, i, v) for i, v in enumerate(vals))
        write_csv(out_dir / "modulus.csv", ["subsample_factor", "path", "statistic"], rows)
        entry = {"alpha": sub["alpha"], "log_exponent": sub["log_exponent"], "mean_by_factor": by_factor}
        if len(factors) > 1:
            coarse = by_factor[max(factors)]
            fine = by_factor[min(factors)]
            growth = fine / coarse if coarse > 0 else math.inf
            entry["growth"] = growth
            tol = sub.get("growth_tolerance", 2.0)
            entry["passed"] = bool(growth < tol)
            failed |= not entry["passed"]
        summary["checks"]["modulus"] = entry
    summary["passed"] = not failed
    write_json(out_dir / "report_summary.json", summary)
    return 0 if not failed else 1


# -- fuzz -----------------------------------------------------------------------


def cmd_fuzz(cfg, out_dir):
    seed = cfg.get("seed", 0)
    tol = cfg.get("tolerance", 1e-9)
    slack_tol = cfg.get("slack_tolerance", 1e-12)
    caps = dict(
        max_blocks=cfg.get("max_blocks", 4),
        max_order=cfg.get("max_order", 3),
        max_dim=cfg.get("max_dim", 3),
        max_total=cfg.get("max_total", 10),
    )
    rng = np.random.default_rng(seed)
    eq_rows = []
    for _ in range(cfg.get("equivalence_instances", 100)):
        eq_rows.append(
            fuzzing.equivalence_case(rng, pointwise_seeds=cfg.get("pointwise_seeds", 20), **caps)
        )
    ineq_rows = []
    for _ in range(cfg.get("inequality_instances", 100)):
        ineq_rows.append(fuzzing.inequality_case(rng, max_blocks=min(caps["max_blocks"], 3),
                                                 max_order=caps["max_order"],
                                                 max_dim=caps["max_dim"],
                                                 max_total=caps["max_total"]))
    if eq_rows:
        write_csv(
            out_dir / "fuzz_equivalence.csv",
            ["lengths", "dim", "degree0", "oracle", "relative_gap", "pointwise_max_error"],
            [
                ("x".join(map(str, r["lengths"])), r["dim"], r["degree0"], r["oracle"],
                 r["relative_gap"], r["pointwise_max_error"])
                for r in eq_rows
            ],
        )
    if ineq_rows:
        write_csv(
            out_dir / "fuzz_inequalities.csv",
            ["lengths", "dim", "pairs", "norm_bound_slack", "inner_bound_slack",
             "permutation_residual", "composition_residual"],
            [
                ("x".join(map(str, r["lengths"])), r["dim"], r["pairs"], r["norm_bound_slack"],
                 r["inner_bound_slack"], r["permutation_residual"],
                 "" if r["composition_residual"] is None else r["composition_residual"])
                for r in ineq_rows
            ],
        )
    worst = {
        "relative_gap": max((r["relative_gap"] for r in eq_rows), default=0.0),
        "pointwise_max_error": max((r["pointwise_max_error"] for r in eq_rows), default=0.0),
        "min_norm_bound_slack": min((r["norm_bound_slack"] for r in ineq_rows), default=0.0),
        "min_inner_bound_slack": min((r["inner_bound_slack"] for r in ineq_rows), default=0.0),
        "max_permutation_residual": max((r["permutation_residual"] for r in ineq_rows), default=0.0),
        "max_composition_residual": max(
            (r["composition_residual"] for r in ineq_rows if r["composition_residual"] is not None),
            default=0.0,
        ),
    }
    passed = (
        worst["relative_gap"] <= tol
        and worst["pointwise_max_error"] <= tol
        and worst["min_norm_bound_slack"] >= -slack_tol
        and worst["min_inner_bound_slack"] >= -slack_tol
        and worst["max_permutation_residual"] <= tol
        and worst["max_composition_residual"] <= tol
    )
    write_json(
        out_dir / "fuzz_summary.json",
        {"seed": seed, "tolerance": tol, "slack_tolerance": slack_tol, "worst": worst,
         "equivalence_instances": len(eq_rows), "inequality_instances": len(ineq_rows),
         "passed": bool(passed)},
    )
    return 0 if passed else 1


# -- entry point ------------------------------------------------------------------


def _apply_overrides(cfg, pairs):
    for pair in pairs:
        if "=" not in pair:
            raise ConfigError(f"--set expects key.path=json_value, got {pair!r}")
        key, _, raw = pair.partition("=")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = cfg
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
        node[parts[-1]] = value
    return cfg


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="chaoslab",
        description="Chaos-expansion calculus and Hermite-process simulation lab",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("expand", "verify", "simulate", "report", "fuzz"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON config file")
        p.add_argument("--out-dir", default=".", help="output directory")
        p.add_argument("--seed", type=int, help="override config seed")
        p.add_argument("--workers", type=int, default=None, help="worker processes")
        p.add_argument("--tolerance", type=float, help="override config tolerance")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override any config key (dotted path, JSON value)")
    args = parser.parse_args(argv)
    try:
        with open(args.config) as fh:
            cfg = json.load(fh)
        if args.seed is not None:
            cfg["seed"] = args.seed
        if args.tolerance is not None:
            cfg["tolerance"] = args.tolerance
        _apply_overrides(cfg, args.set)
        jsonschema.validate(cfg, CONFIG_SCHEMAS[args.command])
        out_dir = Path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        _dump_resolved(out_dir, args.command, cfg)
        workers = args.workers if args.workers is not None else default_workers()
        if args.command == "expand":
            return cmd_expand(cfg, out_dir)
        if args.command == "verify":
            return cmd_verify(cfg, out_dir)
        if args.command == "simulate":
            return cmd_simulate(cfg, out_dir, workers=workers)
        if args.command == "report":
            return cmd_report(cfg, out_dir, workers=workers)
        return cmd_fuzz(cfg, out_dir)
    except (ConfigError, jsonschema.ValidationError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"chaoslab: config error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"chaoslab: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
