"""Command-line entry point.

Subcommands: ``identify``, ``estimate``, ``refute``, ``simulate`` and
``reproduce-figure``. Exit codes: 0 success, 1 estimation/refutation
failure, 2 input or parse error, 3 estimand/estimator incompatibility,
4 unknown estimator or refuter name.

``estimate`` and ``refute`` accept ``--config FILE`` (JSON); explicit flags
override the file. Config keys: ``data``, ``graph``, ``treatment``,
``outcome``, ``estimand`` (``"kind:index"`` or ``{"kind", "index"}``),
``estimator``, ``estimator_params``, ``refuters`` (list of names or
``{"name": ..., <params>}``), ``replications``, ``seed``, ``output``,
``histogram_dir``.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import re
import sys
from pathlib import Path

from ._validation import IncompatibleEstimandError
from .data import DataError, load_csv
from .estimate import ESTIMATORS, EstimationError, compatible_methods
from .graph import GraphError, read_graph
from .identify import KINDS, IdentificationError, classify_variables, identify_effect
from .pipeline import Pipeline, UnknownMethodError
from .refute import REFUTERS, RefutationError, SensitivitySurface
from .simulate import (LinearDgpConfig, dgp_example1, dgp_example2, figure_summary,
                       generate_linear_dgp, replicate_figure1)
from .simulate import EXAMPLE1_DOT, EXAMPLE2_DOT

EXIT_OK, EXIT_FAILURE, EXIT_INPUT, EXIT_INCOMPATIBLE, EXIT_UNKNOWN = 0, 1, 2, 3, 4

REFUTER_PARAMS = {
    "placebo_treatment": {"replications", "mode", "significance"},
    "dummy_outcome": {"replications", "significance"},
    "simulated_outcome": {"replications", "true_effect", "significance"},
    "random_common_cause": {"replications", "significance"},
    "unobserved_common_cause": {"replications", "kappa_t_grid", "kappa_y_grid"},
    "data_subset": {"replications", "fraction", "significance"},
    "bootstrap": {"replications", "significance"},
}
DEFAULT_REPLICATIONS = {"unobserved_common_cause": 20}


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def _dump(obj) -> str:
    return json.dumps(_finite(obj), indent=2, allow_nan=False) + "\n"


def _finite(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    return obj


def _write(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


# -- config ----------------------------------------------------------------

def _parse_estimand_choice(value) -> tuple[str, int]:
    if isinstance(value, dict):
        kind, index = value.get("kind"), value.get("index", 0)
    else:
        kind, _, index = str(value).partition(":")
        index = index or 0
    try:
        index = int(index)
    except ValueError:
        raise CliError(f"bad estimand index in {value!r}", EXIT_INPUT) from None
    if kind not in KINDS:
        raise CliError(f"estimand kind must be one of {', '.join(KINDS)}, got {kind!r}", EXIT_INPUT)
    return kind, index


_PARAM_RE = re.compile(r"\s*(\w+)\s*=\s*(\[[^\]]*\]|[^,]+)\s*(?:,|$)")


def _parse_refuter(spec) -> dict:
    if isinstance(spec, dict):
        return dict(spec)
    name, _, rest = spec.partition(":")
    out = {"name": name.strip()}
    pos = 0
    while pos < len(rest):
        m = _PARAM_RE.match(rest, pos)
        if not m:
            raise CliError(f"cannot parse refuter parameters {rest!r}", EXIT_INPUT)
        key, raw = m.group(1), m.group(2).strip()
        try:
            out[key] = json.loads(raw)
        except json.JSONDecodeError:
            out[key] = raw
        pos = m.end()
    return out


def _load_config(args) -> dict:
    cfg = {}
    if getattr(args, "config", None):
        try:
            cfg = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise CliError(f"cannot read config {args.config}: {exc}", EXIT_INPUT) from exc
        base = Path(args.config).parent
        for key in ("data", "graph"):
            if key in cfg and not os.path.isabs(cfg[key]):
                cfg[key] = str(base / cfg[key])
    for key in ("data", "graph", "treatment", "outcome", "estimand", "estimator", "seed",
                "output", "replications", "histogram_dir"):
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = value
    if getattr(args, "refuter", None):
        cfg["refuters"] = args.refuter
    missing = [k for k in ("data", "graph", "treatment", "outcome") if not cfg.get(k)]
    if missing:
        raise CliError(f"missing required setting(s): {', '.join(missing)}", EXIT_INPUT)
    cfg.setdefault("estimand", "backdoor:0")
    cfg.setdefault("estimator", "regression")
    cfg.setdefault("seed", 0)
    return cfg


def _build(cfg):
    graph = read_graph(cfg["graph"])
    t, y = cfg["treatment"], cfg["outcome"]
    data = load_csv(cfg["data"], required_columns=[t, y])
    for node in graph.observed:
        if node not in data:
            raise CliError(f"graph node {node!r} has no data column", EXIT_INPUT)
    kind, index = _parse_estimand_choice(cfg["estimand"])
    method = cfg["estimator"]
    if method not in ESTIMATORS:
        raise CliError(f"unknown estimator {method!r}; valid: {', '.join(sorted(ESTIMATORS))}",
                       EXIT_UNKNOWN)
    if kind not in ESTIMATORS[method].estimand_kinds:
        raise CliError(f"estimator {method!r} cannot estimate a {kind} estimand; "
                       f"compatible: {', '.join(compatible_methods(kind))}", EXIT_INCOMPATIBLE)
    pipe = Pipeline(graph, t, y, kind, index, method, dict(cfg.get("estimator_params", {})))
    try:
        pipe.select()
    except IdentificationError as exc:
        raise CliError(str(exc), EXIT_INCOMPATIBLE) from exc
    return data, pipe, kind, index


# -- commands --------------------------------------------------------------

def cmd_identify(args) -> int:
    graph = read_graph(args.graph)
    estimands = identify_effect(graph, args.treatment, args.outcome)
    result = {"treatment": args.treatment, "outcome": args.outcome,
              "estimands": [e.to_dict() for e in estimands],
              "variables": classify_variables(graph, args.treatment, args.outcome)}
    text = _dump(result)
    if args.output:
        _write(args.output, text)
        for e in estimands:
            print(e)
        if not estimands:
            print("not identified by the backdoor, frontdoor or instrument criteria")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _estimate_payload(pipe, estimate, kind, index, seed):
    return {"estimand_choice": {"kind": kind, "index": index}, "estimator": pipe.method,
            "seed": seed, "estimate": estimate.to_dict()}


def cmd_estimate(args) -> int:
    cfg = _load_config(args)
    data, pipe, kind, index = _build(cfg)
    estimate = pipe.estimate(data, int(cfg["seed"]))
    text = _dump(_estimate_payload(pipe, estimate, kind, index, int(cfg["seed"])))
    if cfg.get("output"):
        _write(cfg["output"], text)
        print(f"{estimate.estimand}  {estimate.method}: ate={estimate.ate:.4f} "
              f"se={estimate.std_error:.4f} 95% CI [{estimate.ci_low:.4f}, {estimate.ci_high:.4f}]")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_refute(args) -> int:
    cfg = _load_config(args)
    specs = [_parse_refuter(s) for s in cfg.get("refuters") or []]
    if not specs:
        raise CliError("select at least one refuter", EXIT_INPUT)
    for spec in specs:
        name = spec.get("name")
        if name not in REFUTERS:
            raise CliError(f"unknown refuter {name!r}; valid: {', '.join(sorted(REFUTERS))}",
                           EXIT_UNKNOWN)
        bad = set(spec) - {"name"} - REFUTER_PARAMS[name]
        if bad:
            raise CliError(f"refuter {name!r} does not take {', '.join(sorted(bad))}", EXIT_INPUT)
    data, pipe, kind, index = _build(cfg)
    seed = int(cfg["seed"])
    estimate = pipe.estimate(data, seed)
    hist_dir = cfg.get("histogram_dir") or (Path(cfg["output"]).parent if cfg.get("output") else None)

    reports = []
    for i, spec in enumerate(specs):
        name = spec["name"]
        params = {k: v for k, v in spec.items() if k != "name"}
        params.setdefault("replications",
                          int(cfg.get("replications") or DEFAULT_REPLICATIONS.get(name, 100)))
        report = REFUTERS[name](pipe, data, seed=seed + i, estimate=estimate, **params)
        reports.append(report)
        print(report.summary())
        if hist_dir is not None:
            _write(Path(hist_dir) / f"{i:02d}_{name}_refuted_ates.csv", _histogram_csv(report))

    payload = _estimate_payload(pipe, estimate, kind, index, seed)
    payload["refutations"] = [r.to_dict() for r in reports]
    text = _dump(payload)
    if cfg.get("output"):
        _write(cfg["output"], text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _histogram_csv(report) -> str:
    if isinstance(report, SensitivitySurface):
        lines = ["kappa_t,kappa_y,replication,refuted_ate"]
        for c in report.cells:
            lines += [f"{c.kappa_t!r},{c.kappa_y!r},{i},{v!r}" for i, v in enumerate(c.refuted_ates)]
    else:
        lines = ["replication,refuted_ate"]
        lines += [f"{i},{v!r}" for i, v in enumerate(report.refuted_ates)]
    return "\n".join(lines) + "\n"


def cmd_simulate(args) -> int:
    if args.dgp == "example1":
        data, truth = dgp_example1(args.n, args.seed, scale=args.scale)
        dot = EXAMPLE1_DOT
    elif args.dgp == "example2":
        data, truth = dgp_example2(args.n, args.seed)
        dot = EXAMPLE2_DOT
    else:
        cfg = LinearDgpConfig(args.n, args.confounders, args.instruments, args.mediator,
                              args.effect, args.noise_variance, args.seed)
        data, graph, truth = generate_linear_dgp(cfg)
        dot = graph.to_dot("linear_dgp")
    _write(args.out, data.to_csv())
    if args.graph_out:
        _write(args.graph_out, dot)
    print(f"wrote {data.row_count} rows x {len(data.columns)} columns to {args.out}; true ate = {truth:g}")
    return EXIT_OK


def cmd_reproduce_figure(args) -> int:
    out = Path(args.out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CliError(f"cannot create {out}: {exc}", EXIT_INPUT) from exc
    table = replicate_figure1(args.variant, args.n_datasets, args.n, args.seed)
    summary = figure_summary(table, args.variant)
    stem = f"figure1{'ab'[args.variant - 1]}"
    table.to_csv(out / f"{stem}_estimates.csv", index=False, lineterminator="\n")
    _write(out / f"{stem}_summary.json", _dump(summary))
    for label, s in summary["estimators"].items():
        print(f"{label:<22} mean={s['mean']:.4f} std={s['std']:.4f} (truth {summary['true_ate']:g})")
    print(f"std ratio faulty/correct = {summary['std_ratio_faulty_to_correct']:.3f}")
    return EXIT_OK


# -- argument parsing ------------------------------------------------------

def _pipeline_args(p):
    p.add_argument("--config", help="JSON config file; flags override it")
    p.add_argument("--data", help="CSV data file")
    p.add_argument("--graph", help="DOT graph file")
    p.add_argument("--treatment")
    p.add_argument("--outcome")
    p.add_argument("--estimand", help="estimand choice KIND[:INDEX], e.g. backdoor:0")
    p.add_argument("--estimator", help=f"one of {', '.join(sorted(ESTIMATORS))}")
    p.add_argument("--seed", type=int)
    p.add_argument("--output", help="JSON output path (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="causalcheck", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("identify", help="list identified estimands for a graph")
    p.add_argument("--graph", required=True)
    p.add_argument("--treatment", required=True)
    p.add_argument("--outcome", required=True)
    p.add_argument("--output")
    p.set_defaults(func=cmd_identify)

    p = sub.add_parser("estimate", help="identify and estimate the ATE")
    _pipeline_args(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("refute", help="estimate, then run refutation tests")
    _pipeline_args(p)
    p.add_argument("--refuter", action="append",
                   help="NAME[:key=value,...]; repeatable. Names: " + ", ".join(REFUTERS))
    p.add_argument("--replications", type=int)
    p.add_argument("--histogram-dir", dest="histogram_dir")
    p.set_defaults(func=cmd_refute)

    p = sub.add_parser("simulate", help="write a simulated dataset")
    p.add_argument("--dgp", choices=["example1", "example2", "linear"], default="example1")
    p.add_argument("--n", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--scale", choices=["variance", "std"], default="variance")
    p.add_argument("--confounders", type=int, default=1)
    p.add_argument("--instruments", type=int, default=1)
    p.add_argument("--mediator", action="store_true")
    p.add_argument("--effect", type=float, default=10.0)
    p.add_argument("--noise-variance", dest="noise_variance", type=float, default=1.0)
    p.add_argument("--out", required=True)
    p.add_argument("--graph-out", dest="graph_out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("reproduce-figure", help="replicate the correct vs faulty estimator distributions")
    p.add_argument("--variant", type=int, choices=[1, 2], required=True)
    p.add_argument("--out-dir", dest="out_dir", required=True)
    p.add_argument("--n-datasets", dest="n_datasets", type=int, default=100)
    p.add_argument("--n", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_reproduce_figure)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        code, msg = exc.code, str(exc)
    except UnknownMethodError as exc:
        code, msg = EXIT_UNKNOWN, str(exc)
    except IncompatibleEstimandError as exc:
        code, msg = EXIT_INCOMPATIBLE, str(exc)
    except (GraphError, DataError, OSError) as exc:
        code, msg = EXIT_INPUT, str(exc)
    except (EstimationError, RefutationError) as exc:
        code, msg = EXIT_FAILURE, str(exc)
    except (ValueError, TypeError) as exc:
        # bad parameter values, e.g. a refuter fraction outside (0, 1]
        code, msg = EXIT_INPUT, str(exc)
    print(f"error: {msg}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
