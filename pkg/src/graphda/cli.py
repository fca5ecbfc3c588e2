"""Command-line entry point.

Subcommands: gen-data, pcst, project, run, sweep, tune, report. Usage
errors exit with status 2; any other failure prints one diagnostic line
and exits with status 1.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import harness as H
from .datagen import (gen_classification_set, gen_regression_set, make_benchmark_truth,
                      make_wstar, write_dataset_csv, write_truth)
from .graph import Graph, build_grid_graph, restrict
from .pcst import PcstInstance, pcst_objective, solve_pcst
from .projections import exact_top_s, head_project, tail_project

__all__ = ["main", "read_edge_list", "write_edge_list", "read_vector", "write_vector",
           "read_pcst_instance"]


# ---------------------------------------------------------------- file formats

def _data_lines(path):
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line


def _parse_edges(path, lines) -> Graph:
    lines = list(lines)
    if not lines:
        raise ValueError(f"{path}: empty edge list")
    lineno, head = lines[0]
    parts = head.split()
    if len(parts) != 2 or parts[0] != "p":
        raise ValueError(f"{path}:{lineno}: first line must read 'p <node_count>'")
    p = int(parts[1])
    edges, costs = [], []
    for lineno, line in lines[1:]:
        parts = line.split()
        if len(parts) not in (2, 3):
            raise ValueError(f"{path}:{lineno}: expected 'u v [cost]'")
        try:
            edges.append((int(parts[0]), int(parts[1])))
            costs.append(float(parts[2]) if len(parts) == 3 else 1.0)
        except ValueError:
            raise ValueError(f"{path}:{lineno}: malformed edge {line!r}") from None
    return Graph(p, np.array(edges, dtype=np.int64).reshape(-1, 2), np.array(costs))


def read_edge_list(path) -> Graph:
    """``p <node_count>`` header then ``u v [cost]`` lines; cost defaults to 1."""
    return _parse_edges(path, _data_lines(path))


def write_edge_list(path, graph: Graph) -> None:
    with open(path, "w") as fh:
        fh.write(f"p {graph.node_count}\n")
        for (u, v), c in zip(graph.edges.tolist(), graph.costs.tolist()):
            fh.write(f"{u} {v} {c!r}\n")


def read_vector(path) -> np.ndarray:
    """One real per line."""
    vals = []
    for lineno, line in _data_lines(path):
        try:
            vals.append(float(line))
        except ValueError:
            raise ValueError(f"{path}:{lineno}: not a number: {line!r}") from None
    return np.array(vals, dtype=np.float64)


def write_vector(path, w) -> None:
    with open(path, "w") as fh:
        fh.writelines(f"{v!r}\n" for v in np.asarray(w, dtype=np.float64).tolist())


def read_pcst_instance(path) -> PcstInstance:
    """An edge list followed by a ``prizes:`` line and one prize per line."""
    lines = list(_data_lines(path))
    cut = next((k for k, (_, line) in enumerate(lines) if line == "prizes:"), None)
    if cut is None:
        raise ValueError(f"{path}: missing 'prizes:' block")
    graph = _parse_edges(path, lines[:cut])
    prizes = []
    for lineno, line in lines[cut + 1:]:
        try:
            prizes.append(float(line))
        except ValueError:
            raise ValueError(f"{path}:{lineno}: not a number: {line!r}") from None
    if len(prizes) != graph.node_count:
        raise ValueError(f"{path}: {len(prizes)} prizes for {graph.node_count} nodes")
    return PcstInstance(graph, np.array(prizes), 1)


# ---------------------------------------------------------------- commands

def _global_overrides(args) -> dict:
    out = {}
    for key in ("seed", "trials", "threads", "out"):
        val = getattr(args, key, None)
        if val is not None:
            out[key] = val
    if "threads" not in out:
        out["threads"] = H.default_threads()
    return out


def _config(args, **extra) -> H.ExperimentConfig:
    overrides = {**_global_overrides(args), **extra}
    if getattr(args, "config", None):
        return H.load_config(args.config, overrides)
    return H.config_from_mapping(overrides)


def _emit(text: str, out) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_gen_data(args) -> int:
    out = getattr(args, "out", None)
    if not out:
        raise ValueError("gen-data needs --out")
    seed = getattr(args, "seed", 0)
    truth_seq, data_seq = np.random.SeedSequence(seed).spawn(2)
    rng = np.random.default_rng(data_seq)
    if args.kind == "benchmark":
        graph = build_grid_graph(args.rows, args.cols)
        truth = make_benchmark_truth(graph, args.size, args.mu, truth_seq)
        X, y = gen_classification_set(truth.support, graph.node_count, args.mu, args.n, rng)
    else:
        cfg = H.ExperimentConfig(experiment="mnist", sweep_values=(args.n,),
                                 strategy=args.strategy, seed=seed)
        mask, vals, side = H.digit_image(cfg, args.digit)
        truth = make_wstar(args.strategy, mask, side * side, vals,
                           np.random.default_rng(truth_seq))
        X, y = gen_regression_set(truth.wstar, args.n, rng)
    write_dataset_csv(out, X, y)
    write_truth(args.truth or f"{out}.truth", truth)
    return 0


def cmd_pcst(args) -> int:
    inst = read_pcst_instance(args.instance)
    inst = PcstInstance(inst.graph, inst.prizes, args.g, args.cost_scale)
    forest = solve_pcst(inst)
    obj = pcst_objective(inst.graph, inst.prizes, forest, args.cost_scale)
    edges = inst.graph.edges[forest.edges]
    text = "\n".join([
        "nodes: " + " ".join(str(v) for v in forest.nodes.tolist()),
        "edges: " + " ".join(f"{u}-{v}" for u, v in edges.tolist()),
        f"components: {forest.component_count()}",
        f"objective: {obj!r}",
    ]) + "\n"
    _emit(text, getattr(args, "out", None))
    return 0


def cmd_project(args) -> int:
    """First line: support indices. Then the restricted vector, one value per line."""
    w = read_vector(args.vector)
    if args.mode == "top-s":
        support = exact_top_s(w, args.s)
        proj = restrict(w, support)
    else:
        if not args.graph:
            raise ValueError(f"--mode {args.mode} needs --graph")
        graph = read_edge_list(args.graph)
        fn = head_project if args.mode == "head" else tail_project
        support, proj = fn(w, graph, args.s, args.g, args.omega, args.max_iter)
    text = " ".join(str(i) for i in support.tolist()) + "\n"
    text += "".join(f"{v!r}\n" for v in proj.tolist())
    _emit(text, getattr(args, "out", None))
    return 0


def cmd_run(args) -> int:
    extra = {"snapshots": args.snapshots} if args.snapshots else {}
    cfg = _config(args, **extra)
    if cfg.experiment != "benchmark":
        raise ValueError(f"experiment {cfg.experiment!r} is a sweep; use the sweep command")
    rows = H.run_benchmark_experiment(cfg)
    _emit(H.rows_to_csv(rows), cfg.out)
    summary = H.summarize_rows(rows)
    if args.summary:
        H.summary_to_csv(summary, args.summary)
    if cfg.out:
        print(H.format_table(summary))
    return 0


_SWEEP_KINDS = {"sparsity": "sweep-sparsity", "samples": "sweep-samples", "mu": "sweep-mu",
                "mnist": "mnist"}


def cmd_sweep(args) -> int:
    extra = {}
    if args.kind:
        extra["experiment"] = _SWEEP_KINDS[args.kind]
    if args.values:
        extra["sweep_values"] = args.values
    cfg = _config(args, **extra)
    if cfg.experiment == "benchmark":
        raise ValueError("choose a sweep with --kind or 'experiment' in the config")
    _emit(H.curve_to_csv(H.run_experiment(cfg)), cfg.out)
    return 0


def cmd_tune(args) -> int:
    cfg = _config(args)
    learners = [args.learner] if args.learner else list(cfg.learners)
    body = []
    for trial in range(cfg.trials):
        data = H.benchmark_trial_data(cfg.benchmark_spec(), trial)
        for name in learners:
            res = H.tune(name, cfg.grid_for(name), data.train, data.validation,
                         cfg.criterion, data.loss, data.graph)
            body.append([name, trial, H._format_params(res.params), res.score])
    _emit(H._csv_text(("method", "trial", "params", "score"), body), cfg.out)
    return 0


def cmd_report(args) -> int:
    rows = H.read_rows_csv(args.rows)
    if not rows:
        raise ValueError(f"{args.rows}: no result rows")
    summary = H.summarize_rows(rows)
    print(H.format_table(summary))
    if getattr(args, "out", None):
        H.summary_to_csv(summary, args.out)
    return 0


# ---------------------------------------------------------------- parser

def _csv_floats(text: str):
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    # SUPPRESS keeps a flag given before the subcommand from being reset after it
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--seed", type=int, help="base random seed (default 0)")
    common.add_argument("--trials", type=int, help="number of trials")
    common.add_argument("--threads", type=int,
                        help=f"worker processes (default from ${H.THREADS_ENV}, else 1)")
    common.add_argument("--out", help="output path (default stdout)")

    parser = argparse.ArgumentParser(prog="graphda", parents=[common],
                                     description="Online learning with graph-structured sparsity.")
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True

    p = sub.add_parser("gen-data", parents=[common], help="write a synthetic dataset CSV")
    p.add_argument("--kind", choices=("benchmark", "regression"), default="benchmark")
    p.add_argument("--rows", type=int, default=33)
    p.add_argument("--cols", type=int, default=33)
    p.add_argument("--size", type=int, default=26, help="support size for benchmark data")
    p.add_argument("--mu", type=float, default=0.3)
    p.add_argument("--n", type=int, default=400, help="number of samples")
    p.add_argument("--digit", type=int, default=0, help="digit mask for regression data")
    p.add_argument("--strategy", choices=("normalized", "constant", "gaussian"),
                   default="constant")
    p.add_argument("--truth", help="ground-truth path (default <out>.truth)")
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("pcst", parents=[common], help="solve a prize-collecting Steiner forest")
    p.add_argument("instance", help="edge list followed by a 'prizes:' block")
    p.add_argument("--g", type=int, default=1, help="target number of trees")
    p.add_argument("--cost-scale", type=float, default=1.0)
    p.set_defaults(func=cmd_pcst)

    p = sub.add_parser("project", parents=[common], help="project a vector onto sparse supports")
    p.add_argument("--vector", required=True, help="one value per line")
    p.add_argument("--graph", help="edge list (head and tail modes)")
    p.add_argument("--mode", choices=("head", "tail", "top-s"), required=True)
    p.add_argument("--s", type=int, required=True)
    p.add_argument("--g", type=int, default=1)
    p.add_argument("--omega", type=float, default=0.1)
    p.add_argument("--max-iter", type=int, default=20)
    p.set_defaults(func=cmd_project)

    p = sub.add_parser("run", parents=[common], help="benchmark experiment to a per-trial CSV")
    p.add_argument("--config", help="key = value config file; its keys override flags")
    p.add_argument("--snapshots", help="directory for final model snapshots")
    p.add_argument("--summary", help="also write per-method mean and std CSV here")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", parents=[common], help="sparsity, sample, mu or MNIST sweep")
    p.add_argument("--config")
    p.add_argument("--kind", choices=tuple(_SWEEP_KINDS))
    p.add_argument("--values", type=_csv_floats, help="comma-separated sweep values")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("tune", parents=[common], help="print the chosen hyperparameters")
    p.add_argument("--config")
    p.add_argument("--learner")
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("report", parents=[common], help="aggregate a per-trial CSV")
    p.add_argument("rows", help="CSV written by the run command")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # exits with status 2 on usage errors
    try:
        return int(args.func(args) or 0)
    except Exception as exc:  # noqa: BLE001 - every failure becomes one line
        msg = " ".join(str(exc).split()) or type(exc).__name__
        print(f"graphda: error: {msg}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
