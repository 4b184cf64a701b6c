"""Command line interface: cluster, synth, bench and cut subcommands.

Settings resolve in three layers: package defaults, then a key=value config
file (``--config``), then explicit command line flags. Exit codes: 0 success,
1 a run failed partway, 2 bad usage or bad input.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from ._version import __version__
from .engine import (
    PppConfig,
    accepted_posterior_by_depth,
    build_tree,
    cut_tree,
)
from .errors import ConfigError, FormatError, ParseError, PppError, ValidationError
from .fileio import (
    RunManifest,
    config_to_dict,
    export_assignment_csv,
    export_diagnostics_csv,
    export_matrix_csv,
    export_report,
    export_tree_json,
    load_csv,
    load_tree_json,
    write_manifest,
)
from .synth import PlantedSpec, generate_planted, repeatability_trial

log = logging.getLogger(__name__)

_USAGE_ERRORS = (ConfigError, ParseError, FormatError, ValidationError, FileNotFoundError)


def _parse_grid(text: str) -> tuple[int, int]:
    try:
        rows, cols = text.lower().split("x")
        return int(rows), int(cols)
    except ValueError:
        raise ConfigError(f"grid must look like RxC, got {text!r}") from None


def _parse_seed_list(text: str) -> list[int]:
    """Accept "0..9" ranges (inclusive) or comma lists like "1,5,7"."""
    text = text.strip()
    if ".." in text:
        lo, hi = text.split("..")
        return list(range(int(lo), int(hi) + 1))
    return [int(part) for part in text.split(",") if part != ""]


def _load_config_file(path: str) -> dict:
    """Flat key = value lines; '#' starts a comment; keys use flag spelling."""
    values = {}
    try:
        with open(path) as fh:
            for lineno, raw in enumerate(fh, start=1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ConfigError(f"{path}:{lineno}: expected key = value, got {raw!r}")
                key, value = line.split("=", 1)
                key = key.strip()
                if key not in _ALL_KEYS:
                    raise ConfigError(f"{path}:{lineno}: unknown config key {key!r}")
                values[key] = value.strip()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    return values


_BOOL_KEYS = {"has-header", "id-column"}
_INT_KEYS = {"seed", "em-max-iter", "max-split-attempts", "patience", "threads", "som-epochs", "cut-depth"}
_FLOAT_KEYS = {"em-tol", "reg-eps", "threshold"}
_STR_KEYS = {"cov-mode", "posterior-mode", "gamma-rows", "score-source", "som-grid", "delimiter", "kmeans-init"}
_ALL_KEYS = _BOOL_KEYS | _INT_KEYS | _FLOAT_KEYS | _STR_KEYS


def _coerce(key: str, value: str):
    if key in _BOOL_KEYS:
        lowered = value.lower()
        if lowered not in ("true", "false", "yes", "no", "1", "0"):
            raise ConfigError(f"config key {key} expects a boolean, got {value!r}")
        return lowered in ("true", "yes", "1")
    if key in _INT_KEYS:
        return int(value)
    if key in _FLOAT_KEYS:
        return float(value)
    if key in _STR_KEYS:
        return value
    raise ConfigError(f"unknown config key {key!r}")


def _setting(args, file_values: dict, key: str, default=None):
    """Flag if given, else config file, else default."""
    attr = key.replace("-", "_")
    from_flag = getattr(args, attr, None)
    if from_flag is not None and from_flag is not False:
        return from_flag
    if key in file_values:
        try:
            return _coerce(key, file_values[key])
        except ValueError as exc:
            raise ConfigError(f"config key {key}: {exc}") from None
    return default


_COV_MODES = {"full": "full", "diag": "diagonal", "diagonal": "diagonal"}


def _build_config(args, file_values: dict) -> PppConfig:
    grid = _setting(args, file_values, "som-grid")
    if isinstance(grid, str):
        grid = _parse_grid(grid)
    cov = _setting(args, file_values, "cov-mode")
    if cov is not None:
        if cov not in _COV_MODES:
            raise ConfigError(f"cov-mode must be full or diag, got {cov!r}")
        cov = _COV_MODES[cov]
    kwargs = dict(
        master_seed=_setting(args, file_values, "seed", 0),
        som_grid=grid,
        som_epochs=_setting(args, file_values, "som-epochs", 5),
        em_tol=_setting(args, file_values, "em-tol", 1e-6),
        em_max_iter=_setting(args, file_values, "em-max-iter", 100),
        reg_epsilon=_setting(args, file_values, "reg-eps"),
        covariance_mode=cov,
        max_split_attempts=_setting(args, file_values, "max-split-attempts", 20),
        patience=_setting(args, file_values, "patience", 5),
        score_threshold=_setting(args, file_values, "threshold", 0.5),
        posterior_mode=_setting(args, file_values, "posterior-mode", "competitive"),
        gamma_rows=_setting(args, file_values, "gamma-rows", "gamma0"),
        score_source=_setting(args, file_values, "score-source", "normalized"),
        kmeans_init=_setting(args, file_values, "kmeans-init", "random"),
    )
    return PppConfig(**kwargs)


def _load_input(args, file_values: dict):
    path = args.input
    if path is None:
        raise ConfigError("--input is required")
    if not os.path.exists(path):
        raise FileNotFoundError(f"input file {path} does not exist")
    return load_csv(
        path,
        has_header=bool(_setting(args, file_values, "has-header", False)),
        id_column=bool(_setting(args, file_values, "id-column", False)),
        delimiter=_setting(args, file_values, "delimiter", ","),
    )


def _manifest(command, args, config, out_paths: dict) -> RunManifest:
    return RunManifest(
        command=command,
        input_path=getattr(args, "input", None),
        output_paths={k: str(v) for k, v in out_paths.items()},
        master_seed=config.master_seed if config is not None else 0,
        config=config_to_dict(config) if config is not None else {},
        tool_version=__version__,
        created_utc=datetime.now(timezone.utc).isoformat(),
    )


def run_cluster(args) -> int:
    file_values = _load_config_file(args.config) if args.config else {}
    matrix = _load_input(args, file_values)
    config = _build_config(args, file_values)
    threads = int(_setting(args, file_values, "threads", 1) or 1)
    cut_depth = _setting(args, file_values, "cut-depth")

    tree = build_tree(matrix, config, threads=threads)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "tree": out / "tree.json",
        "assignment": out / "assignment.csv",
        "diagnostics": out / "diagnostics.csv",
        "manifest": out / "manifest.json",
    }
    export_tree_json(tree, paths["tree"], feature_ids=matrix.feature_ids)
    export_assignment_csv(tree, paths["assignment"], depth=cut_depth, feature_ids=matrix.feature_ids)
    export_diagnostics_csv(tree, paths["diagnostics"])
    write_manifest(_manifest("cluster", args, config, paths), paths["manifest"])

    clusters = cut_tree(tree, cut_depth)
    print(f"clusters: {len(clusters)} ({'leaves' if cut_depth is None else f'depth {cut_depth}'})")
    by_depth = accepted_posterior_by_depth(tree)
    for depth in sorted({n.depth for n in tree.nodes() if n.status == "internal"}):
        scores = [
            n.best_eval.score for n in tree.nodes()
            if n.depth == depth and n.status == "internal"
        ]
        posterior = by_depth.get(depth)
        posterior_text = "" if posterior is None else f", mean accepted posterior {posterior:.3f}"
        print(
            f"depth {depth}: {len(scores)} splits, mean score {np.mean(scores):.2f}{posterior_text}"
        )
    print(f"wrote {', '.join(str(p) for p in paths.values())}")
    return 0


def run_synth(args) -> int:
    file_values = _load_config_file(args.config) if args.config else {}
    seed = _setting(args, file_values, "seed", 0)
    blocks = _parse_grid(args.blocks)
    spec = PlantedSpec.even(
        n_instances=args.instances,
        n_features=args.features,
        shape=blocks,
        gap=args.gap,
        noise_sigma=args.noise,
        seed=seed,
    )
    planted = generate_planted(spec)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"data": out / "planted.csv", "labels": out / "labels.csv", "manifest": out / "manifest.json"}
    export_matrix_csv(planted.matrix, paths["data"])
    with open(paths["labels"], "w", newline="") as fh:
        fh.write("axis,index,block\n")
        for i, label in enumerate(planted.instance_labels):
            fh.write(f"instance,{i},{int(label)}\n")
        for j, label in enumerate(planted.feature_labels):
            fh.write(f"feature,{j},{int(label)}\n")
    manifest = _manifest("synth", args, None, paths)
    manifest.master_seed = seed
    manifest.config = {
        "instances": args.instances,
        "features": args.features,
        "blocks": f"{blocks[0]}x{blocks[1]}",
        "gap": args.gap,
        "noise": args.noise,
        "seed": seed,
    }
    write_manifest(manifest, paths["manifest"])
    print(f"wrote {paths['data']} ({args.instances}x{args.features}) and {paths['labels']}")
    return 0


def run_bench(args) -> int:
    file_values = _load_config_file(args.config) if args.config else {}
    matrix = _load_input(args, file_values)
    config = _build_config(args, file_values)
    seeds = _parse_seed_list(args.seeds)
    if not seeds:
        raise ConfigError("--seeds must name at least one seed")

    report = repeatability_trial(matrix, config, seeds)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"report": out / "report.json", "per_seed": out / "report.csv", "manifest": out / "manifest.json"}
    export_report(report, paths["report"], paths["per_seed"])
    write_manifest(_manifest("bench", args, config, paths), paths["manifest"])

    off_diagonal = report.pairwise_ari[~np.eye(len(seeds), dtype=bool)]
    mean_ari = float(off_diagonal.mean()) if off_diagonal.size else 1.0
    print(f"seeds: {len(seeds)}, modal root split frequency {report.modal_frequency:.2f}, "
          f"mean pairwise leaf ARI {mean_ari:.3f}")
    print(f"wrote {paths['report']} and {paths['per_seed']}")
    return 0


def run_cut(args) -> int:
    tree, feature_names = load_tree_json(args.tree)
    depth = args.cut_depth
    out = Path(args.out)
    if out.suffix:
        out.parent.mkdir(parents=True, exist_ok=True)
        target = out
    else:
        out.mkdir(parents=True, exist_ok=True)
        target = out / "assignment.csv"
    clusters = cut_tree(tree, depth)
    export_assignment_csv(clusters, target, feature_ids=feature_names)
    print(f"clusters: {len(clusters)}; wrote {target}")
    return 0


def _add_common_input_flags(sub) -> None:
    sub.add_argument("--input", help="numeric CSV to cluster")
    sub.add_argument("--has-header", action="store_true", default=None,
                     help="first line is feature names")
    sub.add_argument("--id-column", action="store_true", default=None,
                     help="first column is instance ids")
    sub.add_argument("--delimiter", default=None, help="field delimiter (default ,)")


def _add_common_config_flags(sub) -> None:
    sub.add_argument("--config", help="key = value settings file (flags win)")
    sub.add_argument("--seed", type=int, default=None, help="master random seed")
    sub.add_argument("--som-grid", default=None, metavar="RxC",
                     help="map grid, e.g. 8x8 (default sized per node)")
    sub.add_argument("--som-epochs", type=int, default=None, help="map training epochs")
    sub.add_argument("--em-tol", type=float, default=None, help="EM convergence tolerance")
    sub.add_argument("--em-max-iter", type=int, default=None, help="EM iteration cap")
    sub.add_argument("--cov-mode", choices=("full", "diag"), default=None,
                     help="mixture covariance shape (default size-based)")
    sub.add_argument("--reg-eps", type=float, default=None,
                     help="covariance regularization (default variance-scaled)")
    sub.add_argument("--max-split-attempts", type=int, default=None,
                     help="seeded attempts per node (default 20)")
    sub.add_argument("--patience", type=int, default=None,
                     help="non-improving attempts before giving up (default 5)")
    sub.add_argument("--threshold", type=float, default=None,
                     help="score threshold for core and child sets (default 0.5)")
    sub.add_argument("--posterior-mode", choices=("competitive", "paper"), default=None,
                     help="child posterior normalization (default competitive)")
    sub.add_argument("--gamma-rows", choices=("gamma0", "all"), default=None,
                     help="rows handed to the feature bisection (default gamma0)")
    sub.add_argument("--score-source", choices=("normalized", "raw"), default=None,
                     help="threshold normalized scores or raw densities")
    sub.add_argument("--kmeans-init", choices=("random", "plusplus"), default=None,
                     help="bisection center initializer (default random)")
    sub.add_argument("--threads", type=int, default=None,
                     help="worker threads for tree growth (default 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ppp",
        description="Feature clustering by recursive bisection with posterior validation.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subs = parser.add_subparsers(dest="subcommand", required=True)

    cluster = subs.add_parser("cluster", help="cluster the features of a CSV matrix")
    _add_common_input_flags(cluster)
    _add_common_config_flags(cluster)
    cluster.add_argument("--out", required=True, help="output directory")
    cluster.add_argument("--cut-depth", type=int, default=None,
                         help="flatten the tree at this depth (default: leaves)")
    cluster.set_defaults(func=run_cluster)

    synth = subs.add_parser("synth", help="generate a planted block matrix")
    synth.add_argument("--out", required=True, help="output directory")
    synth.add_argument("--instances", type=int, default=200, help="rows (default 200)")
    synth.add_argument("--features", type=int, default=20, help="columns (default 20)")
    synth.add_argument("--blocks", default="2x2", metavar="RxC",
                       help="instance x feature block counts (default 2x2)")
    synth.add_argument("--gap", type=float, default=4.0, help="block mean separation")
    synth.add_argument("--noise", type=float, default=1.0, help="noise sigma")
    synth.add_argument("--seed", type=int, default=None, help="generator seed")
    synth.add_argument("--config", help="key = value settings file")
    synth.set_defaults(func=run_synth)

    bench = subs.add_parser("bench", help="measure run-to-run stability")
    _add_common_input_flags(bench)
    _add_common_config_flags(bench)
    bench.add_argument("--out", required=True, help="output directory")
    bench.add_argument("--seeds", default="0..9",
                       help='master seeds, "0..9" or "1,5,7" (default 0..9)')
    bench.set_defaults(func=run_bench)

    cut = subs.add_parser("cut", help="re-cut a saved tree into flat clusters")
    cut.add_argument("--tree", required=True, help="tree.json from a cluster run")
    cut.add_argument("--cut-depth", type=int, default=None,
                     help="frontier depth (default: leaves)")
    cut.add_argument("--out", required=True, help="output CSV path or directory")
    cut.set_defaults(func=run_cut)
    return parser


def main(argv=None) -> int:
    level = os.environ.get("PPP_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING))
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _USAGE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except PppError as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # pragma: no cover - last resort
        log.exception("unexpected failure")
        print(f"run failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
