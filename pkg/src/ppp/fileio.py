"""File formats: CSV ingestion, JSON and CSV exports, run manifests.

Every writer emits deterministic bytes for identical inputs: keys are sorted,
floats use their shortest round-trip repr, and nothing except the manifest
embeds wall-clock state.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import asdict, dataclass

import numpy as np

from ._version import __version__
from .data import DesignMatrix, IndexSet
from .engine import PppNode, PppTree, cut_tree
from .errors import FormatError, ParseError, ValidationError
from .som import SomModel, codebook_priors


def load_csv(
    path, has_header: bool = False, id_column: bool = False, delimiter: str = ","
) -> DesignMatrix:
    """Read a numeric CSV into a DesignMatrix.

    ``has_header`` consumes the first line as feature names; ``id_column``
    consumes the first column as instance ids. Cells must parse as finite
    floats. Errors carry zero-based (row, col) positions in data coordinates,
    counted after the header and id column are stripped.
    """
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh, delimiter=delimiter))
    if not rows:
        raise FormatError(f"{path} is empty")

    feature_ids = None
    if has_header:
        header = rows[0]
        rows = rows[1:]
        if not rows:
            raise FormatError(f"{path} has a header but no data rows")
        feature_ids = tuple(header[1:] if id_column else header)

    width = len(rows[0])
    instance_ids = [] if id_column else None
    values = np.empty((len(rows), width - (1 if id_column else 0)))
    for r, row in enumerate(rows):
        if len(row) != width:
            raise FormatError(
                f"{path}: row {r} has {len(row)} fields, expected {width}"
            )
        cells = row
        if id_column:
            instance_ids.append(cells[0])
            cells = cells[1:]
        for c, cell in enumerate(cells):
            try:
                values[r, c] = float(cell)
            except ValueError:
                raise ParseError(
                    f"{path}: cell {cell!r} at row {r}, col {c} is not a number",
                    row=r,
                    col=c,
                ) from None
    if not np.all(np.isfinite(values)):
        r, c = np.argwhere(~np.isfinite(values))[0]
        raise ValidationError(
            f"{path}: non-finite value at row {int(r)}, col {int(c)}"
        )
    if feature_ids is not None and len(feature_ids) != values.shape[1]:
        raise FormatError(
            f"{path}: header names {len(feature_ids)} columns, data has {values.shape[1]}"
        )
    return DesignMatrix.ingest(
        values,
        tuple(instance_ids) if instance_ids is not None else None,
        feature_ids,
    )


def _fmt(value: float) -> str:
    return repr(float(value))


def export_matrix_csv(m: DesignMatrix, path) -> None:
    """Write a matrix so that load_csv round-trips it exactly."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        has_ids = m.instance_ids is not None
        if m.feature_ids is not None:
            header = (["id"] if has_ids else []) + list(m.feature_ids)
            writer.writerow(header)
        for i in range(m.n_instances):
            row = [m.instance_ids[i]] if has_ids else []
            writer.writerow(row + [_fmt(v) for v in m.values[i]])


def export_codebook_csv(som: SomModel, path) -> None:
    """Unit grid position, hit count, prior and codebook vector per row."""
    priors = codebook_priors(som)
    coords = som.grid_coords
    dim = som.codebook.shape[1]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["unit_row", "unit_col", "hit_count", "prior"] + [f"v{j}" for j in range(dim)]
        )
        for k in range(som.config.n_units):
            writer.writerow(
                [int(coords[k, 0]), int(coords[k, 1]), int(som.hit_counts[k]), _fmt(priors[k])]
                + [_fmt(v) for v in som.codebook[k]]
            )


def export_mixture_json(g, path) -> None:
    """Weights, means and covariances (diagonal or full) plus the mode."""
    doc = {
        "covariance_mode": g.covariance_mode,
        "reg_epsilon": g.reg_epsilon,
        "components": [
            {
                "weight": c.weight,
                "mean": c.mean.tolist(),
                "covariance": c.covariance.tolist(),
            }
            for c in g.components
        ],
    }
    _write_json(doc, path)


def _node_dict(node: PppNode) -> dict:
    ev = node.best_eval
    doc = {
        "path": node.path,
        "status": node.status,
        "feature_ids": [int(i) for i in node.feature_set.indices],
        "instance_count": len(node.instance_set),
        "gamma0_size": len(ev.core_set) if ev is not None else None,
        "gamma1_size": len(ev.child_sets[0]) if ev is not None else None,
        "gamma2_size": len(ev.child_sets[1]) if ev is not None else None,
        "phi1": ev.overlaps[0] if ev is not None else None,
        "phi2": ev.overlaps[1] if ev is not None else None,
        "phi": ev.score if ev is not None else None,
        "phi_trace": node.score_trace,
        "children": None,
    }
    if node.children is not None:
        doc["children"] = [_node_dict(c) for c in node.children]
    return doc


def tree_to_dict(tree: PppTree, feature_ids=None) -> dict:
    """JSON-ready view of a tree.

    Nodes carry integer feature ids; ``feature_ids``, when given, is stored
    once as a top-level name table.
    """
    return {
        "n_instances": tree.n_instances,
        "n_features": tree.n_features,
        "feature_names": list(feature_ids) if feature_ids is not None else None,
        "root": _node_dict(tree.root),
    }


def export_tree_json(tree: PppTree, path, feature_ids=None) -> None:
    _write_json(tree_to_dict(tree, feature_ids), path)


def load_tree_json(path) -> tuple[PppTree, list | None]:
    """Rebuild the tree skeleton (paths, feature sets, statuses) from JSON.

    Attempt details and instance memberships are not reconstructed; the result
    carries what cutting needs, plus the stored feature name table (or None).
    """
    with open(path) as fh:
        doc = json.load(fh)
    try:
        n_features = int(doc["n_features"])
        n_instances = int(doc["n_instances"])

        def build(node_doc) -> PppNode:
            feature_set = IndexSet.from_iterable(
                (int(i) for i in node_doc["feature_ids"]), n_features
            )
            node = PppNode(
                feature_set,
                IndexSet(np.array([], dtype=np.int64), n_instances),
                path=str(node_doc["path"]),
                status=str(node_doc["status"]),
            )
            if node_doc.get("children"):
                node.children = tuple(build(c) for c in node_doc["children"])
            return node

        return PppTree(build(doc["root"]), n_instances, n_features), doc.get("feature_names")
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"{path} is not a tree export: {exc}") from None


def export_assignment_csv(tree_or_clusters, path, depth: int | None = None, feature_ids=None) -> None:
    """feature_id,cluster_id rows covering every feature exactly once."""
    if isinstance(tree_or_clusters, PppTree):
        clusters = cut_tree(tree_or_clusters, depth)
    else:
        clusters = list(tree_or_clusters)
    pairs = []
    for ci, cluster in enumerate(clusters):
        for i in cluster.indices:
            name = feature_ids[int(i)] if feature_ids is not None else int(i)
            pairs.append((int(i), name, ci))
    pairs.sort()
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["feature_id", "cluster_id"])
        for _, name, ci in pairs:
            writer.writerow([name, ci])


def export_diagnostics_csv(tree: PppTree, path) -> None:
    """One row per (node, attempt): node_path,attempt,phi1,phi2,phi."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["node_path", "attempt", "phi1", "phi2", "phi"])
        for node in tree.nodes():
            for attempt, (o1, o2, score) in enumerate(node.attempt_stats):
                writer.writerow(
                    [node.path, attempt, _fmt(o1), _fmt(o2), "" if score is None else _fmt(score)]
                )


def report_to_dict(report) -> dict:
    """JSON-ready view of a stability report."""
    return {
        "seeds": list(report.seeds),
        "modal_frequency": report.modal_frequency,
        "split_frequencies": [
            {
                "split": None if split is None else [list(side) for side in split],
                "frequency": freq,
            }
            for split, freq in report.split_frequencies
        ],
        "root_scores": list(report.root_scores),
        "score_mean": report.score_mean,
        "score_min": report.score_min,
        "score_max": report.score_max,
        "pairwise_ari": [[float(v) for v in row] for row in report.pairwise_ari],
    }


def export_report(report, json_path, csv_path) -> None:
    """Stability report as a JSON summary plus a per-seed CSV."""
    _write_json(report_to_dict(report), json_path)
    modal_split = report.split_frequencies[0][0]
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["seed", "root_split_sizes", "root_score", "n_leaf_clusters", "matches_modal"])
        for pos, seed in enumerate(report.seeds):
            split = report.root_splits[pos]
            sizes = "" if split is None else "+".join(str(len(side)) for side in split)
            score = report.root_scores[pos]
            n_clusters = int(report.leaf_labels[pos].max()) + 1
            writer.writerow(
                [seed, sizes, "" if score is None else _fmt(score), n_clusters, split == modal_split]
            )


@dataclass(eq=False)
class RunManifest:
    """Everything needed to reproduce a run, written next to its outputs."""

    command: str
    input_path: str | None
    output_paths: dict
    master_seed: int
    config: dict
    tool_version: str = __version__
    created_utc: str = ""

    def to_dict(self) -> dict:
        return asdict(self)


def write_manifest(manifest: RunManifest, path) -> None:
    """Atomic write: the manifest appears complete or not at all."""
    _write_json(manifest.to_dict(), path)


def _write_json(doc, path) -> None:
    text = json.dumps(doc, sort_keys=True, indent=2) + "\n"
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def config_to_dict(config) -> dict:
    d = asdict(config)
    for key, value in d.items():
        if isinstance(value, tuple):
            d[key] = list(value)
    return d
