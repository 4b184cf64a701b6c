"""CSV ingestion and the export formats."""

import json

import numpy as np
import pytest

from ppp.data import DesignMatrix, IndexSet
from ppp.engine import PppConfig, PppNode, PppTree, build_tree, cut_tree
from ppp.errors import FormatError, ParseError, ValidationError
from ppp.fileio import (
    RunManifest,
    config_to_dict,
    export_assignment_csv,
    export_codebook_csv,
    export_diagnostics_csv,
    export_matrix_csv,
    export_mixture_json,
    export_report,
    export_tree_json,
    load_csv,
    load_tree_json,
    report_to_dict,
    tree_to_dict,
    write_manifest,
)
from ppp.gmm import init_gmm_from_codebook
from ppp.som import SomConfig, codebook_match, init_som, train_som
from ppp.synth import PlantedSpec, generate_planted, repeatability_trial


def _write(path, text):
    path.write_text(text)
    return path


class TestLoadCsv:
    def test_plain_numbers(self, tmp_path):
        p = _write(tmp_path / "m.csv", "1,2\n3,4\n")
        m = load_csv(p)
        np.testing.assert_array_equal(m.values, [[1.0, 2.0], [3.0, 4.0]])
        assert m.feature_ids is None
        assert m.instance_ids is None

    def test_header_becomes_feature_ids(self, tmp_path):
        p = _write(tmp_path / "m.csv", "alpha,beta\n1,2\n3,4\n")
        m = load_csv(p, has_header=True)
        assert m.feature_ids == ("alpha", "beta")

    def test_id_column(self, tmp_path):
        p = _write(tmp_path / "m.csv", "id,f0,f1\nr1,1,2\nr2,3,4\n")
        m = load_csv(p, has_header=True, id_column=True)
        assert m.instance_ids == ("r1", "r2")
        assert m.feature_ids == ("f0", "f1")
        np.testing.assert_array_equal(m.values, [[1.0, 2.0], [3.0, 4.0]])

    def test_alternate_delimiter(self, tmp_path):
        p = _write(tmp_path / "m.tsv", "1\t2\n3\t4\n")
        m = load_csv(p, delimiter="\t")
        assert m.values.shape == (2, 2)

    def test_parse_error_carries_data_coordinates(self, tmp_path):
        p = _write(tmp_path / "m.csv", "h0,h1\nid0,1,2\nid1,1,2\nid2,3,abc\n")
        # header and id column are stripped before counting (row 2, col 1)
        with pytest.raises(ParseError) as exc:
            load_csv(p, has_header=True, id_column=True)
        assert exc.value.row == 2
        assert exc.value.col == 1
        assert "'abc'" in str(exc.value)

    def test_ragged_rows_rejected(self, tmp_path):
        p = _write(tmp_path / "m.csv", "1,2\n3,4,5\n")
        with pytest.raises(FormatError, match="row 1 has 3 fields"):
            load_csv(p)

    def test_non_finite_rejected(self, tmp_path):
        p = _write(tmp_path / "m.csv", "1,2\nnan,4\n")
        with pytest.raises(ValidationError, match="non-finite"):
            load_csv(p)

    def test_infinity_rejected(self, tmp_path):
        p = _write(tmp_path / "m.csv", "1,inf\n3,4\n")
        with pytest.raises(ValidationError):
            load_csv(p)

    def test_empty_file_rejected(self, tmp_path):
        p = _write(tmp_path / "m.csv", "")
        with pytest.raises(FormatError, match="empty"):
            load_csv(p)

    def test_header_only_rejected(self, tmp_path):
        p = _write(tmp_path / "m.csv", "a,b\n")
        with pytest.raises(FormatError, match="no data rows"):
            load_csv(p, has_header=True)

    def test_header_width_mismatch_rejected(self, tmp_path):
        p = _write(tmp_path / "m.csv", "a,b,c\n1,2\n")
        with pytest.raises(FormatError, match="header names 3"):
            load_csv(p, has_header=True)

    def test_missing_file_raises_oserror(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_csv(tmp_path / "nope.csv")


class TestMatrixRoundTrip:
    def test_values_survive_exactly(self, tmp_path):
        rng = np.random.default_rng(0)
        m = DesignMatrix.ingest(rng.standard_normal((7, 4)) * 1e3)
        p = tmp_path / "m.csv"
        export_matrix_csv(m, p)
        back = load_csv(p)
        np.testing.assert_array_equal(back.values, m.values)

    def test_named_matrix_round_trips_names(self, tmp_path):
        m = DesignMatrix.ingest(
            np.array([[1.5, 2.5], [3.5, 4.5]]),
            instance_ids=("r0", "r1"),
            feature_ids=("f0", "f1"),
        )
        p = tmp_path / "m.csv"
        export_matrix_csv(m, p)
        back = load_csv(p, has_header=True, id_column=True)
        assert back.instance_ids == ("r0", "r1")
        assert back.feature_ids == ("f0", "f1")
        np.testing.assert_array_equal(back.values, m.values)

    def test_awkward_floats_survive(self, tmp_path):
        m = DesignMatrix.ingest(np.array([[0.1, 1 / 3], [1e-17, 123456.789012345]]))
        p = tmp_path / "m.csv"
        export_matrix_csv(m, p)
        np.testing.assert_array_equal(load_csv(p).values, m.values)


class TestModelExports:
    def test_codebook_csv_shape(self, tmp_path):
        rng = np.random.default_rng(1)
        X = rng.standard_normal((30, 3))
        som = train_som(init_som(SomConfig(2, 3, seed=0), X), X)
        p = tmp_path / "codebook.csv"
        export_codebook_csv(som, p)
        lines = p.read_text().strip().split("\n")
        assert lines[0] == "unit_row,unit_col,hit_count,prior,v0,v1,v2"
        assert len(lines) == 1 + 6
        hit_total = sum(int(line.split(",")[2]) for line in lines[1:])
        assert hit_total == 30

    def test_mixture_json_fields(self, tmp_path):
        rng = np.random.default_rng(2)
        X = rng.standard_normal((25, 3))
        som = train_som(init_som(SomConfig(2, 2, seed=0), X), X)
        g = init_gmm_from_codebook(codebook_match(som, X), X)
        p = tmp_path / "mixture.json"
        export_mixture_json(g, p)
        doc = json.loads(p.read_text())
        assert doc["covariance_mode"] == g.covariance_mode
        assert len(doc["components"]) == g.n_components
        weights = [c["weight"] for c in doc["components"]]
        assert sum(weights) == pytest.approx(1.0)
        assert len(doc["components"][0]["mean"]) == 3


@pytest.fixture(scope="module")
def small_tree():
    data = generate_planted(
        PlantedSpec.even(120, 8, (2, 2), gap=4.0, noise_sigma=1.0, seed=5)
    )
    return build_tree(data.matrix, PppConfig(master_seed=3))


class TestTreeJson:
    def test_dict_shape(self, small_tree):
        doc = tree_to_dict(small_tree)
        assert doc["n_features"] == 8
        assert doc["n_instances"] == 120
        assert doc["feature_names"] is None
        root = doc["root"]
        assert root["path"] == ""
        assert root["status"] == "internal"
        assert sorted(root["feature_ids"]) == list(range(8))
        assert root["phi"] > 0
        assert len(root["children"]) == 2
        assert root["gamma1_size"] >= 1 and root["gamma2_size"] >= 1
        assert len(root["phi_trace"]) == len(small_tree.root.attempt_stats)

    def test_round_trip_preserves_skeleton(self, small_tree, tmp_path):
        p = tmp_path / "tree.json"
        export_tree_json(small_tree, p, feature_ids=[f"g{i}" for i in range(8)])
        back, names = load_tree_json(p)
        assert names == [f"g{i}" for i in range(8)]
        assert back.n_features == 8
        orig = [(n.path, n.status, tuple(n.feature_set.indices.tolist()))
                for n in small_tree.nodes()]
        loaded = [(n.path, n.status, tuple(n.feature_set.indices.tolist()))
                  for n in back.nodes()]
        assert orig == loaded

    def test_loaded_tree_cuts_identically(self, small_tree, tmp_path):
        p = tmp_path / "tree.json"
        export_tree_json(small_tree, p)
        back, _ = load_tree_json(p)
        for depth in (None, 0, 1, 2):
            a = [c.indices.tolist() for c in cut_tree(small_tree, depth)]
            b = [c.indices.tolist() for c in cut_tree(back, depth)]
            assert a == b

    def test_garbage_json_rejected(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text('{"whatever": 3}')
        with pytest.raises(FormatError, match="not a tree export"):
            load_tree_json(p)

    def test_export_is_deterministic(self, small_tree, tmp_path):
        p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
        export_tree_json(small_tree, p1)
        export_tree_json(small_tree, p2)
        assert p1.read_bytes() == p2.read_bytes()


class TestAssignmentCsv:
    def test_rows_sorted_by_feature(self, small_tree, tmp_path):
        p = tmp_path / "assign.csv"
        export_assignment_csv(small_tree, p, depth=1)
        lines = p.read_text().strip().split("\n")
        assert lines[0] == "feature_id,cluster_id"
        ids = [int(line.split(",")[0]) for line in lines[1:]]
        assert ids == list(range(8))
        clusters = {int(line.split(",")[1]) for line in lines[1:]}
        assert clusters == {0, 1}

    def test_feature_names_used_when_given(self, small_tree, tmp_path):
        p = tmp_path / "assign.csv"
        names = [f"gene{i}" for i in range(8)]
        export_assignment_csv(small_tree, p, depth=1, feature_ids=names)
        first = p.read_text().strip().split("\n")[1]
        assert first.split(",")[0] == "gene0"

    def test_accepts_cluster_list(self, tmp_path):
        clusters = [IndexSet(np.array([1, 3]), 4), IndexSet(np.array([0, 2]), 4)]
        p = tmp_path / "assign.csv"
        export_assignment_csv(clusters, p)
        rows = [line.split(",") for line in p.read_text().strip().split("\n")[1:]]
        assert rows == [["0", "1"], ["1", "0"], ["2", "1"], ["3", "0"]]


class TestDiagnosticsCsv:
    def test_per_attempt_rows(self, small_tree, tmp_path):
        p = tmp_path / "diag.csv"
        export_diagnostics_csv(small_tree, p)
        lines = p.read_text().strip().split("\n")
        assert lines[0] == "node_path,attempt,phi1,phi2,phi"
        expected = sum(len(n.attempt_stats) for n in small_tree.nodes())
        assert len(lines) == 1 + expected

    def test_undefined_score_is_empty_cell(self, tmp_path):
        data = DesignMatrix.ingest(np.full((10, 4), 2.0))
        tree = build_tree(data, PppConfig(max_split_attempts=2))
        p = tmp_path / "diag.csv"
        export_diagnostics_csv(tree, p)
        lines = p.read_text().strip().split("\n")[1:]
        assert len(lines) == 2
        assert lines[0].endswith("0.0,0.0,")  # no trailing value for None


@pytest.fixture(scope="module")
def report():
    data = generate_planted(
        PlantedSpec.even(120, 8, (2, 2), gap=4.0, noise_sigma=1.0, seed=5)
    )
    return repeatability_trial(data.matrix, PppConfig(), [0, 1])


class TestReportExport:
    def test_json_fields(self, report, tmp_path):
        jp, cp = tmp_path / "report.json", tmp_path / "report.csv"
        export_report(report, jp, cp)
        doc = json.loads(jp.read_text())
        assert doc["seeds"] == [0, 1]
        assert doc["modal_frequency"] == report.modal_frequency
        assert len(doc["pairwise_ari"]) == 2
        assert doc["split_frequencies"][0]["frequency"] == report.split_frequencies[0][1]
        assert doc["score_min"] <= doc["score_mean"] <= doc["score_max"]

    def test_csv_per_seed(self, report, tmp_path):
        jp, cp = tmp_path / "report.json", tmp_path / "report.csv"
        export_report(report, jp, cp)
        lines = cp.read_text().strip().split("\n")
        assert lines[0] == "seed,root_split_sizes,root_score,n_leaf_clusters,matches_modal"
        assert len(lines) == 3
        first = lines[1].split(",")
        assert first[0] == "0"
        assert first[1] == "4+4"
        assert first[4] == "True"

    def test_dict_round_trips_through_json(self, report):
        doc = report_to_dict(report)
        assert json.loads(json.dumps(doc)) == doc


class TestManifest:
    def test_written_fields(self, tmp_path):
        manifest = RunManifest(
            command="cluster",
            input_path="in.csv",
            output_paths={"tree": "tree.json"},
            master_seed=7,
            config=config_to_dict(PppConfig(master_seed=7)),
            created_utc="2026-01-01T00:00:00Z",
        )
        p = tmp_path / "manifest.json"
        write_manifest(manifest, p)
        doc = json.loads(p.read_text())
        assert doc["command"] == "cluster"
        assert doc["master_seed"] == 7
        assert doc["config"]["som_alpha"] == [0.5, 0.05]
        assert doc["tool_version"]
        assert not (tmp_path / "manifest.json.tmp").exists()

    def test_config_dict_is_json_ready(self):
        doc = config_to_dict(PppConfig())
        json.dumps(doc)
        assert doc["max_split_attempts"] == 20
