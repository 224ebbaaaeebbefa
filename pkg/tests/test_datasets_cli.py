"""Tests for dataset generation and persistence plus the CLI end to end."""

import json
import subprocess
import sys

import numpy as np
import pytest

from advsparse.cli import _git_blob_hash, main
from advsparse.datasets import (
    generate,
    load_dataset,
    make_gaussian_blobs,
    make_concentric_rings,
    make_xor_grid,
    save_dataset,
    sidecar_path,
    split_dataset,
)


class TestGenerators:
    def test_blob_shapes_and_labels(self):
        data = make_gaussian_blobs(6, 3, 90, 0.5, 1)
        assert data.X.shape == (90, 6) and data.y.shape == (90,)
        assert data.n_classes == 3
        np.testing.assert_array_equal(data.y, np.arange(90) % 3)
        assert data.metadata["generator"] == "gaussian-blobs"

    def test_ring_radii_track_class(self):
        data = make_concentric_rings(4, 2, 100, 0.0, 2, spacing=2.0)
        radii = np.linalg.norm(data.X, axis=1)
        np.testing.assert_allclose(radii, 2.0 * (data.y + 1), atol=1e-12)

    def test_xor_labels_at_zero_noise(self):
        data = make_xor_grid(3, 2, 200, 0.0, 3)
        expect = (data.X[:, 0] > 0) ^ (data.X[:, 1] > 0)
        np.testing.assert_array_equal(data.y, expect.astype(int))

    def test_determinism(self):
        a = generate("gaussian-blobs", 5, 2, 50, 0.8, 9)
        b = generate("gaussian-blobs", 5, 2, 50, 0.8, 9)
        c = generate("gaussian-blobs", 5, 2, 50, 0.8, 10)
        assert np.array_equal(a.X, b.X)
        assert not np.array_equal(a.X, c.X)

    def test_validation(self):
        with pytest.raises(ValueError):
            generate("mystery-blobs", 4, 2, 10, 0.5, 0)
        with pytest.raises(ValueError):
            make_gaussian_blobs(1, 2, 10, 0.5, 0)
        with pytest.raises(ValueError):
            make_gaussian_blobs(4, 2, 0, 0.5, 0)
        with pytest.raises(ValueError):
            make_gaussian_blobs(4, 2, 10, -0.1, 0)
        with pytest.raises(ValueError):
            make_xor_grid(4, 3, 10, 0.5, 0)


class TestDatasetIO:
    def test_round_trip_exact(self, tmp_path):
        data = make_gaussian_blobs(4, 2, 30, 0.6, 5)
        path = tmp_path / "d.csv"
        save_dataset(data, path)
        again = load_dataset(path)
        assert np.array_equal(data.X, again.X)
        assert np.array_equal(data.y, again.y)
        assert again.n_classes == 2
        assert again.metadata["generator"] == "gaussian-blobs"

    def test_sidecar_contents(self, tmp_path):
        data = make_gaussian_blobs(4, 3, 12, 0.6, 5)
        path = tmp_path / "d.csv"
        save_dataset(data, path)
        meta = json.loads(sidecar_path(path).read_text())
        assert meta["format_version"] == 1
        assert meta["n"] == 4 and meta["classes"] == 3 and meta["size"] == 12

    def test_resave_byte_identical(self, tmp_path):
        data = make_gaussian_blobs(3, 2, 25, 0.7, 6)
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        save_dataset(data, p1)
        save_dataset(load_dataset(p1), p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_malformed_rows_name_the_line(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("1.0,2.0,0\n1.0,oops,1\n")
        with pytest.raises(ValueError, match="bad.csv:2"):
            load_dataset(path)
        path.write_text("justone\n")
        with pytest.raises(ValueError, match="bad.csv:1"):
            load_dataset(path)
        path.write_text("")
        with pytest.raises(ValueError, match="empty"):
            load_dataset(path)
        path.write_text("1.0,2.0,0\n1.0,1\n")
        with pytest.raises(ValueError, match="widths"):
            load_dataset(path)

    def test_sidecar_dimension_mismatch(self, tmp_path):
        data = make_gaussian_blobs(3, 2, 10, 0.5, 7)
        path = tmp_path / "d.csv"
        save_dataset(data, path)
        meta = json.loads(sidecar_path(path).read_text())
        meta["n"] = 9
        sidecar_path(path).write_text(json.dumps(meta))
        with pytest.raises(ValueError, match="sidecar"):
            load_dataset(path)

    def test_load_without_sidecar(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("0.5,1.5,2\n0.25,-1.0,0\n")
        data = load_dataset(path)
        assert data.n_classes == 3 and data.metadata == {}


class TestSplitDataset:
    def test_head_tail(self):
        data = make_gaussian_blobs(3, 2, 40, 0.5, 8)
        head, tail = split_dataset(data, 30)
        assert head.X.shape == (30, 3) and tail.X.shape == (10, 3)
        np.testing.assert_array_equal(np.vstack([head.X, tail.X]), data.X)
        assert head.metadata["split"] == "head" and tail.metadata["split"] == "tail"
        assert head.metadata["split_head"] == 30 and tail.metadata["split_total"] == 40

    def test_bounds(self):
        data = make_gaussian_blobs(3, 2, 10, 0.5, 8)
        for bad in (0, 10, 11, -3):
            with pytest.raises(ValueError):
                split_dataset(data, bad)


def _run(argv) -> int:
    return main([str(a) for a in argv])


class TestCliErrors:
    def test_missing_required(self, tmp_path, capsys):
        code = _run(["gen-data", "--generator", "gaussian-blobs", "--n", 4,
                     "--seed", 1, "--out", tmp_path / "d.csv"])
        assert code == 2
        assert "missing required" in capsys.readouterr().err

    def test_unknown_config_key(self, tmp_path, capsys):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"generatr": "gaussian-blobs"}))
        code = _run(["gen-data", "--config", cfg, "--seed", 1])
        assert code == 2
        assert "unknown config keys" in capsys.readouterr().err

    def test_bad_config_json(self, tmp_path, capsys):
        cfg = tmp_path / "c.json"
        cfg.write_text("{nope")
        code = _run(["gen-data", "--config", cfg, "--seed", 1])
        assert code == 2
        assert "not valid JSON" in capsys.readouterr().err

    def test_missing_config_file(self, tmp_path, capsys):
        code = _run(["gen-data", "--config", tmp_path / "none.json", "--seed", 1])
        assert code == 2

    def test_missing_data_file(self, tmp_path, capsys):
        code = _run(["train", "--data", tmp_path / "none.csv", "--seed", 1,
                     "--eps", 0.5, "--out", tmp_path / "m.json"])
        assert code == 2

    def test_generator_value_error(self, tmp_path, capsys):
        code = _run(["gen-data", "--generator", "xor-grid", "--n", 4, "--classes", 3,
                     "--size", 10, "--seed", 1, "--out", tmp_path / "d.csv"])
        assert code == 2

    def test_test_out_needs_test_size(self, tmp_path, capsys):
        code = _run(["gen-data", "--generator", "gaussian-blobs", "--n", 4, "--size", 10,
                     "--seed", 1, "--out", tmp_path / "d.csv",
                     "--test-out", tmp_path / "t.csv"])
        assert code == 2
        assert "together" in capsys.readouterr().err


class TestCliConfigPrecedence:
    def test_flags_beat_config(self, tmp_path, capsys):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({
            "generator": "gaussian-blobs", "n": 4, "size": 20,
            "noise": 0.5, "seed": 7, "out": str(tmp_path / "d.csv"),
        }))
        assert _run(["gen-data", "--config", cfg, "--noise", 1.5]) == 0
        meta = json.loads((tmp_path / "d.json").read_text())
        assert meta["noise"] == 1.5

    def test_config_alone_suffices(self, tmp_path, capsys):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({
            "generator": "gaussian-blobs", "n": 4, "size": 20,
            "noise": 0.5, "seed": 7, "out": str(tmp_path / "d.csv"),
        }))
        assert _run(["gen-data", "--config", cfg]) == 0
        assert (tmp_path / "d.csv").exists()


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    """One gen-data + train + advtrain run shared by the CLI report tests."""
    root = tmp_path_factory.mktemp("cli")
    assert _run_quiet([
        "gen-data", "--generator", "gaussian-blobs", "--n", 4, "--size", 150,
        "--noise", 0.6, "--seed", 5, "--out", root / "train.csv",
        "--test-out", root / "test.csv", "--test-size", 50,
    ]) == 0
    assert _run_quiet([
        "train", "--data", root / "train.csv", "--test", root / "test.csv",
        "--hidden", "16", "--epochs", 8, "--lr", 0.2, "--eps", 1.0,
        "--seed", 3, "--out", root / "std.json",
    ]) == 0
    assert _run_quiet([
        "advtrain", "--data", root / "train.csv", "--test", root / "test.csv",
        "--hidden", "16", "--epochs", 8, "--lr", 0.2, "--eps", 1.0, "--steps", 5,
        "--seed", 3, "--out", root / "adv.json",
    ]) == 0
    return root


def _run_quiet(argv) -> int:
    import contextlib
    import io

    with contextlib.redirect_stdout(io.StringIO()):
        return _run(argv)


class TestCliPipeline:
    def test_gen_data_split_files(self, pipeline):
        train = load_dataset(pipeline / "train.csv")
        test = load_dataset(pipeline / "test.csv")
        assert train.X.shape == (150, 4) and test.X.shape == (50, 4)
        assert train.metadata["split"] == "head" and test.metadata["split"] == "tail"

    def test_metrics_files(self, pipeline):
        for name in ("std", "adv"):
            metrics = json.loads((pipeline / f"{name}.metrics.json").read_text())
            assert metrics["format_version"] == 1
            assert metrics["command"] == ("advtrain" if name == "adv" else "train")
            for key in ("train_acc", "test_acc", "nat_acc", "adv_acc"):
                assert 0.0 <= metrics[key] <= 1.0
            assert metrics["model_hash"] == _git_blob_hash(pipeline / f"{name}.json")
            assert metrics["train_acc"] > 0.8

    def test_sparsity_report(self, pipeline, capsys):
        out = pipeline / "report.json"
        code = _run([
            "sparsity", "--model", pipeline / "std.json", "--data", pipeline / "test.csv",
            "--eps", 1.5, "--steps", 6, "--directions", 3, "--search-steps", 4,
            "--max-points", 5, "--seed", 11, "--out", out,
        ])
        assert code == 0
        doc = json.loads(out.read_text())
        assert doc["format_version"] == 1 and doc["command"] == "sparsity"
        assert set(doc["config"]).isdisjoint({"workers", "out"})
        assert doc["model_hash"] == _git_blob_hash(pipeline / "std.json")
        assert doc["dataset_hash"] == _git_blob_hash(pipeline / "test.csv")
        assert 0.0 <= doc["natural_accuracy"] <= 1.0
        assert len(doc["points"]) <= 5

    def test_sparsity_reruns_and_workers_byte_identical(self, pipeline, capsys):
        outs = [pipeline / f"rep{i}.json" for i in range(3)]
        for out, workers in zip(outs, (1, 1, 3)):
            code = _run([
                "sparsity", "--model", pipeline / "std.json", "--data",
                pipeline / "test.csv", "--eps", 1.5, "--steps", 6, "--directions", 3,
                "--search-steps", 4, "--max-points", 5, "--seed", 11,
                "--workers", workers, "--out", out,
            ])
            assert code == 0
        blobs = [o.read_bytes() for o in outs]
        assert blobs[0] == blobs[1] == blobs[2]

    def test_theory_csv_and_json(self, pipeline, capsys):
        csv_out = pipeline / "theory.csv"
        code = _run(["theory", "--n", "3,4", "--k", "1,2", "--trials", 2000,
                     "--seed", 2, "--out", csv_out])
        assert code == 0
        lines = csv_out.read_text().strip().split("\n")
        assert lines[0] == "norm,n,k,closed_form,mc_mean,mc_stderr,lower,upper"
        assert len(lines) == 1 + 2 * 4  # both norms x 2 dims x 2 ks
        l2_rows = [l for l in lines[1:] if l.startswith("l2,")]
        assert l2_rows and all(l.endswith(",,") for l in l2_rows)  # no bounds for l2
        json_out = pipeline / "theory.json"
        assert _run(["theory", "--n", "3", "--k", "1", "--trials", 2000,
                     "--seed", 2, "--out", json_out]) == 0
        doc = json.loads(json_out.read_text())
        row = doc["rows"][0]
        assert row["norm"] == "l2" and row["lower"] is None

    def test_theory_stdout(self, pipeline, capsys):
        code = _run(["theory", "--n", "3", "--k", "1", "--trials", 1000,
                     "--norm", "linf", "--seed", 2])
        assert code == 0
        out = capsys.readouterr().out
        assert out.startswith("norm,n,k,")
        assert "linf,3,1," in out

    def test_sweep_csv(self, pipeline, capsys):
        out = pipeline / "sweep.csv"
        code = _run([
            "sweep", "--model", pipeline / "adv.json", "--data", pipeline / "test.csv",
            "--eps-list", "0.8,1.6", "--steps", 6, "--directions", 2,
            "--search-steps", 3, "--max-points", 4, "--seed", 12, "--out", out,
        ])
        assert code == 0
        lines = out.read_text().strip().split("\n")
        assert lines[0] == "epsilon,nat_acc,adv_acc,residual_sparsity"
        assert len(lines) == 3
        assert lines[1].startswith("0.8,") and lines[2].startswith("1.6,")

    def test_gen_data_byte_identical_rerun(self, pipeline):
        again = pipeline / "again.csv"
        assert _run_quiet([
            "gen-data", "--generator", "gaussian-blobs", "--n", 4, "--size", 150,
            "--noise", 0.6, "--seed", 5, "--out", again,
            "--test-out", pipeline / "again_test.csv", "--test-size", 50,
        ]) == 0
        assert again.read_bytes() == (pipeline / "train.csv").read_bytes()
        assert (pipeline / "again_test.csv").read_bytes() == (pipeline / "test.csv").read_bytes()

    def test_module_entry_point(self, pipeline):
        """`python -m advsparse` works as a console entry."""
        proc = subprocess.run(
            [sys.executable, "-m", "advsparse", "theory", "--n", "3", "--k", "1",
             "--trials", "500", "--norm", "linf", "--seed", "0"],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0
        assert proc.stdout.startswith("norm,n,k,")
