"""End-to-end runs of the command-line entry points.

Everything goes through ``main(argv)`` in process, so exit codes and
artifacts are checked without subprocess overhead. Configs are small on
purpose; the point is wiring, not model quality.
"""

import json
from pathlib import Path

import numpy as np
import pytest

from simlearn.cli import main
from simlearn.datasets import edge_images, toy_images
from simlearn.image_io import save_image
from simlearn.image_ops import rescale_range
from simlearn.nn import load_checkpoint
from simlearn.sr import parse_csv

TOY_SR_DIR = str(Path(__file__).resolve().parents[1] / "data" / "toy_sr")


def write_config(directory, doc, name="run.json"):
    path = Path(directory) / name
    path.write_text(json.dumps(doc), encoding="utf-8")
    return str(path)


@pytest.fixture(scope="session")
def gray_pngs(tmp_path_factory):
    root = tmp_path_factory.mktemp("gray")
    a, b = edge_images(2, size=48, seed=11)
    paths = {}
    for name, img in (("a", a), ("b", b)):
        paths[name] = str(root / f"{name}.png")
        save_image(img, paths[name])
    small = rescale_range(toy_images(1, size=16, seed=0)[0], "signed", "unit")
    paths["small"] = str(root / "small.png")
    save_image(small, paths["small"])
    return paths


@pytest.fixture(scope="session")
def toy_png_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("toy_pngs")
    for i, img in enumerate(toy_images(10, size=16, seed=42)):
        save_image(rescale_range(img, "signed", "unit"), str(root / f"img{i:02d}.png"))
    return str(root)


AE_CONFIG = {
    "seed": 0,
    "model": "autoencoder",
    "architecture": [
        {"kind": "dense", "in_dim": 256, "out_dim": 32},
        {"kind": "tanh"},
        {"kind": "dense", "in_dim": 32, "out_dim": 16},
        {"kind": "binarize_ste"},
        {"kind": "dense", "in_dim": 16, "out_dim": 32},
        {"kind": "tanh"},
        {"kind": "dense", "in_dim": 32, "out_dim": 256},
        {"kind": "tanh"},
    ],
    "loss": {"name": "mse"},
    "optimizer": {"kind": "adam", "lr": 0.002, "batch_size": 8},
    "early_stop": {"patience": 2, "max_epochs": 5},
    "dataset": {"kind": "toy", "n": 24, "size": 16, "seed": 0},
}

ELVAE_CONFIG = {
    "seed": 1,
    "model": "elvae",
    "encoder": [
        {"kind": "dense", "in_dim": 256, "out_dim": 32},
        {"kind": "tanh"},
        {"kind": "dense", "in_dim": 32, "out_dim": 8},
    ],
    "decoder": [
        {"kind": "dense", "in_dim": 4, "out_dim": 32},
        {"kind": "tanh"},
        {"kind": "dense", "in_dim": 32, "out_dim": 256},
        {"kind": "tanh"},
    ],
    "elvae": {"c": 500, "latent_dim": 4, "mc_samples": 1},
    "loss": {"name": "mse"},
    "optimizer": {"kind": "adam", "lr": 0.002, "batch_size": 8},
    "early_stop": {"patience": 2, "max_epochs": 3},
    "dataset": {"kind": "toy", "n": 24, "size": 16, "seed": 1},
}


@pytest.fixture(scope="session")
def ae_run(tmp_path_factory):
    root = tmp_path_factory.mktemp("ae_run")
    config = write_config(root, AE_CONFIG)
    out = root / "out"
    assert main(["train", "--config", config, "--out-dir", str(out)]) == 0
    return {"config": config, "out": out, "checkpoint": str(out / "checkpoint.json")}


@pytest.fixture(scope="session")
def elvae_run(tmp_path_factory):
    root = tmp_path_factory.mktemp("elvae_run")
    config = write_config(root, ELVAE_CONFIG)
    out = root / "out"
    assert main(["train", "--config", config, "--out-dir", str(out)]) == 0
    return {"config": config, "out": out, "checkpoint": str(out / "checkpoint.json")}


class TestCompare:
    def test_identical_images(self, gray_pngs, capsys):
        assert main(["compare", gray_pngs["a"], gray_pngs["a"]]) == 0
        out = capsys.readouterr().out
        assert "psnr_db  inf" in out
        assert "ssim     1" in out
        assert "mse      0" in out

    def test_different_images(self, gray_pngs, capsys):
        assert main(["compare", gray_pngs["a"], gray_pngs["b"]]) == 0
        out = capsys.readouterr().out
        value = float(out.splitlines()[0].split()[1])
        assert np.isfinite(value)

    def test_size_mismatch_is_usage_error(self, gray_pngs, capsys):
        assert main(["compare", gray_pngs["a"], gray_pngs["small"]]) == 2
        assert "differ" in capsys.readouterr().err

    def test_missing_file(self, gray_pngs):
        assert main(["compare", gray_pngs["a"], gray_pngs["a"] + ".nope"]) == 2

    def test_small_image_skips_ms_ssim(self, gray_pngs, capsys):
        assert main(["compare", gray_pngs["small"], gray_pngs["small"],
                     "--scales", "5"]) == 0
        assert "ms_ssim  n/a" not in capsys.readouterr().out  # 16px still allows M=1


class TestGradCheck:
    CONFIG = {"seed": 0, "grad_check": {"pairs": 1, "ssim_size": 16,
                                        "ms_size": 48, "ms_scales": 2}}

    def test_all_pass(self, tmp_path, capsys):
        config = write_config(tmp_path, self.CONFIG)
        assert main(["grad-check", "--config", config]) == 0
        out = capsys.readouterr().out
        assert "all checks passed" in out
        assert "FAIL" not in out

    def test_corrupt_hook_fails(self, tmp_path, capsys):
        doc = json.loads(json.dumps(self.CONFIG))
        doc["grad_check"]["corrupt"] = "dense"
        config = write_config(tmp_path, doc)
        assert main(["grad-check", "--config", config]) == 1
        out = capsys.readouterr().out
        assert "FAIL" in out
        assert "1 check(s) failed" in out

    def test_corrupt_unknown_name(self, tmp_path, capsys):
        doc = json.loads(json.dumps(self.CONFIG))
        doc["grad_check"]["corrupt"] = "dens"
        config = write_config(tmp_path, doc)
        assert main(["grad-check", "--config", config]) == 2
        assert "unknown check" in capsys.readouterr().err

    def test_output_is_deterministic(self, tmp_path, capsys):
        config = write_config(tmp_path, self.CONFIG)
        main(["grad-check", "--config", config])
        first = capsys.readouterr().out
        main(["grad-check", "--config", config])
        assert capsys.readouterr().out == first


class TestTrain:
    def test_artifacts_written(self, ae_run):
        out = ae_run["out"]
        assert (out / "checkpoint.json").is_file()
        assert (out / "report.csv").is_file()
        grids = sorted(out.glob("recon_epoch*.png"))
        assert grids and grids[0].name == "recon_epoch000.png"

    def test_loss_decreased(self, ae_run):
        lines = (ae_run["out"] / "report.csv").read_text().splitlines()
        assert lines[0] == "epoch,train_loss,valid_metric"
        baseline = float(lines[1].split(",")[2])
        best = min(float(row.split(",")[2]) for row in lines[1:])
        assert best < baseline

    def test_checkpoint_round_trip(self, ae_run):
        ckpt = load_checkpoint(ae_run["checkpoint"])
        assert ckpt.kind == "autoencoder"
        assert ckpt.meta["image_shape"] == [16, 16]
        assert ckpt.meta["bottleneck"] == 3  # layer index right after binarize

    def test_same_seed_same_bytes(self, ae_run, tmp_path):
        out = tmp_path / "again"
        assert main(["train", "--config", ae_run["config"],
                     "--out-dir", str(out)]) == 0
        first = Path(ae_run["checkpoint"]).read_bytes()
        assert (out / "checkpoint.json").read_bytes() == first
        assert ((out / "report.csv").read_bytes()
                == (ae_run["out"] / "report.csv").read_bytes())

    def test_seed_override_changes_weights(self, ae_run, tmp_path):
        out = tmp_path / "reseeded"
        assert main(["train", "--config", ae_run["config"], "--seed", "9",
                     "--out-dir", str(out)]) == 0
        assert ((out / "checkpoint.json").read_bytes()
                != Path(ae_run["checkpoint"]).read_bytes())

    def test_elvae_checkpoint_kind(self, elvae_run):
        ckpt = load_checkpoint(elvae_run["checkpoint"])
        assert ckpt.kind == "elvae"
        assert set(ckpt.networks) == {"encoder", "decoder"}
        assert ckpt.meta["c"] == 500

    def test_unknown_config_key(self, tmp_path, capsys):
        config = write_config(tmp_path, {"model": "autoencoder", "epochs": 5})
        assert main(["train", "--config", config, "--out-dir",
                     str(tmp_path / "o")]) == 2
        assert "epochs" in capsys.readouterr().err

    def test_missing_blocks(self, tmp_path, capsys):
        config = write_config(tmp_path, {"model": "autoencoder",
                                         "loss": {"name": "mse"}})
        assert main(["train", "--config", config, "--out-dir",
                     str(tmp_path / "o")]) == 2
        assert "dataset" in capsys.readouterr().err

    def test_out_dir_required(self, tmp_path, capsys):
        config = write_config(tmp_path, AE_CONFIG)
        assert main(["train", "--config", config]) == 2
        assert "output directory" in capsys.readouterr().err


class TestSample:
    def test_writes_n_images(self, elvae_run, tmp_path):
        out = tmp_path / "s"
        assert main(["sample", elvae_run["checkpoint"], "--n", "3",
                     "--out-dir", str(out)]) == 0
        names = sorted(p.name for p in out.glob("*.png"))
        assert names == ["sample000.png", "sample001.png", "sample002.png"]

    def test_seeded_runs_match(self, elvae_run, tmp_path):
        outs = [tmp_path / "s1", tmp_path / "s2"]
        for out in outs:
            assert main(["sample", elvae_run["checkpoint"], "--n", "2",
                         "--seed", "5", "--out-dir", str(out)]) == 0
        for name in ("sample000.png", "sample001.png"):
            assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()

    def test_zero_samples(self, elvae_run, tmp_path):
        out = tmp_path / "empty"
        assert main(["sample", elvae_run["checkpoint"], "--n", "0",
                     "--out-dir", str(out)]) == 0
        assert list(out.glob("*.png")) == []

    def test_rejects_autoencoder_checkpoint(self, ae_run, tmp_path, capsys):
        assert main(["sample", ae_run["checkpoint"], "--n", "1",
                     "--out-dir", str(tmp_path / "s")]) == 2
        assert "elvae" in capsys.readouterr().err


class TestSrEval:
    def _config(self, directory, **extra):
        doc = {"sr": {"hr_dir": TOY_SR_DIR, "scale": 2,
                      "methods": [{"name": "bicubic"}], **extra}}
        return write_config(directory, doc)

    def test_bicubic_report(self, tmp_path, capsys):
        out = tmp_path / "r"
        assert main(["sr-eval", "--config", self._config(tmp_path),
                     "--out-dir", str(out)]) == 0
        stdout = capsys.readouterr().out
        assert "| psnr_db |" in stdout
        rows = parse_csv((out / "sr_report.csv").read_text())
        assert len(rows) == 5
        assert all(row.method == "bicubic" for row in rows)
        assert all(20.0 < row.psnr_db < 80.0 for row in rows)
        assert (out / "sr_report.md").is_file()

    def test_runs_are_byte_identical(self, tmp_path):
        config = self._config(tmp_path)
        outs = [tmp_path / "r1", tmp_path / "r2"]
        for out in outs:
            assert main(["sr-eval", "--config", config, "--out-dir", str(out)]) == 0
        for name in ("sr_report.csv", "sr_report.md"):
            assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()

    def test_untrained_residual_matches_bicubic(self, tmp_path):
        doc = {
            "sr": {
                "hr_dir": TOY_SR_DIR,
                "scale": 2,
                "methods": [
                    {"name": "bicubic"},
                    {
                        "name": "zero-net",
                        "architecture": [
                            {"kind": "conv2d", "in_channels": 1, "filters": 4,
                             "kernel": 3, "padding": "same"},
                            {"kind": "relu"},
                            {"kind": "conv2d", "in_channels": 4, "filters": 1,
                             "kernel": 3, "padding": "same"},
                        ],
                        "init": "gaussian",
                        "gaussian_std": 0.0,
                    },
                ],
            }
        }
        out = tmp_path / "r"
        assert main(["sr-eval", "--config", write_config(tmp_path, doc),
                     "--out-dir", str(out)]) == 0
        rows = parse_csv((out / "sr_report.csv").read_text())
        by_method = {}
        for row in rows:
            by_method.setdefault(row.method, []).append(row.psnr_db)
        assert by_method["zero-net"] == by_method["bicubic"]

    def test_missing_dir(self, tmp_path, capsys):
        doc = {"sr": {"hr_dir": str(tmp_path / "nowhere"), "scale": 2,
                      "methods": [{"name": "bicubic"}]}}
        assert main(["sr-eval", "--config", write_config(tmp_path, doc),
                     "--out-dir", str(tmp_path / "r")]) == 2


class TestEncode:
    def test_feature_rows(self, ae_run, toy_png_dir, tmp_path):
        out_csv = tmp_path / "features.csv"
        assert main(["encode", ae_run["checkpoint"], toy_png_dir,
                     str(out_csv)]) == 0
        lines = out_csv.read_text().splitlines()
        assert lines[0] == "name," + ",".join(f"z{i}" for i in range(16))
        assert len(lines) == 11
        codes = {float(v) for line in lines[1:] for v in line.split(",")[1:]}
        assert codes <= {-1.0, 1.0}  # binarized bottleneck

    def test_deterministic(self, ae_run, toy_png_dir, tmp_path):
        paths = [tmp_path / "f1.csv", tmp_path / "f2.csv"]
        for path in paths:
            assert main(["encode", ae_run["checkpoint"], toy_png_dir,
                         str(path)]) == 0
        assert paths[0].read_bytes() == paths[1].read_bytes()

    def test_empty_dataset_dir(self, ae_run, tmp_path):
        empty = tmp_path / "none"
        empty.mkdir()
        out_csv = tmp_path / "features.csv"
        assert main(["encode", ae_run["checkpoint"], str(empty),
                     str(out_csv)]) == 0
        assert out_csv.read_text().splitlines() == [
            "name," + ",".join(f"z{i}" for i in range(16))
        ]

    def test_rejects_elvae_checkpoint(self, elvae_run, toy_png_dir, tmp_path,
                                      capsys):
        assert main(["encode", elvae_run["checkpoint"], toy_png_dir,
                     str(tmp_path / "f.csv")]) == 2
        assert "autoencoder" in capsys.readouterr().err


class TestSelectC:
    def _config(self, directory, **overrides):
        doc = {
            "seed": 0,
            "select_c": {
                "ref": {"kind": "gaussian", "n": 80, "dim": 4},
                "candidates": {
                    "0.5": {"kind": "gaussian", "n": 80, "dim": 4, "shift": 1.5},
                    "2": {"kind": "gaussian", "n": 80, "dim": 4, "shift": 0.0},
                },
                **overrides,
            },
        }
        return write_config(directory, doc)

    def test_picks_matching_candidate(self, tmp_path, capsys):
        assert main(["select-c", "--config", self._config(tmp_path)]) == 0
        out = capsys.readouterr().out
        assert "chosen C = 2" in out
        assert "bandwidth" in out

    def test_swapped_labels_swap_choice(self, tmp_path, capsys):
        doc = {
            "seed": 0,
            "select_c": {
                "ref": {"kind": "gaussian", "n": 80, "dim": 4},
                "candidates": {
                    "0.5": {"kind": "gaussian", "n": 80, "dim": 4, "shift": 0.0},
                    "2": {"kind": "gaussian", "n": 80, "dim": 4, "shift": 1.5},
                },
            },
        }
        assert main(["select-c", "--config", write_config(tmp_path, doc)]) == 0
        assert "chosen C = 0.5" in capsys.readouterr().out

    def test_deterministic_output(self, tmp_path, capsys):
        config = self._config(tmp_path)
        main(["select-c", "--config", config])
        first = capsys.readouterr().out
        main(["select-c", "--config", config])
        assert capsys.readouterr().out == first

    def test_explicit_bandwidth(self, tmp_path, capsys):
        assert main(["select-c", "--config",
                     self._config(tmp_path, bandwidth=2.5)]) == 0
        assert "bandwidth 2.5" in capsys.readouterr().out

    def test_checkpoint_source(self, elvae_run, tmp_path, capsys):
        doc = {
            "seed": 3,
            "select_c": {
                "ref": {"kind": "checkpoint", "path": elvae_run["checkpoint"],
                        "n_samples": 12},
                "candidates": {
                    "a": {"kind": "checkpoint", "path": elvae_run["checkpoint"],
                          "n_samples": 12},
                    "b": {"kind": "gaussian", "n": 12, "dim": 256, "shift": 4.0},
                },
            },
        }
        assert main(["select-c", "--config", write_config(tmp_path, doc)]) == 0
        assert "chosen C = a" in capsys.readouterr().out


class TestUsageErrors:
    def test_no_subcommand(self):
        with pytest.raises(SystemExit) as excinfo:
            main([])
        assert excinfo.value.code == 2

    def test_unknown_subcommand(self):
        with pytest.raises(SystemExit) as excinfo:
            main(["frobnicate"])
        assert excinfo.value.code == 2
