import csv
import json

import numpy as np
import pytest

from siroc.cli import main
from siroc.raster_io import Raster, load_confidence, load_mask, save_mask, save_raster


@pytest.fixture(scope="module")
def small_pair(tmp_path_factory):
    root = tmp_path_factory.mktemp("pair")
    rng = np.random.default_rng(0)
    pre = rng.uniform(0.2, 1.0, (3, 48, 48)).astype(np.float32)
    post = pre.copy()
    post[:, 20:30, 10:20] *= 2
    gt = np.zeros((48, 48), bool)
    gt[20:30, 10:20] = True
    save_raster(Raster(pre), root / "pre.raw")
    save_raster(Raster(post), root / "post.raw")
    save_mask(gt, root / "gt.png")
    return root


ARGS = ["--n-max", "24"]


def test_detect_identical_pair(tmp_path, small_pair):
    pre = str(small_pair / "pre.raw")
    assert main(["detect", pre, pre, "--out", str(tmp_path)]) == 0
    assert not load_mask(tmp_path / "mask.png").any()
    manifest = json.loads((tmp_path / "run.json").read_text())
    assert manifest["member_count"] == 25 and manifest["params"]["n_max"] == 200
    assert len(manifest["otsu_thresholds"]) == 25
    assert "wall_time_s" in manifest and "digest" in manifest


def test_detect_outputs_and_no_morph(tmp_path, small_pair):
    rc = main(["detect", str(small_pair / "pre.raw"), str(small_pair / "post.raw"), "--out", str(tmp_path), "--no-morph", *ARGS])
    assert rc == 0
    manifest = json.loads((tmp_path / "run.json").read_text())
    assert manifest["params"]["use_morphology"] is False
    conf_png = load_confidence(tmp_path / "confidence.png")
    conf_raw = load_confidence(tmp_path / "confidence.raw")
    assert np.abs(conf_png - conf_raw).max() <= 1 / 65535
    assert load_mask(tmp_path / "mask.png")[20:30, 10:20].mean() > 0.8


def test_detect_tiff(tmp_path, small_pair):
    rc = main(["detect", str(small_pair / "pre.raw"), str(small_pair / "post.raw"), "--out", str(tmp_path), "--format", "tiff", *ARGS])
    assert rc == 0 and (tmp_path / "confidence.tif").exists()


def test_detect_reruns_identical(tmp_path, small_pair):
    args = ["detect", str(small_pair / "pre.raw"), str(small_pair / "post.raw"), *ARGS]
    main([*args, "--out", str(tmp_path / "a")])
    main([*args, "--out", str(tmp_path / "b")])
    for name in ("mask.png", "confidence.png", "confidence.raw"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    da = json.loads((tmp_path / "a" / "run.json").read_text())
    db = json.loads((tmp_path / "b" / "run.json").read_text())
    assert da["digest"] == db["digest"]


def test_config_precedence(tmp_path, small_pair):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"n_max": 32, "s": 4, "v": 0.3}))
    rc = main(["detect", str(small_pair / "pre.raw"), str(small_pair / "post.raw"), "--out", str(tmp_path), "--config", str(cfg), "--step", "8"])
    assert rc == 0
    params = json.loads((tmp_path / "run.json").read_text())["params"]
    assert (params["n_max"], params["s"], params["v"]) == (32, 8, 0.3)


def test_vanilla_flag(tmp_path, small_pair):
    rc = main(["detect", str(small_pair / "pre.raw"), str(small_pair / "post.raw"), "--out", str(tmp_path), "--vanilla-hsr", *ARGS])
    manifest = json.loads((tmp_path / "run.json").read_text())
    assert rc == 0 and manifest["method"] == "vanilla-hsr" and manifest["members"] == [[0, 24]]


def test_missing_input_exit_2(tmp_path, small_pair):
    assert main(["detect", str(small_pair / "pre.raw"), str(tmp_path / "none.raw"), "--out", str(tmp_path)]) == 2


def test_shape_mismatch_exit_2(tmp_path, small_pair):
    save_raster(Raster(np.ones((3, 10, 10), np.float32)), tmp_path / "other.raw")
    assert main(["detect", str(small_pair / "pre.raw"), str(tmp_path / "other.raw"), "--out", str(tmp_path)]) == 2
    save_mask(np.ones((10, 10), bool), tmp_path / "m.png")
    assert main(["evaluate", "--mask", str(tmp_path / "m.png"), "--gt", str(small_pair / "gt.png"), "--out", str(tmp_path / "e.csv")]) == 2


def test_usage_errors_exit_1(tmp_path, small_pair):
    assert main([]) == 1
    assert main(["detect", "--out", str(tmp_path)]) == 1
    assert main(["detect", "a.raw", "b.raw", "--out", str(tmp_path), "--vote", "2"]) == 1
    assert main(["synth", "does-not-exist", "--out", str(tmp_path)]) == 1


def test_evaluate_perfect_and_macro(tmp_path, small_pair):
    gt = str(small_pair / "gt.png")
    empty = tmp_path / "empty.png"
    save_mask(np.zeros((48, 48), bool), empty)
    out = tmp_path / "m.csv"
    rc = main(["evaluate", "--mask", gt, "--gt", gt, "--mask", str(empty), "--gt", gt, "--scene", "perfect", "--scene", "empty", "--out", str(out)])
    assert rc == 0
    rows = list(csv.DictReader(out.open()))
    assert [r["scene"] for r in rows] == ["perfect", "empty", "MACRO"]
    assert all(rows[0][k] == "1.000000" for k in ("specificity", "sensitivity", "precision", "f1"))
    assert rows[1]["precision"] == "" and "precision" in rows[1]["note"]
    assert rows[2]["precision"] == "1.000000" and "precision 1/2" in rows[2]["note"]


def test_evaluate_inline_detect(tmp_path, small_pair):
    out = tmp_path / "m.csv"
    rc = main(["evaluate", "--detect", str(small_pair / "pre.raw"), str(small_pair / "post.raw"), str(small_pair / "gt.png"), "--out", str(out), *ARGS])
    assert rc == 0
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 1 and float(rows[0]["f1"]) > 0.8


def test_calibrate(tmp_path, capsys):
    ones = np.ones((20, 20), bool)
    save_raster(np.ones((20, 20), np.float32), tmp_path / "c.raw")
    save_mask(ones, tmp_path / "gt.png")
    rc = main(["calibrate", "--confidence", str(tmp_path / "c.raw"), "--gt", str(tmp_path / "gt.png"), "--out", str(tmp_path / "cal.csv")])
    assert rc == 0
    assert "monotonicity: 1.0000" in capsys.readouterr().out
    rows = list(csv.DictReader((tmp_path / "cal.csv").open()))
    assert [int(r["count"]) for r in rows] == [0] * 9 + [400]
    rc = main(["calibrate", "--confidence", str(tmp_path / "c.raw"), "--gt", str(tmp_path / "gt.png"), "--buckets", "1", "--out", str(tmp_path / "x.csv")])
    assert rc == 1


def test_calibrate_shape_mismatch(tmp_path):
    save_raster(np.ones((20, 20), np.float32), tmp_path / "c.raw")
    save_mask(np.ones((10, 10), bool), tmp_path / "gt.png")
    assert main(["calibrate", "--confidence", str(tmp_path / "c.raw"), "--gt", str(tmp_path / "gt.png"), "--out", str(tmp_path / "x.csv")]) == 2


def test_synth_twice_identical(tmp_path, capsys):
    assert main(["synth", "standard-01", "--out", str(tmp_path / "a")]) == 0
    first = capsys.readouterr().out
    assert main(["synth", "standard-01", "--out", str(tmp_path / "b")]) == 0
    assert capsys.readouterr().out == first
    assert (tmp_path / "a" / "pre.raw").read_bytes() == (tmp_path / "b" / "pre.raw").read_bytes()


def test_synth_custom_spec(tmp_path):
    spec = {"seed": 9, "width": 64, "height": 64, "n_objects": 2, "contrast": [0.3, 0.5]}
    (tmp_path / "spec.json").write_text(json.dumps(spec))
    assert main(["synth", "--spec", str(tmp_path / "spec.json"), "--out", str(tmp_path / "s")]) == 0
    manifest = json.loads((tmp_path / "s" / "scene.json").read_text())
    assert all(manifest["spec"][k] == v for k, v in spec.items())


def test_synth_placement_failure_exit_3(tmp_path):
    spec = {"width": 64, "height": 64, "n_objects": 40, "object_size": [30, 40]}
    (tmp_path / "spec.json").write_text(json.dumps(spec))
    assert main(["synth", "--spec", str(tmp_path / "spec.json"), "--out", str(tmp_path / "s")]) == 3


def test_baseline_global_shift(tmp_path):
    assert main(["synth", "global-shift-01", "--out", str(tmp_path / "s")]) == 0
    s = tmp_path / "s"
    assert main(["baseline", str(s / "pre.raw"), str(s / "post.raw"), "--out", str(tmp_path / "cva")]) == 0
    assert main(["detect", str(s / "pre.raw"), str(s / "post.raw"), "--out", str(tmp_path / "sir")]) == 0
    gt = load_mask(s / "gt.png")
    cva = load_mask(tmp_path / "cva" / "mask.png")
    sir = load_mask(tmp_path / "sir" / "mask.png")
    assert json.loads((tmp_path / "cva" / "run.json").read_text())["method"] == "cva"
    # CVA flags the shifted background, SiROC does not
    assert (cva & ~gt).sum() > 1000
    assert (sir & ~gt).sum() < 50


def test_baseline_identical_pair(tmp_path, small_pair):
    pre = str(small_pair / "pre.raw")
    assert main(["baseline", pre, pre, "--out", str(tmp_path), "--morph"]) == 0
    assert not load_mask(tmp_path / "mask.png").any()
