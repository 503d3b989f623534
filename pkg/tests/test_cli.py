import json

import numpy as np
import pytest

from semmap import formats
from semmap.ablation import AblationConfig
from semmap.cli import main
from semmap.geometry import Cuboid
from semmap.instances import LabeledPointCloud
from semmap.quality import ObjectMap
from semmap.trajectory import Trajectory
from semmap.vocabulary import class_id

CHAIR, TABLE = class_id("chair"), class_id("dining table")


@pytest.fixture
def maps(tmp_path):
    gt = ObjectMap([Cuboid([0, 0, 0], [1, 1, 1], CHAIR), Cuboid([3, 0, 0], [2, 1, 1], TABLE)])
    est = ObjectMap([Cuboid([0, 0, 0], [1, 1, 1], CHAIR), Cuboid([9, 0, 0], [1, 1, 1], TABLE)])
    formats.save_object_map(gt, tmp_path / "gt.json")
    formats.save_object_map(est, tmp_path / "est.json")
    return tmp_path / "est.json", tmp_path / "gt.json"


def run_json(capsys, argv):
    assert main(argv) == 0
    return json.loads(capsys.readouterr().out)


class TestEvaluate:
    def test_identical_maps(self, maps, capsys):
        _, gt = maps
        out = run_json(capsys, ["evaluate", "--est", str(gt), "--gt", str(gt), "--json"])
        assert out["OMQ"] == 1.0 and out["mAP3D"] == 1.0

    def test_one_tp_one_fp_one_fn(self, maps, capsys):
        est, gt = maps
        out = run_json(capsys, ["evaluate", "--est", str(est), "--gt", str(gt), "--omq", "--json"])
        assert (out["n_tp"], out["n_fp"], out["n_fn"]) == (1, 1, 1)
        assert out["OMQ"] == pytest.approx(1 / 3)
        assert "mAP3D" not in out

    def test_breakdown_and_table(self, maps, capsys):
        est, gt = maps
        assert main(["evaluate", "--est", str(est), "--gt", str(gt), "--breakdown"]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert [ln.split()[0] for ln in lines] == ["AP[IoU75]", "AP[IoU50]", "AP[IoU25]",
                                                  "AP[Loc]", "AP[BG]", "AP[FN]"]

    def test_csv(self, maps, capsys):
        est, gt = maps
        assert main(["evaluate", "--est", str(est), "--gt", str(gt), "--map3d", "--csv"]) == 0
        assert capsys.readouterr().out.splitlines()[0] == "metric,value"

    def test_missing_file(self, maps, tmp_path, capsys):
        assert main(["evaluate", "--est", str(tmp_path / "nope.json"), "--gt", str(maps[1])]) == 2
        assert "nope.json" in capsys.readouterr().err

    def test_malformed_file(self, maps, tmp_path):
        (tmp_path / "bad.json").write_text("{")
        assert main(["evaluate", "--est", str(tmp_path / "bad.json"), "--gt", str(maps[1])]) == 2

    def test_unknown_flag(self, maps):
        with pytest.raises(SystemExit) as info:
            main(["evaluate", "--est", str(maps[0]), "--gt", str(maps[1]), "--bogus"])
        assert info.value.code == 2

    def test_vocabulary_mismatch_is_evaluation_error(self, maps, tmp_path):
        other = ObjectMap([Cuboid([0, 0, 0], [1, 1, 1], 1)], ("cat", "dog"))
        formats.save_object_map(other, tmp_path / "other.json")
        assert main(["evaluate", "--est", str(tmp_path / "other.json"), "--gt", str(maps[1])]) == 1


def test_extract(tmp_path, rng, capsys):
    pts = np.vstack([rng.normal([0, 0, 0], 0.02, (40, 3)), rng.normal([2, 0, 0], 0.02, (40, 3))])
    formats.save_labeled_cloud(LabeledPointCloud(pts, [CHAIR] * 80), tmp_path / "c.ply")
    assert main(["extract", "--cloud", str(tmp_path / "c.ply"), "--out", str(tmp_path / "m.json")]) == 0
    assert len(formats.load_object_map(tmp_path / "m.json")) == 2
    capsys.readouterr()
    out = run_json(capsys, ["extract", "--cloud", str(tmp_path / "c.ply"), "--min-points", "50"])
    assert out["objects"] == []


def test_traj(tmp_path, rng, capsys):
    n = 30
    gt = Trajectory(np.arange(n) * 0.1, np.cumsum(rng.normal(size=(n, 3)), 0), np.tile([1.0, 0, 0, 0], (n, 1)))
    est = Trajectory(gt.timestamps, gt.positions + [1.0, 0, 0], gt.quaternions)
    formats.save_trajectory(gt, tmp_path / "gt.txt")
    formats.save_trajectory(est, tmp_path / "est.txt")
    argv = ["traj", "--est", str(tmp_path / "est.txt"), "--gt", str(tmp_path / "gt.txt"), "--json"]
    assert run_json(capsys, argv)["ATE_rmse_m"] < 1e-9
    raw = run_json(capsys, argv + ["--no-align"])
    assert raw["ATE_rmse_m"] == pytest.approx(1.0) and raw["RPE_trans_rmse_m"] < 1e-9


def test_curves(maps, tmp_path, capsys):
    est, gt = maps
    assert main(["curves", "--est", str(est), "--gt", str(gt), "--out", str(tmp_path / "cv")]) == 0
    names = sorted(p.name for p in (tmp_path / "cv").iterdir())
    assert "breakdown_Loc.csv" in names and "pr_dining_table_iou50.csv" in names
    assert len(names) == 6 + 2 * 3


def test_ablate(tmp_path, capsys):
    cfg = AblationConfig(seeds=(0,), n_frames=8, n_objects=(2, 2), cases=("I", "II"))
    formats.save_config(cfg, tmp_path / "cfg.json")
    argv = ["ablate", "--config", str(tmp_path / "cfg.json"), "--out", str(tmp_path / "out"),
            "--seed", "4"]
    assert main(argv) == 0
    out = capsys.readouterr().out
    assert out.splitlines()[1].split()[:2] == ["I", "1.000"]
    report = json.loads((tmp_path / "out" / "report.json").read_text())
    assert report["config"]["root_seed"] == 4
    assert {r["case"] for r in report["results"]} == {"I", "II"}
    for r in report["results"]:
        for curve in r["curves"].values():
            assert (tmp_path / "out" / curve["file"]).exists()


def test_module_entry_point():
    import subprocess
    import sys

    done = subprocess.run([sys.executable, "-m", "semmap", "--help"], capture_output=True, text=True)
    assert done.returncode == 0 and "evaluate" in done.stdout
