import json
from pathlib import Path

import numpy as np
import pytest

from ringmot.cli import main
from ringmot.measure1d import GridDensity
from ringmot.seidl import plan_from_csv


@pytest.fixture()
def specs(tmp_path):
    ring = {"kind": "ring", "profile": {"kind": "inverse", "params": {"scale": 1.0}}}
    cost = tmp_path / "ring.json"
    cost.write_text(json.dumps(ring))
    density = tmp_path / "uniform.json"
    density.write_text(json.dumps(GridDensity.uniform().to_spec()))
    return {"cost": str(cost), "density": str(density), "dir": tmp_path}


def run(args):
    return main(args)


def data_files(out: Path):
    return sorted(p for p in out.iterdir() if p.name != "manifest.json")


class TestExitCodes:
    def test_expected_verdict(self, specs, tmp_path):
        out = tmp_path / "ok"
        code = run(["check-wellordering", "--cost", specs["cost"], "--grid", "16",
                    "--expect", "well_ordering", "--out", str(out)])
        assert code == 0

    def test_verdict_mismatch_is_failure(self, specs, tmp_path):
        out = tmp_path / "bad"
        code = run(["check-wellordering", "--cost", specs["cost"], "--grid", "16",
                    "--expect", "violated", "--out", str(out)])
        assert code == 1

    def test_missing_file(self, specs, tmp_path, capsys):
        code = run(["mmot-solve", "--density", str(tmp_path / "nope.json"),
                    "--cost", specs["cost"], "--n", "2", "--m", "4",
                    "--out", str(tmp_path / "x")])
        assert code == 2
        assert "nope.json" in capsys.readouterr().err

    def test_malformed_json(self, specs, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text('{"kind": "ring",,}')
        code = run(["check-wellordering", "--cost", str(bad), "--out", str(tmp_path / "y")])
        assert code == 2
        err = capsys.readouterr().err
        assert "line" in err and "column" in err

    def test_guard_violation(self, specs, tmp_path, capsys):
        code = run(["mmot-solve", "--density", specs["density"], "--cost", specs["cost"],
                    "--n", "3", "--m", "60", "--out", str(tmp_path / "z")])
        assert code == 2
        assert "guard" in capsys.readouterr().err


class TestArtifacts:
    def test_plan_roundtrip(self, specs, tmp_path):
        out = tmp_path / "plan"
        assert run(["seidl-plan", "--density", specs["density"], "--n", "2", "--m", "4",
                    "--cost", specs["cost"], "--out", str(out)]) == 0
        plan = plan_from_csv(out / "plan.csv")
        assert plan.atoms.shape == (4, 2)
        summary = json.loads((out / "summary.json").read_text())
        assert summary["cost"] == pytest.approx(1.0)

    def test_mmot_outputs(self, specs, tmp_path):
        out = tmp_path / "mmot"
        assert run(["mmot-solve", "--density", specs["density"], "--cost", specs["cost"],
                    "--n", "2", "--m", "4", "--out", str(out)]) == 0
        result = json.loads((out / "result.json").read_text())
        assert result["status"] == "optimal"
        assert result["value"] == pytest.approx(1.0, abs=1e-12)
        assert (out / "plan.csv").exists() and (out / "duals.csv").exists()
        manifest = json.loads((out / "manifest.json").read_text())
        assert set(manifest["inputs"]) == {specs["density"], specs["cost"]}

    def test_kantorovich_certificate(self, specs, tmp_path):
        out = tmp_path / "kant"
        assert run(["kantorovich", "--density", specs["density"], "--cost", specs["cost"],
                    "--n", "2", "--grid", "64", "--m", "8", "--out", str(out)]) == 0
        cert = json.loads((out / "certificate.json").read_text())
        assert cert["passed"] is True
        rows = (out / "potential.csv").read_text().strip().splitlines()
        assert rows[0] == "x,v" and len(rows) == 65

    def test_semiclassical_outputs(self, specs, tmp_path):
        out = tmp_path / "semi"
        assert run(["semiclassical", "--density", specs["density"], "--cost", specs["cost"],
                    "--n", "2", "--eps", "1e-1,1e-2", "--m", "16", "--out", str(out)]) == 0
        slope = json.loads((out / "slope.json").read_text())
        assert slope["reference"] == pytest.approx(1.0, abs=1e-6)
        rows = (out / "curve.csv").read_text().strip().splitlines()
        assert rows[0] == "eps,eta,kinetic,interaction,bound"
        assert len(rows) == 3


class TestDeterminism:
    @pytest.mark.parametrize(
        "cmd",
        [
            ["check-wellordering", "--cost", "{cost}", "--grid", "16", "--seed", "7"],
            ["seidl-plan", "--density", "{density}", "--n", "2", "--m", "4"],
            ["swap-demo", "--members", "1,3,4,8,9,11,12"],
            ["mmot-solve", "--density", "{density}", "--cost", "{cost}", "--n", "2", "--m", "4"],
            ["kantorovich", "--density", "{density}", "--cost", "{cost}",
             "--n", "2", "--grid", "32", "--m", "4"],
            ["semiclassical", "--density", "{density}", "--cost", "{cost}",
             "--n", "2", "--eps", "1e-1,1e-2", "--m", "8"],
        ],
        ids=lambda c: c[0],
    )
    def test_byte_identical_reruns(self, specs, tmp_path, cmd):
        args = [a.format(**specs) for a in cmd]
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert run(args + ["--out", str(out1)]) == 0
        assert run(args + ["--out", str(out2)]) == 0
        files1, files2 = data_files(out1), data_files(out2)
        assert [p.name for p in files1] == [p.name for p in files2]
        for p1, p2 in zip(files1, files2):
            assert p1.read_bytes() == p2.read_bytes(), p1.name
        # manifests agree up to timing fields
        m1 = json.loads((out1 / "manifest.json").read_text())
        m2 = json.loads((out2 / "manifest.json").read_text())
        for m in (m1, m2):
            m.pop("timestamp")
            m.pop("wall_time_s")
            m["parameters"].pop("out")
        assert m1 == m2
