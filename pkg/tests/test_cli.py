import json
from pathlib import Path

import pytest

from reebplug.cli import main
from reebplug.diskmap import DiskMap, RadialTwist
from reebplug.numerics import RadialFunction
from reebplug.rotorus import RotForm

DESIGN = ["profile", "design", "--s", "0.01", "--delta", "0.1",
          "--rho", "0.5", "--r0", "0.1", "--r1", "0.3", "--grid", "4000"]


def run(args, out):
    return main(args + ["--out", str(out)])


def twist_dict(c: float, support: float = 1.0, radius: float = 1.0) -> dict:
    phi = DiskMap(radius, (RadialTwist(RadialFunction.bump(-c, support)),))
    return phi.to_dict()


def write_plug(path: Path, map_dict: dict, L: float = 1.0) -> Path:
    path.write_text(json.dumps({"L": L, "radius": map_dict["radius"],
                                "map": map_dict}))
    return path


def write_assembly(path: Path, **over) -> Path:
    plug = {"L": 1.0, "radius": 0.05, "map": DiskMap(0.05, ()).to_dict()}
    spec = {"eps": 0.01, "areas": [1.05], "tau_bound": 0.005,
            "plugs": [plug]}
    spec.update(over)
    path.write_text(json.dumps(spec))
    return path


def test_profile_design_pass(tmp_path, capsys):
    assert run(DESIGN, tmp_path) == 0
    out = capsys.readouterr().out
    assert "profile: pass" in out
    for name in ("curve.json", "profile_report.json", "profile_arc.svg",
                 "tau.svg", "binding_form.json"):
        assert (tmp_path / name).exists()
    report = json.loads((tmp_path / "profile_report.json").read_text())
    assert report["profile"]["passed"] is True
    assert report["tau"]["passed"] is True
    assert report["context"]["n_grid"] == 4000


def test_profile_design_infeasible(tmp_path, capsys):
    rc = run(["profile", "design", "--s", "0.5", "--delta", "0.01",
              "--rho", "0.5", "--r0", "0.1", "--r1", "0.3"], tmp_path)
    assert rc == 1
    assert "infeasible" in capsys.readouterr().err


def test_profile_verify_names_planted_violation(tmp_path, capsys):
    assert run(DESIGN, tmp_path / "good") == 0
    curve = json.loads((tmp_path / "good" / "curve.json").read_text())
    # g' > 0 at the r0 knot violates strict decrease
    curve["g"]["derivs"][2] = 0.5
    bad = tmp_path / "bad_curve.json"
    bad.write_text(json.dumps(curve))
    rc = main(["profile", "verify", str(bad), "--grid", "4000",
               "--out", str(tmp_path / "v")])
    assert rc == 1
    out = capsys.readouterr().out
    assert "FAIL at B2" in out
    report = json.loads((tmp_path / "v" / "profile_report.json").read_text())
    failed = [c["name"] for c in report["profile"]["conditions"]
              if not c["passed"]]
    assert "B2" in failed


def test_profile_design_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(DESIGN, a) == 0
    assert run(DESIGN, b) == 0
    names = sorted(p.name for p in a.iterdir())
    assert names == sorted(p.name for p in b.iterdir())
    for name in names:
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_rotorus_orbits_csv(tmp_path):
    assert run(DESIGN, tmp_path) == 0
    rc = main(["rotorus", "orbits", str(tmp_path / "binding_form.json"),
               "--tmax", "2", "--qmax", "3", "--grid", "4000",
               "--out", str(tmp_path / "orb")])
    assert rc == 0
    lines = (tmp_path / "orb" / "orbits.csv").read_text().splitlines()
    assert lines[0] == "kind,r,p,q,T"
    kinds = [ln.split(",")[0] for ln in lines[1:]]
    assert "core" in kinds


def test_rotorus_analyze_binding(tmp_path):
    assert run(DESIGN, tmp_path) == 0
    rc = main(["rotorus", "analyze", str(tmp_path / "binding_form.json"),
               "--qmax", "4", "--grid", "4000", "--tol", "1e-6",
               "--out", str(tmp_path / "an")])
    assert rc == 0
    data = json.loads((tmp_path / "an" / "analysis.json").read_text())
    assert data["contact_margin"] > 0.0
    # the outer arc has c' = 0, so only the disk-angle section survives
    assert data["sections"]["core-angle"]["available"] is False
    assert data["sections"]["disk-angle"]["tau_at_0"] == pytest.approx(
        1.0, abs=1e-12)
    assert data["t_min"]["value"] == pytest.approx(1.0 / 1.1, rel=1e-9)


def test_disk_act_and_cal(tmp_path, capsys):
    mp = tmp_path / "map.json"
    mp.write_text(json.dumps(twist_dict(1.0, 0.6, 0.8)))
    assert main(["disk", "act", str(mp), "--out", str(tmp_path)]) == 0
    act = json.loads((tmp_path / "action.json").read_text())
    # sigma(0) = amplitude * support^2 / 8 for the cubic bump profile
    assert act["sigma_center"] == pytest.approx(-1.0 * 0.36 / 8.0, abs=1e-9)
    assert act["radial"] is True
    assert main(["disk", "cal", str(mp), "--out", str(tmp_path)]) == 0
    cal = json.loads((tmp_path / "calabi.json").read_text())
    assert cal["primitive_independence"] < 2e-8


def test_disk_periodic_header(tmp_path):
    mp = tmp_path / "map.json"
    mp.write_text(json.dumps(twist_dict(0.5, 0.6, 0.8)))
    assert main(["disk", "periodic", str(mp), "--kmax", "2",
                 "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "periodic.csv").read_text().splitlines()
    assert lines[0] == "kind,r,p,q,T"


def test_plug_build_and_verify_b_fails_negative_twist(tmp_path):
    plug_file = write_plug(tmp_path / "plug.json", twist_dict(4.0))
    rc = main(["plug", "verify-b", str(plug_file), "--n", "3",
               "--eps", "0.7", "--kmax", "3", "--out", str(tmp_path)])
    assert rc == 1
    rep = json.loads((tmp_path / "report_b.json").read_text())
    b3 = [c for c in rep["checks"] if c["name"] == "b3"][0]
    assert not b3["passed"]
    assert abs(complex(*b3["witness"])) < 1e-6


def test_plug_verify_a_identity(tmp_path):
    plug_file = write_plug(tmp_path / "plug.json",
                           DiskMap(0.05, ()).to_dict())
    rc = main(["plug", "verify-a", str(plug_file), "--eps", "0.01",
               "--kmax", "2", "--out", str(tmp_path)])
    assert rc == 0
    rc = main(["plug", "verify-a", str(plug_file), "--eps", "0.005",
               "--kmax", "2", "--out", str(tmp_path)])
    assert rc == 1


def test_plug_realize_and_volume(tmp_path, capsys):
    plug_file = write_plug(tmp_path / "plug.json", twist_dict(1.0))
    rc = main(["plug", "realize", str(plug_file), "--knots", "2049",
               "--out", str(tmp_path)])
    assert rc == 0
    form = RotForm.from_dict(
        json.loads((tmp_path / "form.json").read_text()))
    assert form.radius == 1.0
    rc = main(["plug", "volume", str(plug_file), "--tol", "1e-6",
               "--out", str(tmp_path)])
    assert rc == 0
    vol = json.loads((tmp_path / "plug_volume.json").read_text())
    assert vol["spread"] < 1e-6
    assert "realized" in vol


def test_plug_rescale(tmp_path):
    plug_file = write_plug(tmp_path / "plug.json", twist_dict(1.0))
    rc = main(["plug", "rescale", str(plug_file), "--factor", "0.5",
               "--out", str(tmp_path)])
    assert rc == 0
    summary = json.loads(
        (tmp_path / "plug_rescaled_summary.json").read_text())
    assert summary["L"] == pytest.approx(0.25)
    assert summary["radius"] == pytest.approx(0.5)


def test_certify_run_frozen_value(tmp_path, capsys):
    assembly = write_assembly(tmp_path / "assembly.json")
    rc = main(["certify", "run", str(assembly), "--kmax", "2",
               "--out", str(tmp_path)])
    assert rc == 0
    assert "9801/400" in capsys.readouterr().out
    cert = json.loads((tmp_path / "certificate.json").read_text())
    assert cert["ratio"]["exact"] == "9801/400"
    assert all(step["holds"] for step in cert["trace"])
    assert "9801/400" in (tmp_path / "certificate.txt").read_text()


def test_certify_run_deterministic(tmp_path):
    assembly = write_assembly(tmp_path / "assembly.json")
    for sub in ("a", "b"):
        assert main(["certify", "run", str(assembly), "--kmax", "2",
                     "--out", str(tmp_path / sub)]) == 0
    for name in ("certificate.json", "certificate.txt"):
        assert ((tmp_path / "a" / name).read_bytes()
                == (tmp_path / "b" / name).read_bytes())


def test_certify_run_refusal_names_inequality(tmp_path, capsys):
    assembly = write_assembly(tmp_path / "assembly.json", areas=[0.5])
    rc = main(["certify", "run", str(assembly), "--kmax", "2",
               "--out", str(tmp_path)])
    assert rc == 1
    assert "area" in capsys.readouterr().err
    assert not (tmp_path / "certificate.json").exists()


def test_certify_rejects_unknown_keys(tmp_path, capsys):
    assembly = write_assembly(tmp_path / "assembly.json")
    spec = json.loads(assembly.read_text())
    spec["surprise"] = 1
    assembly.write_text(json.dumps(spec))
    rc = main(["certify", "run", str(assembly), "--out", str(tmp_path)])
    assert rc == 2
    assert "unknown keys" in capsys.readouterr().err


def test_certify_sweep_monotone(tmp_path, capsys):
    rc = main(["certify", "sweep", "--eps", "0.01,0.001,0.0001",
               "--out", str(tmp_path)])
    assert rc == 0
    sweep = json.loads((tmp_path / "sweep.json").read_text())
    ratios = [e["ratio"] for e in sweep["entries"]]
    assert sweep["monotone_increasing"] is True
    assert ratios == sorted(ratios)
    assert ratios[0] == pytest.approx(24.5025, rel=1e-12)


def test_missing_input_is_config_error(tmp_path, capsys):
    rc = main(["rotorus", "analyze", str(tmp_path / "missing.json"),
               "--out", str(tmp_path)])
    assert rc == 2


def test_bad_format_is_config_error(tmp_path, capsys):
    assert run(DESIGN + ["--format", "docx"], tmp_path) == 2
    assert "unknown output format" in capsys.readouterr().err
