"""Command-line front end: exit codes, outputs, determinism and the report renderer."""

import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from sasakigeo import cli
from sasakigeo.errors import NumericError

S2 = {"kind": "constant_curvature", "dim": 2, "curvature_constant": 1}
H3 = {"kind": "constant_curvature", "dim": 3, "curvature_constant": -1}
S3 = {"kind": "constant_curvature", "dim": 3, "curvature_constant": 1}
R2 = {"kind": "euclidean", "dim": 2}


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv("SASAKIGEO_THREADS", raising=False)
    return tmp_path


def write_config(path, **cfg):
    path.write_text(json.dumps(cfg), encoding="utf-8")
    return str(path)


def verify_cfg(workdir, name="v.json", manifold=S2, out="verify.json", **extra):
    cfg = {"manifold": manifold, "weights": {"f1": 1.0, "f2": 1.0}, "verify": {"samples": 4},
           "output": {"path": out}}
    cfg.update(extra)
    return write_config(workdir / name, **cfg)


def scan_cfg(workdir, manifold=H3, r=None, name="s.json", out="scan.csv", samples=5, **extra):
    r = r or {"start": 0.1, "stop": 1.0, "step": 0.05}
    cfg = {"manifold": manifold, "weights": {"f1": 1.0, "f2": 1.0},
           "scan": {"f1": [1.0], "f2": [1.0], "r": r, "samples": samples}, "output": {"path": out}}
    cfg.update(extra)
    return write_config(workdir / name, **cfg)


def geodesic_cfg(workdir, name="g.json", out="geo.csv", phi2=None, **block):
    geo = {"x0": [0.1, -0.2], "u0": [1.0, 0.5], "xdot0": [0.3, 0.1], "udot0": [0.2, -0.4], "T": 5.0, "dt": 1e-3}
    geo.update(block)
    phi2 = phi2 or {"kind": "linear", "coeffs": [0.3]}
    return write_config(workdir / name, manifold=R2, weights={"f1": 1.0, "phi2": phi2}, geodesic=geo,
                        output={"path": out})


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------


class TestVerify:
    def test_flat_base(self, workdir):
        cfg = verify_cfg(workdir, manifold={"kind": "euclidean", "dim": 3}, verify={"samples": 20})
        assert cli.main(["verify", "--config", cfg]) == 0
        report = json.loads((workdir / "verify.json").read_text())
        assert report["samples"] == 20
        assert max(report["summary"]["max_residual"].values()) < 1e-10

    def test_two_sphere_defaults(self, workdir):
        assert cli.main(["verify", "--config", verify_cfg(workdir)]) == 0
        summary = json.loads((workdir / "verify.json").read_text())["summary"]
        assert summary["max_residual"]["curvature"] < 1e-5
        assert summary["tolerance"]["curvature"] == 1e-5
        assert summary["pass"] is True

    def test_impossible_tolerance_fails(self, workdir):
        assert cli.main(["verify", "--config", verify_cfg(workdir), "--tol", "1e-30"]) == 1
        assert json.loads((workdir / "verify.json").read_text())["summary"]["pass"] is False

    def test_samples_flag(self, workdir):
        cli.main(["verify", "--config", verify_cfg(workdir), "--samples", "2"])
        report = json.loads((workdir / "verify.json").read_text())
        assert {r["sample"] for r in report["records"]} == {0, 1}

    def test_perturbed_default_tolerance(self, workdir):
        cfg = verify_cfg(workdir, manifold={"kind": "perturbed", "dim": 2, "bump": {"amplitude": 0.2}})
        assert cli.main(["verify", "--config", cfg, "--samples", "2"]) == 0
        assert json.loads((workdir / "verify.json").read_text())["summary"]["tolerance"]["scalar"] == 5e-3

    def test_radius_adds_sphere_bundle_checks(self, workdir):
        assert cli.main(["verify", "--config", verify_cfg(workdir, manifold=S3, radius=0.8)]) == 0
        worst = json.loads((workdir / "verify.json").read_text())["summary"]["max_residual"]
        assert set(worst) == {"curvature", "ricci", "scalar", "srm_ricci", "srm_scalar"}
        assert worst["srm_scalar"] < 1e-8

    def test_conformal_weights(self, workdir):
        cfg = verify_cfg(workdir, manifold={"kind": "euclidean", "dim": 3},
                         weights={"f1": 2.0, "phi2": {"kind": "sinusoidal", "coeffs": [0.4, -0.3], "amplitude": 0.5}})
        assert cli.main(["verify", "--config", cfg]) == 0
        worst = json.loads((workdir / "verify.json").read_text())["summary"]["max_residual"]
        assert set(worst) == {"curvature", "connection"}

    def test_csv_output(self, workdir):
        cfg = verify_cfg(workdir, output={"path": "v.csv", "format": "csv"})
        assert cli.main(["verify", "--config", cfg]) == 0
        rows = read_csv(workdir / "v.csv")
        assert rows[0] == ["sample", "quantity", "x1", "x2", "u1", "u2", "formula", "oracle",
                           "abs_residual", "rel_residual"]
        assert len(rows) == 1 + 4 * 3
        assert "records" not in json.loads((workdir / "v.summary.json").read_text())

    def test_numeric_failure_writes_partial_report(self, workdir, monkeypatch):
        original = cli._tm_sample
        calls = []

        def flaky(M, f1, f2, draw, radius=None):
            calls.append(1)
            if len(calls) == 3:
                raise NumericError("forced")
            return original(M, f1, f2, draw, radius)

        monkeypatch.setattr(cli, "_tm_sample", flaky)
        monkeypatch.setenv("SASAKIGEO_THREADS", "1")
        assert cli.main(["verify", "--config", verify_cfg(workdir)]) == 3
        report = json.loads((workdir / "verify.json").read_text())
        assert "sample 2" in report["error"]
        assert {r["sample"] for r in report["records"]} == {0, 1}


# ---------------------------------------------------------------------------
# scan
# ---------------------------------------------------------------------------


class TestScan:
    def test_hyperbolic_threshold(self, workdir):
        assert cli.main(["scan", "--config", scan_cfg(workdir)]) == 0
        summary = json.loads((workdir / "scan.json").read_text())
        (th,) = summary["thresholds"]
        assert th["bracket"] == [0.55, 0.6]
        assert th["refined"] == pytest.approx(0.56269, abs=1e-5)

    def test_three_sphere_small_radii(self, workdir):
        assert cli.main(["scan", "--config", scan_cfg(workdir, manifold=S3)]) == 0
        summary = json.loads((workdir / "scan.json").read_text())
        assert summary["message"] == "no sign change; all positive"

    def test_surface_note(self, workdir):
        assert cli.main(["scan", "--config", scan_cfg(workdir, manifold=S2, r=[0.5, 1.0])]) == 0
        summary = json.loads((workdir / "scan.json").read_text())
        assert summary["thresholds"] == [] and "dimension 2" in summary["note"]

    def test_csv_columns(self, workdir):
        cli.main(["scan", "--config", scan_cfg(workdir, r={"start": 0.5, "stop": 0.7, "num": 3})])
        rows = read_csv(workdir / "scan.csv")
        assert rows[0] == ["f1", "f2", "r", "min_scalar", "argmin_x1", "argmin_x2", "argmin_x3",
                           "argmin_u1", "argmin_u2", "argmin_u3", "positive"]
        assert [r[-1] for r in rows[1:]] == ["1", "0", "0"]


# ---------------------------------------------------------------------------
# geodesic
# ---------------------------------------------------------------------------


class TestGeodesic:
    def test_speed_conserved(self, workdir):
        assert cli.main(["geodesic", "--config", geodesic_cfg(workdir, drift_tolerance=1e-6)]) == 0
        summary = json.loads((workdir / "geo.json").read_text())
        assert summary["relative_speed_drift"] < 1e-6
        assert summary["states"] == 5001
        rows = read_csv(workdir / "geo.csv")
        assert rows[0] == ["t", "x1", "x2", "u1", "u2", "xdot1", "xdot2", "udot1", "udot2", "g_speed"]
        assert len(rows) == 5002

    def test_straight_line(self, workdir):
        cfg = geodesic_cfg(workdir, phi2={"kind": "linear", "coeffs": [0.0]}, dt=0.1)
        assert cli.main(["geodesic", "--config", cfg]) == 0
        summary = json.loads((workdir / "geo.json").read_text())
        assert summary["relative_speed_drift"] == 0.0
        assert summary["speed_trend"] == "constant"
        end = np.array(read_csv(workdir / "geo.csv")[-1], dtype=float)
        np.testing.assert_allclose(end[1:3], np.array([0.1, -0.2]) + 5.0 * np.array([0.3, 0.1]), atol=1e-12)

    def test_convergence_study(self, workdir):
        assert cli.main(["geodesic", "--config", geodesic_cfg(workdir, convergence_study=True)]) == 0
        summary = json.loads((workdir / "geo.json").read_text())
        assert summary["study_dt"] == 0.1
        assert summary["observed_order"] == pytest.approx(4.0, abs=0.3)

    def test_drift_tolerance_failure(self, workdir):
        assert cli.main(["geodesic", "--config", geodesic_cfg(workdir, dt=0.5, drift_tolerance=1e-14)]) == 1

    def test_divergence(self, workdir):
        cfg = geodesic_cfg(workdir, phi2={"kind": "linear", "coeffs": [3.0]}, udot0=[50.0, 0.0], xdot0=[0.0, 0.0],
                           T=10.0, dt=0.05)
        assert cli.main(["geodesic", "--config", cfg]) == 3
        assert "error" in json.loads((workdir / "geo.json").read_text())
        assert len(read_csv(workdir / "geo.csv")) >= 2

    def test_curved_base_rejected(self, workdir):
        cfg = write_config(workdir / "g.json", manifold=S2, weights={"f1": 1.0, "phi2": {"kind": "linear"}},
                           geodesic={"x0": [1, 0], "u0": [0, 0], "xdot0": [0, 0], "udot0": [0, 1], "T": 1, "dt": 0.1})
        assert cli.main(["geodesic", "--config", cfg]) == 2


# ---------------------------------------------------------------------------
# Configuration errors
# ---------------------------------------------------------------------------


class TestConfigErrors:
    @pytest.mark.parametrize(
        "cfg",
        [
            {"manifold": S2, "weights": {"f1": 1, "f2": 1}},
            {"manifold": S2, "weights": {"f1": 1, "f2": 1}, "verify": {}, "scan": {"f1": [1], "f2": [1], "r": [1]}},
            {"manifold": S2, "weights": {"f1": 1, "f2": 1}, "verify": {"tolerence": {}}},
            {"manifold": S2, "weights": {"f1": -1, "f2": 1}, "verify": {}},
            {"manifold": {"kind": "torus", "dim": 2}, "weights": {"f1": 1, "f2": 1}, "verify": {}},
            {"manifold": S2, "weights": {"f1": 1}, "verify": {}},
        ],
    )
    def test_invalid(self, workdir, cfg, capsys):
        path = write_config(workdir / "bad.json", **cfg)
        assert cli.main(["verify", "--config", path]) == 2
        assert "configuration error" in capsys.readouterr().err

    def test_not_json(self, workdir):
        (workdir / "x.json").write_text("{nope")
        assert cli.main(["verify", "--config", str(workdir / "x.json")]) == 2

    def test_missing_config(self, workdir):
        assert cli.main(["scan", "--config", str(workdir / "absent.json")]) == 2

    def test_block_mismatch(self, workdir):
        assert cli.main(["scan", "--config", verify_cfg(workdir)]) == 2

    def test_output_would_overwrite_config(self, workdir):
        cfg = verify_cfg(workdir, name="same.json", out="same.json")
        before = (workdir / "same.json").read_text()
        assert cli.main(["verify", "--config", cfg]) == 2
        assert (workdir / "same.json").read_text() == before

    def test_bad_thread_setting(self, workdir, monkeypatch):
        monkeypatch.setenv("SASAKIGEO_THREADS", "many")
        assert cli.main(["verify", "--config", verify_cfg(workdir)]) == 2

    def test_bad_samples_flag(self, workdir):
        assert cli.main(["verify", "--config", verify_cfg(workdir), "--samples", "0"]) == 2

    def test_unknown_command(self):
        with pytest.raises(SystemExit) as info:
            cli.main(["plot"])
        assert info.value.code == 2


# ---------------------------------------------------------------------------
# Determinism
# ---------------------------------------------------------------------------


class TestDeterminism:
    def test_verify_byte_identical(self, workdir, monkeypatch):
        cfg_a = verify_cfg(workdir, name="a.json", out="a.json.out")
        cfg_b = verify_cfg(workdir, name="b.json", out="b.json.out")
        assert cli.main(["verify", "--config", cfg_a]) == 0
        monkeypatch.setenv("SASAKIGEO_THREADS", "2")
        assert cli.main(["verify", "--config", cfg_b]) == 0
        assert (workdir / "a.json.out").read_bytes() == (workdir / "b.json.out").read_bytes()

    def test_scan_byte_identical(self, workdir, monkeypatch):
        cli.main(["scan", "--config", scan_cfg(workdir, name="cfg_a.json", out="a.csv")])
        monkeypatch.setenv("SASAKIGEO_THREADS", "3")
        cli.main(["scan", "--config", scan_cfg(workdir, name="cfg_b.json", out="b.csv")])
        assert (workdir / "a.csv").read_bytes() == (workdir / "b.csv").read_bytes()
        a = json.loads((workdir / "a.json").read_text())
        b = json.loads((workdir / "b.json").read_text())
        assert a == b

    def test_seed_changes_samples(self, workdir):
        cli.main(["verify", "--config", verify_cfg(workdir, name="a.json", out="a.out")])
        cli.main(["verify", "--config", verify_cfg(workdir, name="b.json", out="b.out", seed=7)])
        a = json.loads((workdir / "a.out").read_text())
        b = json.loads((workdir / "b.out").read_text())
        assert a["seed"] == 42 and b["seed"] == 7
        assert a["records"][0]["x"] != b["records"][0]["x"]

    def test_seventeen_digits(self, workdir):
        cli.main(["scan", "--config", scan_cfg(workdir, r=[0.3])])
        value = read_csv(workdir / "scan.csv")[1][3]
        assert float(value) == float(f"{float(value):.17g}")
        assert len(value.replace("-", "").replace(".", "").split("e")[0].lstrip("0")) == 17


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------


class TestReport:
    def test_verify_table(self, workdir, capsys):
        cli.main(["verify", "--config", verify_cfg(workdir)])
        capsys.readouterr()
        assert cli.main(["report", "--input", "verify.json"]) == 0
        out = capsys.readouterr().out
        assert "curvature" in out and "ricci" in out and "scalar" in out

    def test_scan_frontier_sorted_by_r(self, workdir, capsys):
        cli.main(["scan", "--config", scan_cfg(workdir, r=[0.9, 0.3, 0.6])])
        capsys.readouterr()
        assert cli.main(["report", "--input", "scan.csv"]) == 0
        out = capsys.readouterr().out
        assert out.index("0.3") < out.index("0.6") < out.index("0.9")

    def test_trajectory(self, workdir, capsys):
        cli.main(["geodesic", "--config", geodesic_cfg(workdir, dt=0.5)])
        capsys.readouterr()
        assert cli.main(["report", "--input", "geo.csv"]) == 0
        out = capsys.readouterr().out
        assert "relative_speed_drift" in out and "initial_speed" in out

    def test_empty_csv(self, workdir, capsys):
        (workdir / "empty.csv").write_text("")
        assert cli.main(["report", "--input", "empty.csv"]) == 0
        assert "no data" in capsys.readouterr().out

    def test_missing_input(self, workdir):
        assert cli.main(["report", "--input", "nothing.json"]) == 2


def test_module_entry_point(workdir):
    proc = subprocess.run([sys.executable, "-m", "sasakigeo", "report", "--input", "missing.csv"],
                          capture_output=True, text=True)
    assert proc.returncode == 2
    assert "configuration error" in proc.stderr
