import csv
import json

import numpy as np
import pytest
from click.testing import CliRunner

from plasmodes.cli import DEFAULT_CONFIG, main
from plasmodes.material import DrudeMaterial
from plasmodes.pipeline import build_mesh, build_pipeline

SMALL = {"version": 1,
         "geometry": {"refinement": 2, "grid_h": 0.25},
         "modes": {"N": 12, "n_surface": 30, "n_perturb": 12},
         "sweep": {"count": 61},
         "validate": {"td_modes": 4}}


def _write(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


def _run(*args):
    return CliRunner().invoke(main, list(args))


def _table(path):
    lines = [ln for ln in path.read_text().splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def _merge(base, over):
    out = json.loads(json.dumps(base))
    for k, v in over.items():
        out[k] = {**out.get(k, {}), **v} if isinstance(v, dict) else v
    return out


def test_default_config_is_valid_json():
    r = _run("default-config")
    assert r.exit_code == 0
    assert json.loads(r.output) == json.loads(json.dumps(DEFAULT_CONFIG))


def test_schema_violation_exit_code(tmp_path):
    cfg = _write(tmp_path, {"version": 1, "geometry": {"refinement": 2, "colour": "red"}})
    r = _run("spectrum", "--config", cfg, "--out", str(tmp_path / "o"))
    assert r.exit_code == 2
    assert not (tmp_path / "o").exists()


def test_invalid_mesh_file_leaves_no_outputs(tmp_path):
    bad = tmp_path / "bad.off"
    bad.write_text("OFF\n3 1 0\n0 0 0\n1 0 0\n")
    cfg = _write(tmp_path, _merge(SMALL, {"geometry": {"mesh_file": str(bad)}}))
    r = _run("spectrum", "--config", cfg, "--out", str(tmp_path / "o"))
    assert r.exit_code != 0
    assert not (tmp_path / "o").exists() or not any((tmp_path / "o").iterdir())


def test_spectrum_rows_and_header(tmp_path):
    out = tmp_path / "o"
    r = _run("spectrum", "--config", _write(tmp_path, SMALL), "--out", str(out))
    assert r.exit_code == 0, r.output
    rows = _table(out / "spectrum.csv")
    assert len(rows) == 12
    assert float(rows[0]["gamma"]) == pytest.approx(1 / 3, abs=1e-2)
    head = (out / "spectrum.csv").read_text().splitlines()[0]
    assert head.startswith("# plasmodes ") and " config " in head and " mesh " in head
    man = json.loads((out / "run-manifest.json").read_text())
    assert set(man["runs"]["spectrum"]["outputs"]) == {"spectrum.csv", "modes.csv"}


def test_modes_flag_overrides_config(tmp_path):
    out = tmp_path / "o"
    assert _run("spectrum", "--config", _write(tmp_path, SMALL), "--out", str(out), "--modes", "5").exit_code == 0
    assert len(_table(out / "spectrum.csv")) == 5


def test_ellipsoid_splits_dipole_triplet(tmp_path):
    cfg = _merge(SMALL, {"geometry": {"shape": "ellipsoid", "semi_axes": [2.0, 1.0, 1.0]}})
    out = tmp_path / "o"
    assert _run("spectrum", "--config", _write(tmp_path, cfg), "--out", str(out)).exit_code == 0
    g = sorted(float(r["gamma"]) for r in _table(out / "spectrum.csv"))[:3]
    g_sphere = 1 / 3
    assert abs(g[0] - g_sphere) > 1e-2


def test_resonances_lower_half_plane_and_small_delta(tmp_path):
    cfg = _merge(SMALL, {"resonances": {"deltas": [1e-4, 0.01, 0.05]}})
    out = tmp_path / "o"
    assert _run("resonances", "--config", _write(tmp_path, cfg), "--out", str(out)).exit_code == 0
    rows = _table(out / "resonances.csv")
    assert len(rows) == 12 * 3 * 2
    assert all(float(r["im_omega"]) < 0 for r in rows)
    for r in rows:
        if float(r["delta"]) == 1e-4:
            st = complex(float(r["re_static"]), float(r["im_static"]))
            dy = complex(float(r["re_omega"]), float(r["im_omega"]))
            assert abs(dy - st) < 1e-6


def test_resonances_rerun_byte_identical(tmp_path):
    cfg = _write(tmp_path, SMALL)
    a, b = tmp_path / "a", tmp_path / "b"
    assert _run("resonances", "--config", cfg, "--out", str(a), "--seed", "3").exit_code == 0
    assert _run("resonances", "--config", cfg, "--out", str(b), "--seed", "3").exit_code == 0
    for name in ("resonances.csv", "run-manifest.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_sweep_peak_and_linearity(tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert _run("sweep", "--config", _write(tmp_path, SMALL), "--out", str(out1)).exit_code == 0
    cfg2 = _merge(SMALL, {"source": {"p": [2.0, 0.0, 0.6]}})
    assert _run("sweep", "--config", _write(tmp_path, cfg2, "c2.json"), "--out", str(out2)).exit_code == 0
    r1, r2 = _table(out1 / "sweep.csv"), _table(out2 / "sweep.csv")
    a1 = np.array([float(r["abs_E"]) for r in r1])
    a2 = np.array([float(r["abs_E"]) for r in r2])
    assert np.allclose(a2, 2 * a1, rtol=1e-10)
    inside = [r for r in r1 if r["probe"] == "0"]
    om = np.array([float(r["omega"]) for r in inside])
    peak = om[np.argmax([float(r["abs_E"]) for r in inside])]
    W = build_pipeline(build_mesh("sphere", 2), DrudeMaterial(), 0.1, 30, 12, 0.25).model.pole(0).omega
    assert abs(peak - W.real) <= 2 * abs(W.imag)


def test_sweep_flags_out_of_regime(tmp_path):
    cfg = _merge(SMALL, {"sweep": {"omega_min": 0.3, "omega_max": 8.0, "count": 9}})
    out = tmp_path / "o"
    assert _run("sweep", "--config", _write(tmp_path, cfg), "--out", str(out)).exit_code == 0
    flags = {r["flag"] for r in _table(out / "sweep.csv")}
    assert flags == {"ok", "out_of_regime"}


def test_timedomain_requires_poles(tmp_path):
    r = _run("timedomain", "--config", _write(tmp_path, SMALL), "--out", str(tmp_path / "o"))
    assert r.exit_code == 2
    assert "plasmodes resonances" in r.output


def test_timedomain_report(tmp_path):
    cfg = _merge(SMALL, {"modes": {"N": 6}})
    path = _write(tmp_path, cfg)
    out = tmp_path / "o"
    assert _run("resonances", "--config", path, "--out", str(out)).exit_code == 0
    r = _run("timedomain", "--config", path, "--out", str(out))
    assert r.exit_code == 0, r.output
    rep = json.loads((out / "causality.json").read_text())[0]
    s, x, d = np.array([0.0, 0.0, 0.5]), np.array([0.3, 0.0, -0.4]), 0.1
    assert rep["t_minus"] == pytest.approx(np.linalg.norm(s) + np.linalg.norm(x) - 2 * d, abs=1e-12)
    assert rep["t_plus"] == pytest.approx(np.linalg.norm(s) + np.linalg.norm(x) + 2 * d, abs=1e-12)
    assert rep["late_error"] < 5e-2
    assert rep["early_level"] < 1e-3
    methods = {row["method"] for row in _table(out / "traces.csv")}
    assert methods == {"quadrature", "residue", "renormalized-residue"}
    man = json.loads((out / "run-manifest.json").read_text())
    assert {"resonances", "timedomain"} <= set(man["runs"])


@pytest.mark.slow
def test_validate_coarse_mesh_fails(tmp_path):
    out = tmp_path / "o"
    r = _run("validate", "--config", _write(tmp_path, SMALL), "--out", str(out), "--refine", "0")
    assert r.exit_code == 1
    summary = json.loads((out / "validation.json").read_text())
    assert summary["passed"] is False
    spec = {c["name"]: c for c in summary["checks"]}["sphere_spectrum"]
    assert not spec["passed"] and spec["value"] > spec["tolerance"]
    assert "limit 1e-2" in spec["detail"]
