"""Command-line front end.

Every command reads a JSON run configuration (validated against
:data:`CONFIG_SCHEMA`), applies the flag overrides, computes, and writes its
outputs plus ``run-manifest.json`` into ``--out`` atomically: files are staged in
a temporary directory and moved into place only after the command succeeded.

Exit codes: 0 success, 1 validation failure, 2 configuration error,
3 numerical failure.
"""
from __future__ import annotations

import copy
import csv
import hashlib
import io
import json
import os
import shutil
import sys
import tempfile
import warnings
from pathlib import Path

import click
import jsonschema
import numpy as np

from . import __version__
from .errors import (ConditioningError, ConfigurationError, ConvergenceError, DomainError, FeasibilityError,
                     GeometryError, PlasmodesError, SingularityError)
from .fields import ModalModel, exterior_field, incident_dipole, interior_field
from .geometry import make_sphere
from .material import DrudeMaterial, contrast, static_resonances
from .oracle import (assemble_tet_T, clausius_mossotti, dense_ls_solve, induced_dipole, k_expansion_fit,
                     sphere_np_spectrum, tetrahedral_grid)
from .perturbation import assemble_T2_matrix
from .pipeline import build_mesh, build_pipeline
from .potentials import assemble_layer_matrices, boundary_distance, calderon_residual, symmetrized_pencil
from .resonances import resonance_sweep, solve_dynamic_pole
from .spectrum import solve_spectrum

EXIT_OK, EXIT_VALIDATION, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3
MANIFEST = "run-manifest.json"

_vec3 = {"type": "array", "items": {"type": "number"}, "minItems": 3, "maxItems": 3}
_pos = {"type": "number", "exclusiveMinimum": 0}

CONFIG_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "type": "object",
    "required": ["version"],
    "additionalProperties": False,
    "properties": {
        "version": {"const": 1},
        "seed": {"type": "integer", "minimum": 0},
        "geometry": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "shape": {"enum": ["sphere", "ellipsoid"]},
                "refinement": {"type": "integer", "minimum": 0, "maximum": 5},
                "semi_axes": {"type": "array", "items": _pos, "minItems": 3, "maxItems": 3},
                "mesh_file": {"type": ["string", "null"]},
                "delta": _pos,
                "grid_h": _pos,
            },
        },
        "material": {
            "type": "object", "additionalProperties": False,
            "properties": {"omega_p": _pos, "T": _pos, "eps_m": _pos, "eps0": _pos, "c0": _pos},
        },
        "source": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "s": _vec3, "p": _vec3,
                "signal": {"type": "object", "additionalProperties": False,
                           "properties": {"C1": _pos, "omega0": _pos}},
            },
        },
        "band": {"type": "object", "additionalProperties": False,
                 "properties": {"rho": _pos, "eta": _pos}},
        "modes": {"type": "object", "additionalProperties": False,
                  "properties": {"N": {"type": "integer", "minimum": 1},
                                 "n_surface": {"type": "integer", "minimum": 2},
                                 "n_perturb": {"type": "integer", "minimum": 1}}},
        "resonances": {"type": "object", "additionalProperties": False,
                       "properties": {"deltas": {"type": "array", "items": _pos, "minItems": 1}}},
        "sweep": {"type": "object", "additionalProperties": False,
                  "properties": {"omega_min": _pos, "omega_max": _pos,
                                 "count": {"type": "integer", "minimum": 2},
                                 "probes": {"type": "array", "items": _vec3, "minItems": 1}}},
        "timedomain": {"type": "object", "additionalProperties": False,
                       "properties": {"observation": {"type": "array", "items": _vec3, "minItems": 1},
                                      "t_min": {"type": "number"}, "t_max": {"type": "number"},
                                      "dt": _pos}},
        "validate": {"type": "object", "additionalProperties": False,
                     "properties": {"tet_h": _pos, "kfit_h": _pos, "td_modes": {"type": "integer", "minimum": 1}}},
    },
}

DEFAULT_CONFIG = {
    "version": 1,
    "seed": 0,
    "geometry": {"shape": "sphere", "refinement": 3, "semi_axes": [1.0, 1.0, 1.0], "mesh_file": None,
                 "delta": 0.1, "grid_h": 0.15},
    "material": {"omega_p": 1.0, "T": 10.0, "eps_m": 1.0, "eps0": 1.0, "c0": 1.0},
    "source": {"s": [0.0, 0.0, 0.5], "p": [1.0, 0.0, 0.3], "signal": {"C1": 60.0, "omega0": 0.577}},
    "band": {"rho": 2.0, "eta": 1e-6},
    "modes": {"N": 15, "n_surface": 60, "n_perturb": 35},
    "resonances": {"deltas": [0.001, 0.002, 0.005, 0.01, 0.02, 0.05]},
    "sweep": {"omega_min": 0.3, "omega_max": 0.9, "count": 121, "probes": [[0.0, 0.0, 0.05], [0.3, 0.0, -0.4]]},
    "timedomain": {"observation": [[0.3, 0.0, -0.4]], "t_min": -30.0, "t_max": 180.0, "dt": 0.5},
    "validate": {"tet_h": 0.5, "kfit_h": 0.25, "td_modes": 6},
}


# ----------------------------------------------------------------- configuration

def _merge(base, over):
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def load_config(path=None, modes=None, refine=None, seed=None) -> dict:
    """Read, validate and complete a configuration; flags override file values.

    Raises
    ------
    ConfigurationError
        On unreadable JSON or schema violations.
    """
    user = {"version": 1}
    if path is not None:
        try:
            user = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    try:
        jsonschema.validate(user, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigurationError(f"invalid config: {exc.message} at {list(exc.absolute_path)}") from exc
    cfg = _merge(DEFAULT_CONFIG, user)
    if modes is not None:
        cfg["modes"]["N"] = int(modes)
    if refine is not None:
        cfg["geometry"]["refinement"] = int(refine)
    if seed is not None:
        cfg["seed"] = int(seed)
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigurationError(f"invalid override: {exc.message}") from exc
    if cfg["sweep"]["omega_max"] <= cfg["sweep"]["omega_min"]:
        raise ConfigurationError("sweep.omega_max must exceed sweep.omega_min")
    if cfg["modes"]["N"] > cfg["modes"]["n_perturb"]:
        raise ConfigurationError("modes.N cannot exceed modes.n_perturb")
    return cfg


def config_hash(cfg) -> str:
    return hashlib.sha256(json.dumps(cfg, sort_keys=True).encode()).hexdigest()


def _material(cfg) -> DrudeMaterial:
    return DrudeMaterial(**cfg["material"])


def _pipeline(cfg):
    g = cfg["geometry"]
    mesh = build_mesh(g["shape"], g["refinement"], g["semi_axes"], g["mesh_file"])
    m = cfg["modes"]
    return build_pipeline(mesh, _material(cfg), g["delta"], m["n_surface"], m["n_perturb"], g["grid_h"])


# ----------------------------------------------------------------- output

def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.12e}"
    return str(x)


class Output:
    """Stage files in a temporary directory; commit them atomically."""

    def __init__(self, out_dir, command: str, cfg: dict):
        self.out = Path(out_dir)
        self.command = command
        self.cfg = cfg
        self.files: dict = {}
        self.extra: dict = {}
        self.mesh_hash = ""

    def csv(self, name: str, header, rows, comment: str | None = None):
        buf = io.StringIO()
        buf.write(f"# plasmodes {__version__} config {config_hash(self.cfg)} mesh {self.mesh_hash}\n")
        if comment:
            buf.write(f"# {comment}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])
        self.files[name] = buf.getvalue().encode()

    def json(self, name: str, obj):
        self.files[name] = (json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n").encode()

    def commit(self):
        """Write staged files and merge this run into ``run-manifest.json``."""
        self.out.parent.mkdir(parents=True, exist_ok=True)
        path = self.out / MANIFEST
        runs = {}
        if path.exists():
            try:
                runs = json.loads(path.read_text()).get("runs", {})
            except (OSError, json.JSONDecodeError, AttributeError):
                runs = {}
        entry = {
            "version": __version__,
            "config_hash": config_hash(self.cfg),
            "mesh_hash": self.mesh_hash,
            "config": self.cfg,
            "outputs": {k: hashlib.sha256(v).hexdigest() for k, v in sorted(self.files.items())},
        }
        entry.update(self.extra)
        runs[self.command] = entry
        self.json(MANIFEST, {"runs": runs})
        stage = Path(tempfile.mkdtemp(prefix=".stage-", dir=self.out.parent))
        try:
            for name, data in self.files.items():
                (stage / name).write_bytes(data)
            self.out.mkdir(parents=True, exist_ok=True)
            for name in self.files:
                os.replace(stage / name, self.out / name)
        finally:
            shutil.rmtree(stage, ignore_errors=True)


def _jsonable(o):
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.bool_,)):
        return bool(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, complex):
        return [o.real, o.imag]
    raise TypeError(type(o))


# ----------------------------------------------------------------- commands

def run_spectrum(cfg, out: Output, echo=print):
    pl = _pipeline(cfg)
    out.mesh_hash = pl.mesh.digest()
    b = pl.basis
    N = cfg["modes"]["N"]
    rows = [(n + 1, b.lam[s], b.gamma[s], b.isolation[s]) for n, s in enumerate(b.w_index[:N])]
    out.csv("spectrum.csv", ["n", "lambda", "gamma", "isolation"], rows)
    pts = b.grid.points
    mrows = []
    for n in range(N):
        for x, e in zip(pts, b.modes[:, :, n]):
            mrows.append((n + 1, x[0], x[1], x[2], e[0], e[1], e[2]))
    out.csv("modes.csv", ["n", "x", "y", "z", "ex", "ey", "ez"], mrows)
    if cfg["geometry"]["shape"] == "sphere" and cfg["geometry"]["mesh_file"] is None:
        lam, mult = sphere_np_spectrum(4)
        for l in range(1, 4):
            cl = [c for c in b.clusters if abs(b.lam[c].mean() - lam[l]) < 0.02]
            if cl:
                echo(f"l={l}: lambda={b.lam[cl[0]].mean():.6f} analytic={lam[l]:.6f} "
                     f"multiplicity={len(cl[0])}/{mult[l]}")
    echo(f"gamma_1 = {b.w_gamma[0]:.6f}")
    return pl


def run_resonances(cfg, out: Output, echo=print):
    pl = _pipeline(cfg)
    out.mesh_hash = pl.mesh.digest()
    N = cfg["modes"]["N"]
    mat = _material(cfg)
    modes = [pl.model.mode(n) for n in range(N)]
    res = resonance_sweep(mat, modes, cfg["resonances"]["deltas"])
    rows = []
    for r in res.rows:
        rows.append((r["n"] + 1, r["delta"], r["branch"], r["static"].real, r["static"].imag, r["omega"].real,
                     r["omega"].imag, r["residue"].real, r["residue"].imag, r["residual"], r["flag"]))
    out.csv("resonances.csv", ["n", "delta", "branch", "re_static", "im_static", "re_omega", "im_omega",
                               "re_C", "im_C", "residual", "flag"], rows)
    b = res.boundedness()
    out.extra["boundedness"] = b
    out.extra["failures"] = res.failures
    echo(f"{len(res.rows)} poles, {len(res.failures)} failures, max|Re|={b['max_abs_re']:.4f}, "
         f"max|Im|={b['max_abs_im']:.4f}")
    if any(r["omega"].imag >= 0 for r in res.rows):
        raise ConvergenceError("pole in the closed upper half-plane")
    return res


def _probe_field(model: ModalModel, omega, s_ref, p, probe_ref, N, scale):
    k = model.k(omega)
    inc = lambda X: scale * incident_dipole(s_ref, p, k, X, scaled=True).values
    if boundary_distance(model.basis.mesh, probe_ref[None])[0] > 0:
        return interior_field(model, omega, inc, N, points=probe_ref[None]).values[0]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return exterior_field(model, omega, inc, probe_ref[None], N).values[0]


def run_sweep(cfg, out: Output, echo=print):
    pl = _pipeline(cfg)
    out.mesh_hash = pl.mesh.digest()
    model = pl.model
    d = cfg["geometry"]["delta"]
    N = cfg["modes"]["N"]
    sw = cfg["sweep"]
    om = np.linspace(sw["omega_min"], sw["omega_max"], sw["count"])
    s_ref = np.asarray(cfg["source"]["s"]) / d
    p = np.asarray(cfg["source"]["p"], float)
    eta1 = model.coeffs.eta[0]
    rows = []
    W1 = model.pole(0).omega
    for j, x in enumerate(cfg["sweep"]["probes"]):
        xr = np.asarray(x, float) / d
        mags, phs = [], []
        for w in om:
            E = _probe_field(model, w, s_ref, p, xr, N, 1.0)
            mags.append(np.linalg.norm(E))
            phs.append(np.angle(E[int(np.argmax(np.abs(E)))]))
        mags = np.array(mags)
        peak = np.zeros(om.size, bool)
        peak[1:-1] = (mags[1:-1] > mags[:-2]) & (mags[1:-1] > mags[2:])
        for w, m_, ph, pk in zip(om, mags, phs, peak):
            flag = "ok" if abs(model.k(w)) <= eta1 else "out_of_regime"
            rows.append((j, w, m_, ph, int(pk), flag))
        if peak.any():
            wp = om[peak][np.argmax(mags[peak])]
            echo(f"probe {j}: peak at omega={wp:.4f} (Re Omega_1={W1.real:.4f}, |Im|={abs(W1.imag):.4f})")
    out.csv("sweep.csv", ["probe", "omega", "abs_E", "phase", "peak", "flag"], rows,
            comment="incident field normalised as (omega delta / c)^2 Gd p")
    return rows


def _td_config(cfg, pl, N=None):
    from .timedomain import TimeDomainConfig, make_signal
    sig = cfg["source"]["signal"]
    rho = cfg["band"]["rho"]
    signal = make_signal(sig["C1"], sig["omega0"], rho, cfg["band"]["eta"])
    return TimeDomainConfig(pl.model, cfg["source"]["s"], cfg["source"]["p"], signal, rho,
                            cfg["modes"]["N"] if N is None else N)


def late_window_error(cfg_td, x, q, r):
    """Relative L2-in-time gap between two traces on the late window."""
    win = cfg_td.window(x)
    tau = 1.0 / abs(cfg_td.model.pole(0).omega.imag)
    a = win.t_plus + cfg_td.signal.C1 + 3.0 / cfg_td.rho
    sel = (q.t >= a) & (q.t <= a + 5.0 * tau)
    if not np.any(sel):
        return float("nan"), (a, a + 5.0 * tau)
    e = np.sqrt(np.sum((q.values[sel] - r.values[sel]) ** 2) / np.sum(q.values[sel] ** 2))
    return float(e), (a, a + 5.0 * tau)


def run_timedomain(cfg, out: Output, echo=print, require_poles: bool = True):
    from .timedomain import causality_report, scattered_quadrature, scattered_residue, scattered_residue_renormalized
    if require_poles and not (out.out / "resonances.csv").exists():
        raise ConfigurationError(f"no pole data in {out.out}; run `plasmodes resonances` with the same --out first")
    pl = _pipeline(cfg)
    out.mesh_hash = pl.mesh.digest()
    td = _td_config(cfg, pl)
    t = np.arange(cfg["timedomain"]["t_min"], cfg["timedomain"]["t_max"] + 1e-12, cfg["timedomain"]["dt"])
    rows, reports = [], []
    for j, x in enumerate(cfg["timedomain"]["observation"]):
        x = np.asarray(x, float)
        q = scattered_quadrature(td, x, t)
        r = scattered_residue(td, x, t)
        rn = scattered_residue_renormalized(td, x, t)
        err, win = late_window_error(td, x, q, r)
        rep = causality_report(td, x, q)
        rep.update({"point": j, "late_window": win, "late_error": err,
                    "renormalized_gap": float(np.max(np.abs(rn.values - r.values)) / max(r.peak, 1e-300)),
                    "imag_ratio_quadrature": q.imag_ratio, "imag_ratio_residue": r.imag_ratio})
        reports.append(rep)
        for tr in (q, r, rn):
            for ti, v in zip(tr.t, tr.values):
                rows.append((j, ti, v[0], v[1], v[2], tr.method))
        echo(f"point {j}: t0-={rep['t_minus']:.4f} t0+={rep['t_plus']:.4f} late error={err:.3e} "
             f"early level={rep['early_level']:.3e}")
    out.csv("traces.csv", ["point", "t", "Ex", "Ey", "Ez", "method"], rows)
    out.json("causality.json", reports)
    return reports


def _check(name, value, tol, passed, detail=""):
    return {"name": name, "value": value, "tolerance": tol, "passed": bool(passed), "detail": detail}


def run_validate(cfg, out: Output, echo=print):
    """Oracle suite; returns the summary dictionary."""
    checks = []
    g = cfg["geometry"]
    ref = g["refinement"]
    seed = cfg["seed"]
    mesh = make_sphere(1.0, ref)
    L = assemble_layer_matrices(mesh)
    A, M = symmetrized_pencil(L)
    b = solve_spectrum(A, M, min(16, mesh.n_panels), mesh)
    lam, mult = sphere_np_spectrum(3)
    err = float(max(abs(b.lam[int(np.sum(mult[:l]))] - lam[l]) for l in range(4)))
    sizes = [len(c) for c in b.clusters[:4]]
    checks.append(_check("sphere_spectrum", err, 1e-2, err < 1e-2 and sizes == [1, 3, 5, 7],
                         f"max |lambda - 1/(2(2l+1))| = {err:.3e} (limit 1e-2), multiplicities {sizes}"))
    cal = [calderon_residual(assemble_layer_matrices(make_sphere(1.0, r))) for r in (1, 2, 3)]
    checks.append(_check("calderon_decrease", cal, "strictly decreasing", cal[0] > cal[1] > cal[2]))
    mat100 = DrudeMaterial(T=100.0)
    st = static_resonances(mat100, [1.0 / 3.0])[0]
    exact = complex(np.sqrt(1.0 / 3.0 - 1.0 / (4.0 * 100.0 ** 2)), -0.005)
    checks.append(_check("static_resonance", abs(st.plus - exact), 1e-10, abs(st.plus - exact) < 1e-10))
    from .geometry import voxel_grid
    grid = voxel_grid(mesh, cfg["validate"]["kfit_h"])
    ks = np.geomspace(0.01, 0.1, 6)
    fit = k_expansion_fit(grid, ks)
    T2 = assemble_T2_matrix(grid)
    e2 = float(np.linalg.norm(fit.c2 - T2) / np.linalg.norm(T2))
    checks.append(_check("k_expansion_T2", e2, 1e-2, e2 < 1e-2))
    pl = _pipeline(cfg)
    md = pl.model.mode(0)
    ds = np.geomspace(0.005, 0.05, 6)
    dev, resid, im = [], [], []
    for d in ds:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            rec = solve_dynamic_pole(_material(cfg), md, d)
        dev.append(abs(rec.omega - rec.static))
        resid.append(rec.residual)
        im.append(rec.omega.imag)
    slope = float(np.polyfit(np.log(ds), np.log(dev), 1)[0])
    checks.append(_check("dynamic_pole_slope", slope, "2 +/- 0.1",
                         abs(slope - 2) <= 0.1 and max(resid) < 1e-10 and max(im) < 0))
    tg = tetrahedral_grid(mesh, cfg["validate"]["tet_h"], seed=seed)
    mat = _material(cfg)
    omega = 0.01 * mat.c / g["delta"]
    kk = omega * g["delta"] / mat.c
    op = assemble_tet_T(tg, kk)
    gam = contrast(mat, omega)
    E0 = np.array([1.0, 0.0, 0.0])
    E = dense_ls_solve(op, gam, np.tile(E0, (tg.size, 1)))
    pind = induced_dipole(E, tg.volumes, gam)[0]
    pcm = clausius_mossotti(mat, omega, tg.volumes.sum())
    ecm = float(abs(pind - pcm) / abs(pcm))
    checks.append(_check("dense_ls_clausius_mossotti", ecm, 5e-2, ecm < 5e-2))
    from .timedomain import causality_report, scattered_quadrature
    td = _td_config(cfg, pl, cfg["validate"]["td_modes"])
    x = np.asarray(cfg["timedomain"]["observation"][0], float)
    win = td.window(x)
    t = np.arange(win.t_minus - 3.0 / td.rho - 20.0, win.t_plus + td.signal.C1 + 20.0, 0.5)
    q = scattered_quadrature(td, x, t)
    rep = causality_report(td, x, q)
    checks.append(_check("causality_early_level", rep["early_level"], 1e-3, rep["early_level"] < 1e-3))
    summary = {"passed": all(c["passed"] for c in checks), "checks": checks}
    out.json("validation.json", summary)
    out.mesh_hash = mesh.digest()
    for c in checks:
        echo(f"{'PASS' if c['passed'] else 'FAIL'} {c['name']}: {c['value']} (tol {c['tolerance']})")
    return summary


# ----------------------------------------------------------------- click wrappers

def _common(f):
    f = click.option("--seed", type=int, default=None, help="Seed for randomised steps.")(f)
    f = click.option("--refine", type=int, default=None, help="Mesh refinement level.")(f)
    f = click.option("--modes", type=int, default=None, help="Number of modes N.")(f)
    f = click.option("--out", "out_dir", type=click.Path(file_okay=False), default="plasmodes-out",
                     show_default=True, help="Output directory.")(f)
    f = click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None,
                     help="JSON run configuration.")(f)
    return f


def _execute(name, runner, config_path, out_dir, modes, refine, seed):
    try:
        cfg = load_config(config_path, modes, refine, seed)
        out = Output(out_dir, name, cfg)
        result = runner(cfg, out, click.echo)
        if name == "validate" and not result["passed"]:
            out.commit()
            click.echo("validation failed", err=True)
            sys.exit(EXIT_VALIDATION)
        out.commit()
    except (ConfigurationError, GeometryError, DomainError, OSError) as exc:
        click.echo(f"configuration error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    except (ConvergenceError, ConditioningError, SingularityError, FeasibilityError, PlasmodesError,
            np.linalg.LinAlgError) as exc:
        click.echo(f"numerical failure: {exc}", err=True)
        sys.exit(EXIT_NUMERIC)
    sys.exit(EXIT_OK)


@click.group()
@click.version_option(__version__, prog_name="plasmodes")
def main():
    """Plasmonic modal expansions for small convex particles."""
    warnings.simplefilter("ignore", RuntimeWarning)


@main.command()
@_common
def spectrum(config_path, out_dir, modes, refine, seed):
    """Surface spectrum and volume modes (spectrum.csv, modes.csv)."""
    _execute("spectrum", run_spectrum, config_path, out_dir, modes, refine, seed)


@main.command()
@_common
def resonances(config_path, out_dir, modes, refine, seed):
    """Static and dynamic poles with residues (resonances.csv)."""
    _execute("resonances", run_resonances, config_path, out_dir, modes, refine, seed)


@main.command()
@_common
def sweep(config_path, out_dir, modes, refine, seed):
    """Frequency response at probe points (sweep.csv)."""
    _execute("sweep", run_sweep, config_path, out_dir, modes, refine, seed)


@main.command()
@_common
def timedomain(config_path, out_dir, modes, refine, seed):
    """Quadrature and residue traces (traces.csv, causality.json)."""
    _execute("timedomain", run_timedomain, config_path, out_dir, modes, refine, seed)


@main.command()
@_common
def validate(config_path, out_dir, modes, refine, seed):
    """Oracle checks (validation.json); exit code 1 if any fails."""
    _execute("validate", run_validate, config_path, out_dir, modes, refine, seed)


@main.command("default-config")
def default_config():
    """Print the default configuration."""
    click.echo(json.dumps(DEFAULT_CONFIG, indent=2))


if __name__ == "__main__":
    main()
