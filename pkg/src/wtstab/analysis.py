"""Decay-rate fits, the template norm, and experiment orchestration.

This is the user surface: a structured INI config describes one
experiment (model, wave train, Bloch verification, grid, perturbation,
stepper, analysis windows); `run_experiment` drives
wavetrain -> bloch -> simulation -> phase -> fits, writing all
artifacts into a content-addressed run directory.  Re-running an
unchanged config reuses cached stages.  The summary JSON is the single
machine-readable contract; CSVs are for plotting.
"""

from __future__ import annotations

import configparser
import hashlib
import io
import json
import time as _time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .bloch import BlochGrid, compute_dispersion, verify_spectral_stability
from .errors import (ConfigInvalid, InsufficientData, MissingSeries,
                     NonPositiveValues)
from .field import write_wts
from .greens import guard_time
from .kernel import PhaseKernelParams
from .model import builtin_from_config
from .phase import extract_phase, phase_time_derivatives, shifted_residual
from .sim2d import (PerturbationSpec, WeightedNormSeries, geometric_times,
                    make_perturbation, nonlinear_evolve, weighted_sup_norm)
from .wavetrain import closed_form_lambda_omega, solve_profile

__all__ = [
    "DecayFit",
    "RunRecord",
    "fit_decay_exponent",
    "measure_template_eta",
    "load_config",
    "resolve_config",
    "config_digest",
    "run_experiment",
]


# ---------------------------------------------------------------------------
# decay fits

@dataclass(frozen=True)
class DecayFit:
    """Fitted power law value ~ A * t^exponent over a log-log window."""

    exponent: float
    intercept: float            # log A
    window: tuple
    r_squared: float
    n_points: int


def fit_decay_exponent(series: WeightedNormSeries, window) -> DecayFit:
    """Ordinary least squares of log(value) on log(t) inside the window."""
    t = np.asarray(series.times, dtype=float)
    v = np.asarray(series.values, dtype=float)
    lo, hi = float(window[0]), float(window[1])
    mask = (t >= lo) & (t <= hi)
    if int(mask.sum()) < 5:
        raise InsufficientData(f"only {int(mask.sum())} points in window [{lo}, {hi}]")
    if np.any(v[mask] <= 0.0):
        raise NonPositiveValues("log-log fit needs positive values")
    x = np.log(t[mask])
    y = np.log(v[mask])
    A = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    ss_res = float(resid @ resid)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else max(0.0, 1.0 - ss_res / ss_tot)
    return DecayFit(exponent=float(coef[0]), intercept=float(coef[1]),
                    window=(lo, hi), r_squared=min(r2, 1.0),
                    n_points=int(mask.sum()))


# ---------------------------------------------------------------------------
# template norm

_REQUIRED_SERIES = ("v", "vtilde", "psi", "dpsi", "vtilde_z", "v_z")


def measure_template_eta(series: dict, kind: str) -> WeightedNormSeries:
    """Running sup of the weighted combination driving the decay argument.

    `series` maps the names v, vtilde, psi, dpsi, vtilde_z, v_z to
    WeightedNormSeries on a common time grid (all already under the same
    moving-Gaussian weight); dpsi is the summed series of the tracked
    phase derivatives (orders one and two; third derivatives of a
    measured field are noise at this scale and are deliberately omitted).
    """
    for name in _REQUIRED_SERIES:
        if name not in series:
            raise MissingSeries(name)
    t = np.asarray(series["v"].times, dtype=float)
    for name in _REQUIRED_SERIES:
        if not np.array_equal(np.asarray(series[name].times), t):
            raise MissingSeries(f"series {name} not on the common time grid")
    g = lambda name: np.asarray(series[name].values, dtype=float)
    if kind == "line":
        bracket = ((1.0 + t) * (g("v") / np.log(2.0 + t) + g("dpsi"))
                   + np.sqrt(1.0 + t) * (g("vtilde") + g("psi"))
                   + np.sqrt(t) * (g("vtilde_z") + g("v_z")))
    elif kind == "localized":
        bracket = ((1.0 + t) ** 1.5 * (g("v") + g("dpsi"))
                   + (1.0 + t) * (g("vtilde") + g("psi"))
                   + np.sqrt(t * (1.0 + t)) * (g("vtilde_z") + g("v_z")))
    else:
        raise ValueError("kind must be 'line' or 'localized'")
    eta = np.maximum.accumulate(bracket)
    flags = np.zeros(t.shape, dtype=bool)
    for name in _REQUIRED_SERIES:
        flags |= series[name].boundary_flags
    return WeightedNormSeries(times=t, values=eta, weight_kind=series["v"].weight_kind,
                              derivative_order="eta", boundary_flags=flags)


# ---------------------------------------------------------------------------
# configuration

_DEFAULTS = {
    "model": {"name": "real_gl", "lambda_coeffs": "", "omega_coeffs": ""},
    "wavetrain": {"q2": 0.2, "q": "", "k": "", "n_modes": 64,
                  "method": "newton", "tol": 1e-10},
    "bloch": {"n_modes": 32, "n_x": 65, "n_y": 65, "m": 6, "fd_step": 1e-3},
    "grid": {"lx": 8, "ly": 160.0, "nx": 256, "ny": 512},
    "perturbation": {"kind": "fully_localized", "beta": 0.0, "gamma": 1.0,
                     "e0": 0.01, "m0": 0.01, "seed": 0},
    "stepper": {"dt": 0.01, "scheme": "bdf2", "t_final": 100.0,
                "snap_t_min": 2.0, "snap_ratio": 1.25},
    "analysis": {"window_lo": 5.0, "window_hi": 100.0,
                 "m_sweep": "2,4,8,16", "force": False},
}


def _coerce(text: str):
    s = text.strip()
    low = s.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        pass
    return s


def load_config(path) -> dict:
    """Read an INI config into a nested dict of typed values."""
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    read = parser.read(path)
    if not read:
        raise ConfigInvalid(f"cannot read config {path}")
    out = {}
    for section in parser.sections():
        if section not in _DEFAULTS:
            raise ConfigInvalid(f"unknown config section [{section}]")
        out[section] = {k: _coerce(v) for k, v in parser.items(section)}
    return out


def resolve_config(config: dict | None = None, overrides=()) -> dict:
    """Defaults + config + `section.key=value` overrides, validated."""
    resolved = {s: dict(v) for s, v in _DEFAULTS.items()}
    for section, values in (config or {}).items():
        if section not in resolved:
            raise ConfigInvalid(f"unknown config section [{section}]")
        for key, val in values.items():
            if key not in resolved[section]:
                raise ConfigInvalid(f"unknown key {section}.{key}")
            resolved[section][key] = val
    for item in overrides:
        try:
            dotted, raw = item.split("=", 1)
            section, key = dotted.split(".", 1)
        except ValueError as exc:
            raise ConfigInvalid(f"override must be section.key=value: {item!r}") from exc
        if section not in resolved or key not in resolved[section]:
            raise ConfigInvalid(f"unknown override target {dotted}")
        resolved[section][key] = _coerce(raw)
    kind = resolved["perturbation"]["kind"]
    if kind not in ("line_localized", "fully_localized"):
        raise ConfigInvalid(f"unsupported perturbation kind {kind!r}")
    return resolved


def _canonical_text(resolved: dict) -> str:
    buf = io.StringIO()
    for section in sorted(resolved):
        buf.write(f"[{section}]\n")
        for key in sorted(resolved[section]):
            val = resolved[section][key]
            if isinstance(val, float):
                buf.write(f"{key} = {val!r}\n")
            else:
                buf.write(f"{key} = {val}\n")
        buf.write("\n")
    return buf.getvalue()


def config_digest(resolved: dict) -> str:
    return hashlib.sha256(_canonical_text(resolved).encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# orchestration

@dataclass(frozen=True)
class RunRecord:
    """Where one experiment's artifacts live."""

    config_digest: str
    run_dir: str
    artifacts: dict
    created: str
    toolkit_version: str
    summary: dict


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def _write_series_csv(path: Path, rows) -> None:
    with open(path, "w") as fh:
        fh.write("t,value,derivative_order,weight_kind,boundary_flag\n")
        for t, value, order, kind, flag in rows:
            fh.write(f"{_fmt(t)},{_fmt(value)},{order},{kind},{int(flag)}\n")


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    raise TypeError(f"not JSON serializable: {type(o)}")


def _write_json(path: Path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _system_from_config(model_cfg: dict):
    params = {}
    for key in ("lambda_coeffs", "omega_coeffs"):
        raw = str(model_cfg.get(key, "") or "").strip()
        if raw:
            params[key] = [float(x) for x in raw.split(",")]
    return builtin_from_config(model_cfg["name"], params or None)


def _scaled_wavenumber(wt_cfg: dict) -> float:
    """q = 2 pi k from whichever of k, q, q2 the config provides."""
    if wt_cfg.get("k", "") != "":
        return 2.0 * np.pi * float(wt_cfg["k"])
    if wt_cfg.get("q", "") != "":
        return float(wt_cfg["q"])
    return float(np.sqrt(wt_cfg["q2"]))


def _solve_wavetrain(system, cfg, cache: Path):
    wt_cfg = cfg["wavetrain"]
    q = _scaled_wavenumber(wt_cfg)
    n_modes = int(wt_cfg["n_modes"])
    guess_wt = closed_form_lambda_omega(system, q, n_modes=n_modes)
    if wt_cfg["method"] == "closed_form":
        wt = guess_wt
    else:
        wt = solve_profile(system, guess_wt.k, guess_wt.profile,
                           guess_wt.omega, n_modes=n_modes, tol=float(wt_cfg["tol"]))
    _write_json(cache, {
        "k": wt.k, "omega": wt.omega, "residual": wt.residual_norm,
        "n_modes": wt.n_modes,
        "coefficients": [[[float(c.real), float(c.imag)] for c in row]
                         for row in wt.profile_hat],
    })
    return wt


def run_experiment(config: dict | None = None, overrides=(), out_root="runs",
                   force: bool | None = None) -> RunRecord:
    """Drive one full experiment and persist its artifacts.

    Pipeline: wave train -> spectral verification and dispersion ->
    nonlinear simulation -> phase extraction -> weighted norm series ->
    decay fits and template norm.  If spectral verification fails, the
    pipeline stops before simulation unless forced.
    """
    resolved = resolve_config(config, overrides)
    if force is not None:
        resolved["analysis"]["force"] = bool(force)
    digest = config_digest(resolved)
    run_dir = Path(out_root) / digest
    summary_path = run_dir / "summary.json"
    created = _time.strftime("%Y-%m-%dT%H:%M:%S", _time.gmtime())

    if summary_path.exists():
        stored = (run_dir / "config.resolved").read_text()
        if stored == _canonical_text(resolved):
            with open(summary_path) as fh:
                summary = json.load(fh)
            summary["cached"] = True
            return RunRecord(config_digest=digest, run_dir=str(run_dir),
                             artifacts=_artifact_map(run_dir), created=created,
                             toolkit_version=__version__, summary=summary)

    run_dir.mkdir(parents=True, exist_ok=True)
    (run_dir / "series").mkdir(exist_ok=True)
    (run_dir / "fields").mkdir(exist_ok=True)
    (run_dir / "config.resolved").write_text(_canonical_text(resolved))

    system = _system_from_config(resolved["model"])
    wt = _solve_wavetrain(system, resolved, run_dir / "wavetrain.json")

    bl = resolved["bloch"]
    grid = BlochGrid.default(system, wt, n_x=int(bl["n_x"]), n_y=int(bl["n_y"]))
    report = verify_spectral_stability(system, wt, grid, n_modes=int(bl["n_modes"]),
                                       m=int(bl["m"]))
    _write_json(run_dir / "bloch.json", report.as_dict() | {
        "eta_d1": report.eta_d1, "eta_d2": report.eta_d2, "eta_d3": report.eta_d3,
        "truncation_ok": report.truncation_ok,
        "degenerate_zero_mode": report.degenerate_zero_mode,
    })

    summary = report.as_dict()
    summary["config_digest"] = digest
    stable = report.d1 and report.d2 and report.d3
    if not stable and not resolved["analysis"]["force"]:
        summary["stopped_at"] = "bloch"
        _write_json(summary_path, summary)
        return RunRecord(config_digest=digest, run_dir=str(run_dir),
                         artifacts=_artifact_map(run_dir), created=created,
                         toolkit_version=__version__, summary=summary)

    dispersion = report.dispersion or compute_dispersion(system, wt, int(bl["n_modes"]))

    g = resolved["grid"]
    p = resolved["perturbation"]
    spec = PerturbationSpec(kind=p["kind"], beta_gamma=(float(p["beta"]), float(p["gamma"])),
                            E0=float(p["e0"]), M0=float(p["m0"]), seed=int(p["seed"]))
    Lx, Ly, Nx, Ny = int(g["lx"]), float(g["ly"]), int(g["nx"]), int(g["ny"])
    v0, init_report = make_perturbation(spec, wt, Lx, Ly, Nx, Ny)

    st = resolved["stepper"]
    times = geometric_times(float(st["snap_t_min"]), float(st["t_final"]),
                            float(st["snap_ratio"]))
    sim = nonlinear_evolve(system, wt, v0, times, dt=float(st["dt"]),
                           scheme=str(st["scheme"]))

    weight_kind = "line" if spec.kind == "line_localized" else "localized"
    guard = guard_time(dispersion.theta, dispersion.d_perp, dispersion.alpha,
                       Lx, Ly, localized_zeta=(spec.kind == "fully_localized"
                                               or abs(spec.beta_gamma[0]) > 1e-12))
    m_sweep = [float(x) for x in str(resolved["analysis"]["m_sweep"]).split(",")]

    series, exponents, eta_info = _measure_run(
        system, wt, dispersion, v0, sim, weight_kind, spec, m_sweep,
        (float(resolved["analysis"]["window_lo"]),
         min(float(resolved["analysis"]["window_hi"]), guard)),
        run_dir)

    summary.update({
        "guard_time": guard,
        "weight_kind": weight_kind,
        "initial_bound": init_report,
        "exponents": exponents,
        "eta": summary["eta"],
        "eta_ratio": eta_info.get("ratio"),
        "weight_M": eta_info.get("M"),
        "stopped_at": None,
    })
    _write_json(summary_path, summary)
    return RunRecord(config_digest=digest, run_dir=str(run_dir),
                     artifacts=_artifact_map(run_dir), created=created,
                     toolkit_version=__version__, summary=summary)


def _artifact_map(run_dir: Path) -> dict:
    return {
        "config": str(run_dir / "config.resolved"),
        "summary": str(run_dir / "summary.json"),
        "series": sorted(str(p) for p in (run_dir / "series").glob("*.csv")),
        "fields": sorted(str(p) for p in (run_dir / "fields").glob("*.wts")),
    }


def _measure_run(system, wt, dispersion, v0, sim, weight_kind, spec,
                 m_sweep, window, run_dir: Path):
    """Phase extraction, weighted series, decay fits for one simulation."""
    beta_gamma = spec.beta_gamma
    times = np.array([t for t, _ in sim["v"]])
    center = v0.Lx / 2.0

    phases = [extract_phase(su, wt) for _, su in sim["u"]]
    phases = phase_time_derivatives(phases)
    shifted = [shifted_residual(su, ph, wt) for (_, su), ph in zip(sim["u"], phases)]

    for (t, sv), ph in zip(sim["v"], phases):
        write_wts(run_dir / "fields" / f"v_{t:08.2f}.wts", sv)
        write_wts(run_dir / "fields" / f"psi_{t:08.2f}.wts", ph.psi)

    def sup_series(fields, order):
        vals = [float(np.max(np.linalg.norm(f.values, axis=-1))) for f in fields]
        return WeightedNormSeries(times=times, values=np.array(vals),
                                  weight_kind="none", derivative_order=order)

    def weighted_series(fields, order, M):
        vals, flags = [], []
        for t, f in zip(times, fields):
            ws = weighted_sup_norm(f, dispersion, weight_kind, float(t), M,
                                   beta_gamma=beta_gamma, center=center)
            vals.append(ws.value)
            flags.append(ws.boundary_flag)
        return WeightedNormSeries(times=times, values=np.array(vals),
                                  weight_kind=f"{weight_kind}_M{M:g}",
                                  derivative_order=order,
                                  boundary_flags=np.array(flags))

    v_fields = [f for _, f in sim["v"]]
    vz_fields = [f for _, f in sim["v_z"]]
    vy_fields = [f for _, f in sim["v_y"]]
    psi_fields = [ph.psi for ph in phases]
    shift_fields = [v for v, _ in shifted]
    shiftz_fields = [vz for _, vz in shifted]

    def dpsi_series(M, orders=("z", "y", "t", "zz", "zy", "yy", "zt")):
        vals, flags = [], []
        for t, ph in zip(times, phases):
            total, flag = 0.0, False
            for key in orders:
                if key not in ph.dpsi:
                    continue
                ws = weighted_sup_norm(ph.dpsi[key], dispersion, weight_kind,
                                       float(t), M, beta_gamma=beta_gamma,
                                       center=center)
                total += ws.value
                flag |= ws.boundary_flag
            vals.append(total)
            flags.append(flag)
        return WeightedNormSeries(times=times, values=np.array(vals),
                                  weight_kind=f"{weight_kind}_M{M:g}",
                                  derivative_order="dpsi",
                                  boundary_flags=np.array(flags))

    plain = {
        "vtilde": sup_series(v_fields, "vtilde"),
        "vtilde_z": sup_series(vz_fields, "vtilde_z"),
        "vtilde_y": sup_series(vy_fields, "vtilde_y"),
        "psi": sup_series(psi_fields, "psi"),
        "v": sup_series(shift_fields, "v"),
        "v_z": sup_series(shiftz_fields, "v_z"),
        "dpsi_1": sup_series(
            [_sum_fields([ph.dpsi[k] for k in ("z", "y", "t") if k in ph.dpsi])
             for ph in phases], "dpsi_1"),
        "dpsi_2": sup_series(
            [_sum_fields([ph.dpsi[k] for k in ("zz", "zy", "yy", "zt") if k in ph.dpsi])
             for ph in phases], "dpsi_2"),
    }

    rows = []
    for name, s in plain.items():
        for t, val, fl in zip(s.times, s.values, s.boundary_flags):
            rows.append((t, val, name, s.weight_kind, fl))

    # weighted series per M; eta from the smallest unflagged weight
    eta_info = {}
    eta_by_M = {}
    for M in m_sweep:
        weighted = {
            "v": weighted_series(shift_fields, "v", M),
            "vtilde": weighted_series(v_fields, "vtilde", M),
            "psi": weighted_series([ph.psi for ph in phases], "psi", M),
            "dpsi": dpsi_series(M),
            "vtilde_z": weighted_series(vz_fields, "vtilde_z", M),
            "v_z": weighted_series(shiftz_fields, "v_z", M),
        }
        eta = measure_template_eta(weighted, weight_kind)
        eta_by_M[M] = (weighted, eta)
        for name, s in weighted.items():
            for t, val, fl in zip(s.times, s.values, s.boundary_flags):
                rows.append((t, val, name, s.weight_kind, fl))
        for t, val, fl in zip(eta.times, eta.values, eta.boundary_flags):
            rows.append((t, val, "eta", eta.weight_kind, fl))

    chosen_M = None
    for M in sorted(m_sweep):
        _, eta = eta_by_M[M]
        if not np.any(eta.boundary_flags):
            chosen_M = M
            break
    if chosen_M is None:
        chosen_M = max(m_sweep)
    _, eta = eta_by_M[chosen_M]
    i2 = min(int(np.searchsorted(eta.times, 2.0)), len(eta.values) - 1)
    eta_info = {"M": chosen_M,
                "ratio": float(np.max(eta.values) / max(eta.values[i2], 1e-300))}

    _write_series_csv(run_dir / "series" / "weighted_norms.csv", rows)

    exponents = {}
    fit_targets = {
        "exponent_vtilde": plain["vtilde"],
        "exponent_vtilde_z": plain["vtilde_z"],
        "exponent_vtilde_y": plain["vtilde_y"],
        "exponent_psi": plain["psi"],
        "exponent_v_shifted": plain["v"],
        "exponent_dpsi_1": plain["dpsi_1"],
        "exponent_dpsi_2": plain["dpsi_2"],
    }
    for name, s in fit_targets.items():
        try:
            fit = fit_decay_exponent(s, window)
            in_window = (s.times >= window[0]) & (s.times <= window[1])
            exponents[name] = {"exponent": fit.exponent, "r_squared": fit.r_squared,
                               "window": list(fit.window), "n_points": fit.n_points,
                               "boundary_flag": bool(np.any(s.boundary_flags[in_window]))}
        except (InsufficientData, NonPositiveValues) as exc:
            exponents[name] = {"error": str(exc)}
    return plain, exponents, eta_info


def _sum_fields(fields):
    if not fields:
        raise MissingSeries("no phase-derivative fields tracked")
    total = np.zeros_like(fields[0].values[:, :, 0])
    for f in fields:
        total = total + np.abs(f.values[:, :, 0])
    return fields[0].with_values(total[:, :, None])


def run_greens_experiment(resolved: dict, sigma0: float = 0.05,
                          out_root="runs") -> RunRecord:
    """Linear Green's-column run: evolve a near-delta source, subtract the
    predicted translational part, fit exponents and the pointwise bound."""
    from .greens import (GreensRun, decompose_greens, fit_pointwise_bound,
                         linear_evolve, make_delta_source)

    resolved = resolve_config(resolved)
    digest = config_digest(resolved) + "-greens"
    run_dir = Path(out_root) / digest
    summary_path = run_dir / "summary.json"
    created = _time.strftime("%Y-%m-%dT%H:%M:%S", _time.gmtime())
    if summary_path.exists():
        with open(summary_path) as fh:
            summary = json.load(fh)
        summary["cached"] = True
        return RunRecord(config_digest=digest, run_dir=str(run_dir),
                         artifacts=_artifact_map(run_dir), created=created,
                         toolkit_version=__version__, summary=summary)
    run_dir.mkdir(parents=True, exist_ok=True)
    (run_dir / "fields").mkdir(exist_ok=True)
    (run_dir / "series").mkdir(exist_ok=True)
    (run_dir / "config.resolved").write_text(_canonical_text(resolved))

    system = _system_from_config(resolved["model"])
    wt = _solve_wavetrain(system, resolved, run_dir / "wavetrain.json")
    dispersion = compute_dispersion(system, wt, int(resolved["bloch"]["n_modes"]))
    kp = PhaseKernelParams.from_dispersion(wt, dispersion)

    g, st = resolved["grid"], resolved["stepper"]
    Lx, Ly, Nx, Ny = int(g["lx"]), float(g["ly"]), int(g["nx"]), int(g["ny"])
    v0 = make_delta_source(wt, Lx, Ly, Nx, Ny, sigma0=sigma0)
    times = geometric_times(float(st["snap_t_min"]), float(st["t_final"]),
                            float(st["snap_ratio"]))
    snaps = linear_evolve(system, wt, v0, times, dt=float(st["dt"]),
                          scheme=str(st["scheme"]))
    run = GreensRun(source_center=Lx / 2.0, sigma0=sigma0, snapshots=snaps,
                    kernel_params=kp, wavetrain_digest=wt.digest())
    residuals = decompose_greens(run, v0)
    for t, f in snaps:
        write_wts(run_dir / "fields" / f"g_{t:08.2f}.wts", f)

    guard_z = guard_time(dispersion.theta, dispersion.d_perp, dispersion.alpha,
                         Lx, Ly, localized_y=False)
    guard_y = guard_time(dispersion.theta, dispersion.d_perp, dispersion.alpha,
                         Lx, Ly, localized_zeta=False)
    guard = min(guard_z, guard_y)
    window = (float(resolved["analysis"]["window_lo"]),
              min(float(resolved["analysis"]["window_hi"]), guard))
    ts = np.array([t for t, _ in snaps])
    sup_full = np.array([f.sup_norm() for _, f in snaps])
    sup_res = np.array([f.sup_norm() for _, f in residuals])
    full_series = WeightedNormSeries(times=ts, values=sup_full, weight_kind="none",
                                     derivative_order="g_full")
    res_series = WeightedNormSeries(times=ts, values=sup_res, weight_kind="none",
                                    derivative_order="g_residual")
    rows = [(t, v, "g_full", "none", False) for t, v in zip(ts, sup_full)]
    rows += [(t, v, "g_residual", "none", False) for t, v in zip(ts, sup_res)]
    _write_series_csv(run_dir / "series" / "greens_norms.csv", rows)

    fit_full = fit_decay_exponent(full_series, window)
    fit_res = fit_decay_exponent(res_series, window)
    template, violation = fit_pointwise_bound(residuals, (1.0, 0.5),
                                              dispersion.alpha,
                                              source_center=Lx / 2.0)
    summary = {
        "config_digest": digest,
        "alpha": dispersion.alpha, "theta": dispersion.theta,
        "d_perp": dispersion.d_perp,
        "guard_time": guard, "guard_time_zeta": guard_z, "guard_time_y": guard_y,
        "window": list(window),
        "exponent_full": fit_full.exponent,
        "exponent_residual": fit_res.exponent,
        "bound_C": template.C, "bound_M": template.M,
        "bound_violation": violation,
    }
    _write_json(summary_path, summary)
    return RunRecord(config_digest=digest, run_dir=str(run_dir),
                     artifacts=_artifact_map(run_dir), created=created,
                     toolkit_version=__version__, summary=summary)
