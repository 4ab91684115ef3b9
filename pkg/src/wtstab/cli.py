"""Command-line interface.

Every command takes --config plus repeated --set section.key=value
overrides; artifacts land in content-addressed run directories under
--out-root (default ./runs).
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np

from . import analysis as ana
from . import __version__
from .bloch import BlochGrid, compute_dispersion, verify_spectral_stability
from .field import read_wts, write_wts
from .kernel import IDENTITIES, check_integral_identity
from .phase import extract_phase
from .sim2d import weighted_sup_norm
from .wavetrain import closed_form_lambda_omega, solve_profile


def _load(config, set_):
    cfg = ana.load_config(config) if config else None
    return ana.resolve_config(cfg, set_)


def _make_system_wavetrain(resolved):
    system = ana._system_from_config(resolved["model"])
    wt_cfg = resolved["wavetrain"]
    q = ana._scaled_wavenumber(wt_cfg)
    guess = closed_form_lambda_omega(system, q, n_modes=int(wt_cfg["n_modes"]))
    if wt_cfg["method"] == "closed_form":
        return system, guess
    wt = solve_profile(system, guess.k, guess.profile, guess.omega,
                       n_modes=int(wt_cfg["n_modes"]), tol=float(wt_cfg["tol"]))
    return system, wt


def _echo_json(obj):
    click.echo(json.dumps(obj, indent=2, sort_keys=True, default=ana._json_default))


@click.group()
@click.version_option(version=__version__)
def main():
    """Wave-train stability toolkit."""


# -- wavetrain ---------------------------------------------------------------

@main.group()
def wavetrain():
    """Wave-train profile solves."""


@wavetrain.command("solve")
@click.option("--config", type=click.Path(exists=True), default=None)
@click.option("--set", "set_", multiple=True, help="override section.key=value")
@click.option("--out", type=click.Path(), default=None, help="write JSON here")
def wavetrain_solve(config, set_, out):
    """Solve the profile and emit k, omega, residual, Fourier coefficients."""
    resolved = _load(config, set_)
    _, wt = _make_system_wavetrain(resolved)
    payload = {
        "k": wt.k, "omega": wt.omega, "residual": wt.residual_norm,
        "n_modes": wt.n_modes,
        "coefficients": [[[float(c.real), float(c.imag)] for c in row]
                         for row in wt.profile_hat],
    }
    if out:
        Path(out).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    else:
        _echo_json(payload)


# -- bloch -------------------------------------------------------------------

@main.group()
def bloch():
    """Spectral verification and dispersion coefficients."""


@bloch.command("verify")
@click.option("--config", type=click.Path(exists=True), default=None)
@click.option("--set", "set_", multiple=True)
@click.option("--surface-csv", type=click.Path(), default=None,
              help="dump eigenvalue surface rows (nu_x, nu_y, Re, Im)")
def bloch_verify(config, set_, surface_csv):
    """Check the stability conditions over the Bloch grid."""
    resolved = _load(config, set_)
    system, wt = _make_system_wavetrain(resolved)
    bl = resolved["bloch"]
    grid = BlochGrid.default(system, wt, n_x=int(bl["n_x"]), n_y=int(bl["n_y"]))
    report = verify_spectral_stability(system, wt, grid,
                                       n_modes=int(bl["n_modes"]), m=int(bl["m"]))
    if surface_csv:
        with open(surface_csv, "w") as fh:
            fh.write("nu_x,nu_y,re_lambda,im_lambda\n")
            for i, nx in enumerate(grid.nu_x_points):
                for j, ny in enumerate(grid.nu_y_points):
                    for lam in report.surface.values[i, j]:
                        fh.write(f"{nx!r},{ny!r},{lam.real!r},{lam.imag!r}\n")
    _echo_json(report.as_dict())


@bloch.command("dispersion")
@click.option("--config", type=click.Path(exists=True), default=None)
@click.option("--set", "set_", multiple=True)
def bloch_dispersion(config, set_):
    """Critical-branch coefficients alpha, theta, d_perp."""
    resolved = _load(config, set_)
    system, wt = _make_system_wavetrain(resolved)
    d = compute_dispersion(system, wt, n_modes=int(resolved["bloch"]["n_modes"]),
                           fd_step=float(resolved["bloch"]["fd_step"]))
    _echo_json({
        "alpha": d.alpha, "alpha_fd": d.alpha_fd, "theta": d.theta,
        "d_perp": d.d_perp, "d_perp_fd": d.d_perp_fd, "eta": d.eta,
        "eps": d.eps, "h_constant": d.H_bound,
    })


# -- kernel ------------------------------------------------------------------

@main.group()
def kernel():
    """Kernel evaluation and integral identities."""


@kernel.command("check-identities")
@click.option("--samples", default=20, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", type=click.Path(), default=None)
def kernel_check_identities(samples, seed, out):
    """Closed form vs quadrature for every integral identity."""
    rng = np.random.default_rng(seed)
    lines = ["identity,params,closed,quadrature,abs_error"]
    for _ in range(samples):
        angle = rng.uniform(0, 2 * np.pi)
        base = {
            "M": rng.uniform(1.2, 8.0), "t": rng.uniform(0.5, 5.0),
            "zeta": rng.uniform(-3, 3), "y": rng.uniform(-3, 3),
            "alpha": rng.uniform(-1, 1),
            "beta": np.cos(angle), "gamma": np.sin(angle),
        }
        base["s"] = rng.uniform(0.0, 0.9 * base["t"])
        cases = {
            "A4": {"a": -rng.uniform(0.2, 4.0), "b": rng.uniform(-2, 2)},
            "A5": {"a": rng.uniform(0.0, 3.0), "b": rng.uniform(0.2, 4.0)},
            "A6": {"b": rng.uniform(0.2, 4.0)},
            "I54a": base, "I54b": base, "I58a": base, "I58b": base,
        }
        for name in sorted(IDENTITIES):
            closed, quad = check_integral_identity(name, cases[name])
            err = abs(closed - quad)
            params = ";".join(f"{k}={cases[name][k]:.6g}" for k in sorted(cases[name])
                              if isinstance(cases[name][k], (int, float)))
            lines.append(f"{name},{params},{closed!r},{quad!r},{err:.3e}")
    text = "\n".join(lines) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        click.echo(text, nl=False)


# -- greens ------------------------------------------------------------------

@main.group()
def greens():
    """Linear Green's-function runs."""


@greens.command("run")
@click.option("--config", type=click.Path(exists=True), default=None)
@click.option("--set", "set_", multiple=True)
@click.option("--sigma0", default=0.05, show_default=True)
@click.option("--out-root", default="runs", show_default=True)
def greens_run(config, set_, sigma0, out_root):
    """Evolve a near-delta source and fit the pointwise bound."""
    resolved = _load(config, set_)
    record = ana.run_greens_experiment(resolved, sigma0=sigma0, out_root=out_root)
    _echo_json(record.summary)


# -- sim ---------------------------------------------------------------------

@main.group()
def sim():
    """Nonlinear perturbed-wave-train simulations."""


@sim.command("run")
@click.option("--config", type=click.Path(exists=True), default=None)
@click.option("--set", "set_", multiple=True)
@click.option("--out-root", default="runs", show_default=True)
@click.option("--force/--no-force", default=None,
              help="continue past failed spectral verification")
def sim_run(config, set_, out_root, force):
    """Full experiment pipeline (same as `experiment run`)."""
    cfg = ana.load_config(config) if config else None
    record = ana.run_experiment(cfg, set_, out_root=out_root, force=force)
    _echo_json(record.summary)


# -- phase -------------------------------------------------------------------

@main.group()
def phase():
    """Phase extraction from stored snapshots."""


@phase.command("extract")
@click.option("--config", type=click.Path(exists=True), default=None)
@click.option("--set", "set_", multiple=True)
@click.option("--snapshot", "snapshots", type=click.Path(exists=True),
              multiple=True, required=True, help="stored .wts snapshot files")
@click.option("--kind", type=click.Choice(["v", "u"]), default="v",
              show_default=True,
              help="v: perturbation snapshots (the state is rebuilt as U + v); "
                   "u: full-state snapshots")
@click.option("--out-dir", type=click.Path(), default=".")
def phase_extract(config, set_, snapshots, kind, out_dir):
    """Extract psi from stored snapshots; write fields and a CSV."""
    import numpy as _np

    resolved = _load(config, set_)
    system, wt = _make_system_wavetrain(resolved)
    d = compute_dispersion(system, wt, n_modes=int(resolved["bloch"]["n_modes"]))
    g = resolved["grid"]
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for path in snapshots:
        fld = read_wts(path, Lx=int(g["lx"]), Ly=float(g["ly"]))
        if kind == "v":
            U = wt.evaluate(fld.zeta() % 1.0)
            fld = fld.with_values(fld.values + U[:, _np.newaxis, :])
        ph = extract_phase(fld, wt)
        write_wts(out / (Path(path).stem + ".psi.wts"), ph.psi)
        kind = "line" if resolved["perturbation"]["kind"] == "line_localized" else "localized"
        bg = (float(resolved["perturbation"]["beta"]),
              float(resolved["perturbation"]["gamma"]))
        ws = weighted_sup_norm(ph.psi, d, kind, fld.time, 4.0, beta_gamma=bg)
        rows.append((fld.time, ws.value, "psi", f"{kind}_M4", ws.boundary_flag))
        for key, dfield in sorted(ph.dpsi.items()):
            ws = weighted_sup_norm(dfield, d, kind, fld.time, 4.0, beta_gamma=bg)
            rows.append((fld.time, ws.value, f"psi_{key}", f"{kind}_M4",
                         ws.boundary_flag))
    ana._write_series_csv(out / "phase_norms.csv", rows)
    click.echo(f"wrote {len(snapshots)} psi fields and phase_norms.csv to {out}")


# -- fit ---------------------------------------------------------------------

@main.group()
def fit():
    """Decay-exponent fits."""


@fit.command("decay")
@click.option("--series", type=click.Path(exists=True), required=True,
              help="CSV from a run's series directory")
@click.option("--order", default="vtilde", show_default=True,
              help="derivative_order column filter")
@click.option("--weight", default="none", show_default=True,
              help="weight_kind column filter")
@click.option("--window", nargs=2, type=float, default=(5.0, 100.0),
              show_default=True)
def fit_decay(series, order, weight, window):
    """OLS power-law fit of one stored series."""
    ts, vals = [], []
    with open(series) as fh:
        header = fh.readline().strip().split(",")
        for line in fh:
            parts = line.strip().split(",")
            row = dict(zip(header, parts))
            if row["derivative_order"] == order and row["weight_kind"] == weight:
                ts.append(float(row["t"]))
                vals.append(float(row["value"]))
    if not ts:
        raise click.ClickException(f"no rows match order={order} weight={weight}")
    from .sim2d import WeightedNormSeries
    s = WeightedNormSeries(times=np.array(ts), values=np.array(vals),
                           weight_kind=weight, derivative_order=order)
    f = ana.fit_decay_exponent(s, window)
    _echo_json({"exponent": f.exponent, "intercept": f.intercept,
                "window": list(f.window), "r_squared": f.r_squared,
                "n_points": f.n_points})


# -- experiment --------------------------------------------------------------

@main.group()
def experiment():
    """End-to-end experiments."""


@experiment.command("run")
@click.option("--config", type=click.Path(exists=True), default=None)
@click.option("--set", "set_", multiple=True)
@click.option("--out-root", default="runs", show_default=True)
@click.option("--force/--no-force", default=None)
def experiment_run(config, set_, out_root, force):
    """wavetrain -> bloch -> simulation -> phase -> fits."""
    cfg = ana.load_config(config) if config else None
    record = ana.run_experiment(cfg, set_, out_root=out_root, force=force)
    _echo_json(record.summary)


if __name__ == "__main__":
    sys.exit(main())
