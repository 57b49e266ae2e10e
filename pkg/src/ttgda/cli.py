"""Command-line front end.

Every subcommand reads a JSON config, runs one experiment, and writes its
artifacts (delimited tables, JSON reports, PNG figures with matching
gnuplot scripts, and a manifest.json) into --out. Exit codes: 0 on
success, 2 on configuration errors (machine-readable JSON on stderr),
3 on numerical failures.

Heavy imports happen after --threads is applied, so the thread caps are in
force before any BLAS pool spins up.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .errors import (
    ConfigError,
    ContractViolation,
    DimensionError,
    TTGDAError,
)

_MISSING = object()


def _get(cfg: dict, key: str, default=_MISSING):
    if key in cfg:
        return cfg[key]
    if default is _MISSING:
        raise ConfigError(f"missing required config key: {key}", field=key)
    return default


def _number(cfg: dict, key: str, default=_MISSING, *, positive=False) -> float:
    val = _get(cfg, key, default)
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(f"{key} must be a number", field=key)
    if positive and not val > 0:
        raise ConfigError(f"{key} must be positive", field=key)
    return float(val)


def _integer(cfg: dict, key: str, default=_MISSING, *, positive=False) -> int:
    val = _get(cfg, key, default)
    if isinstance(val, bool) or not isinstance(val, int):
        raise ConfigError(f"{key} must be an integer", field=key)
    if positive and not val > 0:
        raise ConfigError(f"{key} must be positive", field=key)
    return int(val)


def _array(cfg: dict, key: str, default=_MISSING):
    import numpy as np

    val = _get(cfg, key, default)
    if val is None:
        return None
    try:
        arr = np.asarray(val, dtype=float)
    except (TypeError, ValueError):
        raise ConfigError(f"{key} must be a numeric array", field=key) from None
    if arr.size == 0:
        raise ConfigError(f"{key} must be nonempty", field=key)
    return arr


def _game(cfg: dict, *, eta_key: str = "eta"):
    from .quadratic import QuadraticGame

    eta = _number(cfg, eta_key, positive=True)
    try:
        return QuadraticGame(
            Q=_array(cfg, "Q"), R=_array(cfg, "R"), P=_array(cfg, "P"), eta=eta
        )
    except ContractViolation as exc:
        raise ConfigError(f"invalid game matrices: {exc}") from None


def _kernel(cfg: dict):
    from .meanfield import make_benchmark_kernel

    kcfg = _get(cfg, "kernel")
    if not isinstance(kcfg, dict):
        raise ConfigError("kernel must be an object", field="kernel")
    return make_benchmark_kernel(
        kappa_x=_number(kcfg, "kappa_x", positive=True),
        kappa_y=_number(kcfg, "kappa_y", positive=True),
        a=_number(kcfg, "a"),
        eps_nc=_number(kcfg, "eps_nc", 0.0),
        omega=_number(kcfg, "omega", 0.0),
        dim=_integer(kcfg, "dim", 1, positive=True),
    )


# ---------------------------------------------------------------------------
# subcommand implementations: each returns (outputs, results)


def _cmd_spectrum(cfg, out, seed):
    import numpy as np

    from . import io, report
    from .quadratic import QuadraticGame, spectral_rate

    eta_grid = _array(cfg, "eta_grid")
    if np.any(eta_grid <= 0):
        raise ConfigError("eta_grid entries must be positive", field="eta_grid")
    base = _game({**cfg, "eta": float(eta_grid[0])})
    rows = []
    for eta in eta_grid:
        game = base.with_eta(float(eta))
        mu_t = spectral_rate(game)
        rows.append((float(eta), mu_t, mu_t / np.sqrt(eta)))
    io.write_csv(
        os.path.join(out, "spectrum.csv"), ["eta", "mu_t[1/t]", "mu_s[1/s]"], rows
    )
    arr = np.asarray(rows)
    anchor = arr[np.argmin(np.abs(np.log(arr[:, 0]))), 2]
    envelope = anchor * np.minimum(np.sqrt(arr[:, 0]), 1.0 / np.sqrt(arr[:, 0]))
    report.line_plot(
        os.path.join(out, "spectrum.png"),
        [
            report.Series(arr[:, 0], arr[:, 2], "rescaled rate"),
            report.Series(arr[:, 0], arr[:, 1], "raw rate", "--"),
            report.Series(arr[:, 0], envelope, "min(sqrt, 1/sqrt) envelope", ":"),
        ],
        xlabel="eta",
        ylabel="decay rate",
        logx=True,
        logy=True,
    )
    report.gnuplot_script(
        os.path.join(out, "spectrum.gp"),
        "spectrum.csv",
        [(1, 3), (1, 2)],
        xlabel="eta",
        ylabel="decay rate",
        logx=True,
        logy=True,
    )
    best = arr[np.argmax(arr[:, 2])]
    return (
        ["spectrum.csv", "spectrum.png", "spectrum.gp"],
        {"best_eta": best[0], "best_mu_s": best[2]},
    )


def _cmd_simulate(cfg, out, seed):
    from . import io, report
    from .quadratic import fit_decay_rate, simulate_gda, spectral_rate

    game = _game(cfg)
    x0 = _array(cfg, "x0")
    y0 = _array(cfg, "y0")
    traj = simulate_gda(
        game,
        x0,
        y0,
        horizon=_number(cfg, "horizon", positive=True),
        dt=_number(cfg, "dt", positive=True),
        method=str(_get(cfg, "method", "exact")),
    )
    io.write_csv(
        os.path.join(out, "trajectory.csv"),
        ["t[t]", "s[s]", "norm_phi_sq[1]"],
        zip(traj.t, traj.s, traj.norm_phi_sq),
    )
    fit_t = fit_decay_rate(traj, "norm_sq", time_scale="t")
    fit_s = fit_decay_rate(traj, "norm_sq", time_scale="s")
    report.line_plot(
        os.path.join(out, "trajectory.png"),
        [report.Series(traj.s, traj.norm_phi_sq, "|phi|^2")],
        xlabel="s",
        ylabel="squared norm",
        logy=True,
    )
    report.gnuplot_script(
        os.path.join(out, "trajectory.gp"),
        "trajectory.csv",
        [(2, 3)],
        xlabel="s",
        ylabel="squared norm",
        logy=True,
    )
    results = {
        "fitted_rate_t": fit_t.rate,
        "fitted_rate_s": fit_s.rate,
        "spectral_rate_t": spectral_rate(game),
    }
    return ["trajectory.csv", "trajectory.png", "trajectory.gp"], results


def _cmd_hypo(cfg, out, seed):
    import dataclasses

    from . import io, report
    from .quadratic import Regime, coercivity_constants, fit_decay_rate, simulate_gda

    game = _game(cfg)
    regime_name = str(_get(cfg, "regime", "auto"))
    if regime_name == "auto":
        regime = Regime.SMALL_ETA if game.eta <= 1.0 else Regime.LARGE_ETA
    else:
        try:
            regime = Regime(regime_name)
        except ValueError:
            raise ConfigError(
                f"regime must be 'auto', 'SmallEta' or 'LargeEta', got {regime_name!r}",
                field="regime",
            ) from None
    rep = coercivity_constants(game, regime)
    doc = {
        k: v
        for k, v in dataclasses.asdict(rep).items()
        if k not in ("Pi", "M")
    }
    doc["regime"] = rep.which_regime.value
    del doc["which_regime"]
    io.write_json(os.path.join(out, "hypo.json"), doc)
    outputs = ["hypo.json"]
    results = {
        "predicted_rate": rep.predicted_rate,
        "macroscopic_coercivity_ok": rep.macroscopic_coercivity_ok,
    }
    sim = _get(cfg, "simulate", None)
    if sim is not None:
        if not isinstance(sim, dict):
            raise ConfigError("simulate must be an object", field="simulate")
        traj = simulate_gda(
            game,
            _array(sim, "x0"),
            _array(sim, "y0"),
            horizon=_number(sim, "horizon", positive=True),
            dt=_number(sim, "dt", positive=True),
            M=rep.M,
            eps=rep.eps,
        )
        io.write_csv(
            os.path.join(out, "lyapunov.csv"),
            ["t[t]", "s[s]", "H[1]"],
            zip(traj.t, traj.s, traj.H),
        )
        report.line_plot(
            os.path.join(out, "lyapunov.png"),
            [report.Series(traj.t, traj.H, "H(phi)")],
            xlabel="t",
            ylabel="hypocoercive functional",
            logy=True,
        )
        report.gnuplot_script(
            os.path.join(out, "lyapunov.gp"),
            "lyapunov.csv",
            [(1, 3)],
            xlabel="t",
            ylabel="hypocoercive functional",
            logy=True,
        )
        results["fitted_H_rate_t"] = fit_decay_rate(
            traj, "lyapunov", time_scale="t"
        ).rate
        outputs += ["lyapunov.csv", "lyapunov.png", "lyapunov.gp"]
    return outputs, results


def _cmd_precond(cfg, out, seed):
    from . import io, precond, report

    outputs, results = [], {}
    eta_grid = _array(cfg, "eta_grid", None)
    if eta_grid is not None:
        base = _game({**cfg, "eta": float(eta_grid[0])})
        rep = precond.eta_uniformity_report(base, eta_grid)
        io.write_csv(
            os.path.join(out, "uniformity.csv"),
            ["eta", "cond[1]", "lambda_min_real[1]", "rho_opt[1]"],
            [
                (r.eta, r.cond, r.lambda_min_real, r.rho_opt if r.rho_opt is not None else float("nan"))
                for r in rep.rows
            ],
        )
        etas = [r.eta for r in rep.rows]
        report.line_plot(
            os.path.join(out, "uniformity.png"),
            [report.Series(etas, [r.cond for r in rep.rows], "condition number")],
            xlabel="eta",
            ylabel="cond of preconditioned system",
            logx=True,
        )
        report.gnuplot_script(
            os.path.join(out, "uniformity.gp"),
            "uniformity.csv",
            [(1, 2)],
            xlabel="eta",
            ylabel="cond of preconditioned system",
            logx=True,
        )
        outputs += ["uniformity.csv", "uniformity.png", "uniformity.gp"]
        results.update(
            kappa_spread=rep.kappa_spread,
            kappa_variation_ok=rep.kappa_variation_ok,
            lambda_scaling_ok=rep.lambda_scaling_ok,
        )
    else:
        game = _game(cfg)
        sysm = precond.build(game)
        ok, max_imag, min_real = precond.spectrum_is_real_nonneg(sysm)
        doc = {
            "spectrum_real_nonneg": ok,
            "max_imag": max_imag,
            "min_real": min_real,
            "lambda_min_sym": sysm.lambda_min_sym,
            "rho_opt": sysm.rho_opt,
            "contraction": sysm.contraction,
        }
        io.write_json(os.path.join(out, "precond.json"), doc)
        outputs.append("precond.json")
        results.update(doc)
    return outputs, results


def _cmd_meanfield(cfg, out, seed):
    import numpy as np

    from . import io, report
    from .meanfield import ParticleSystem, counter_normals, step_particles
    from .meanfield import ROLE_INIT_X, ROLE_INIT_Y

    kernel = _kernel(cfg)
    N = _integer(cfg, "N", positive=True)
    beta = _number(cfg, "beta", positive=True)
    eta = _number(cfg, "eta", positive=True)
    dt = _number(cfg, "dt", positive=True)
    horizon = _number(cfg, "horizon", positive=True)
    stride = _integer(cfg, "stride", 1, positive=True)
    init_std = _number(cfg, "init_std", 1.0)
    sys_ = ParticleSystem(
        X=init_std * counter_normals(seed, 0, ROLE_INIT_X, (N, kernel.dim_x)),
        Y=init_std * counter_normals(seed, 0, ROLE_INIT_Y, (N, kernel.dim_y)),
        beta=beta,
        eta=eta,
    )
    steps = int(round(horizon / dt))

    def stats(s):
        return (
            s.t,
            float(s.X[:, 0].mean()),
            float(s.Y[:, 0].mean()),
            float(np.mean(np.sum(s.X**2, axis=1))),
            float(np.mean(np.sum(s.Y**2, axis=1))),
        )

    rows = [stats(sys_)]
    for _ in range(steps):
        sys_ = step_particles(sys_, kernel, dt, seed)
        if sys_.step_count % stride == 0:
            rows.append(stats(sys_))
    io.write_csv(
        os.path.join(out, "meanfield.csv"),
        ["t[t]", "mean_x1[1]", "mean_y1[1]", "msq_x[1]", "msq_y[1]"],
        rows,
    )
    arr = np.asarray(rows)
    report.line_plot(
        os.path.join(out, "meanfield.png"),
        [
            report.Series(arr[:, 0], arr[:, 1], "mean x_1"),
            report.Series(arr[:, 0], arr[:, 2], "mean y_1"),
            report.Series(arr[:, 0], arr[:, 3], "mean |x|^2", "--"),
            report.Series(arr[:, 0], arr[:, 4], "mean |y|^2", "--"),
        ],
        xlabel="t",
        ylabel="empirical moments",
    )
    report.gnuplot_script(
        os.path.join(out, "meanfield.gp"),
        "meanfield.csv",
        [(1, 2), (1, 3), (1, 4), (1, 5)],
        xlabel="t",
        ylabel="empirical moments",
    )
    results = {
        "final_msq_x": rows[-1][3],
        "final_msq_y": rows[-1][4],
        "steps": steps,
    }
    return ["meanfield.csv", "meanfield.png", "meanfield.gp"], results


def _cmd_coupling(cfg, out, seed):
    import dataclasses

    import numpy as np

    from . import io, report
    from .meanfield import ContractionParams, contraction_experiment

    kernel = _kernel(cfg)
    eta = _number(cfg, "eta", positive=True)
    params = ContractionParams(
        beta=_number(cfg, "beta", positive=True),
        eta=eta,
        gamma=_number(cfg, "gamma", max(1.0, 1.0 / eta), positive=True),
        delta=_number(cfg, "delta", positive=True),
        N=_integer(cfg, "N", positive=True),
        dt=_number(cfg, "dt", positive=True),
        horizon=_number(cfg, "horizon", positive=True),
        separation=_number(cfg, "separation", 4.0),
        init_std=_number(cfg, "init_std", 1.0),
    )
    seeds = _get(cfg, "seeds", None)
    if seeds is None:
        seeds = [seed + i for i in range(_integer(cfg, "n_seeds", 8, positive=True))]
    elif not (isinstance(seeds, list) and all(isinstance(s, int) for s in seeds)):
        raise ConfigError("seeds must be a list of integers", field="seeds")
    rep = contraction_experiment(kernel, params, seeds)
    io.write_csv(
        os.path.join(out, "coupling.csv"),
        ["t[t]", "mean_rho[1]", "mean_Z[1]", "mean_Q[1]"],
        zip(rep.t, rep.mean_rho, rep.mean_Z, rep.mean_Q),
    )
    predicted_curve = rep.mean_rho[0] * np.exp(-rep.predicted_c * rep.t)
    report.line_plot(
        os.path.join(out, "coupling.png"),
        [
            report.Series(rep.t, rep.mean_rho, "mean coupled distance"),
            report.Series(rep.t, predicted_curve, "certificate slope", "--"),
        ],
        xlabel="t",
        ylabel="E rho_t",
        logy=True,
    )
    report.gnuplot_script(
        os.path.join(out, "coupling.gp"),
        "coupling.csv",
        [(1, 2), (1, 3), (1, 4)],
        xlabel="t",
        ylabel="coupled distances",
        logy=True,
    )
    doc = {
        "fitted_rate": rep.fitted_rate,
        "predicted_c": rep.predicted_c,
        "rate_ok": rep.rate_ok,
        "admissibility": dataclasses.asdict(rep.admissibility),
    }
    io.write_json(os.path.join(out, "coupling.json"), doc)
    return (
        ["coupling.csv", "coupling.json", "coupling.png", "coupling.gp"],
        {k: doc[k] for k in ("fitted_rate", "predicted_c", "rate_ok")},
    )


def _cmd_rates(cfg, out, seed):
    from . import io, rates, report
    from .errors import OutOfRegimeError

    pcfg = _get(cfg, "profile")
    if not isinstance(pcfg, dict):
        raise ConfigError("profile must be an object", field="profile")
    ptype = str(_get(pcfg, "type"))
    a = _number(cfg, "a", positive=True)
    b = _number(cfg, "b", positive=True)
    if ptype == "piecewise":
        m = _number(pcfg, "m")
        K = _number(pcfg, "K", positive=True)
        R = _number(pcfg, "R")
        kappa_fn = rates.piecewise_kappa(m, K, R)
    elif ptype == "benchmark":
        kappa_fn = rates.benchmark_kappa(
            _number(pcfg, "kappa", positive=True),
            _number(pcfg, "eps_nc"),
            _number(pcfg, "omega"),
        )
    else:
        raise ConfigError(
            f"profile.type must be 'piecewise' or 'benchmark', got {ptype!r}",
            field="profile",
        )
    prof = rates.make_rate_profile(kappa_fn, a, b)
    io.write_csv(
        os.path.join(out, "rates.csv"),
        ["r", "kappa[1]", "kappa_tilde[1]", "phi[1]", "Phi[1]", "g[1]", "f_prime[1]", "f[1]"],
        zip(
            prof.r, prof.kappa, prof.kappa_tilde, prof.phi, prof.Phi,
            prof.g, prof.f_prime, prof.f,
        ),
    )
    doc = {"R0": prof.R0, "R1": prof.R1, "c": prof.c, "a": a, "b": b}
    if ptype == "piecewise":
        try:
            lower, upper = rates.bracket_c(a, b, K, m, R)
            doc["bracket_lower"] = lower
            doc["bracket_upper"] = upper
        except OutOfRegimeError as exc:
            doc["bracket_note"] = str(exc)
        if b == 1.0:
            doc["closed_form_c"] = rates.closed_form_c(4.0 / a, K, R)
    io.write_json(os.path.join(out, "rates.json"), doc)
    report.line_plot(
        os.path.join(out, "rates.png"),
        [
            report.Series(prof.r, prof.f, "f"),
            report.Series(prof.r, prof.f_prime, "f'"),
            report.Series(prof.r, prof.phi, "phi", "--"),
        ],
        xlabel="r",
        ylabel="distance construction",
    )
    report.gnuplot_script(
        os.path.join(out, "rates.gp"),
        "rates.csv",
        [(1, 8), (1, 7), (1, 4)],
        xlabel="r",
        ylabel="distance construction",
    )
    return (
        ["rates.csv", "rates.json", "rates.png", "rates.gp"],
        {"R0": prof.R0, "R1": prof.R1, "c": prof.c},
    )


def _assemble_sl(cfg):
    import numpy as np

    from . import averaging
    from .quadratic import QuadraticGame, assemble

    try:
        game = QuadraticGame(
            Q=_array(cfg, "Q"), R=_array(cfg, "R"), P=_array(cfg, "P"), eta=1.0
        )
    except ContractViolation as exc:
        raise ConfigError(f"invalid game matrices: {exc}") from None
    mats = assemble(game)
    v0 = _array(cfg, "v0", None)
    if v0 is None:
        v0 = np.ones(mats.n + mats.m)
    elif v0.shape != (mats.n + mats.m,):
        raise ConfigError(
            f"v0 must have length {mats.n + mats.m}", field="v0"
        )
    return game, mats, v0, averaging


def _cmd_averaging(cfg, out, seed):
    from . import io

    game, mats, v0, averaging = _assemble_sl(cfg)
    result = averaging.averaging_analysis(mats.S, mats.L, v0)
    bound = averaging.mu_lower_bound(game.Q, game.R, game.P)
    doc = {
        "mu": result.mu,
        "frequencies": result.frequencies,
        "period": result.period,
        "commensurate": result.commensurate,
        "mu_lower_bound": bound,
    }
    io.write_json(os.path.join(out, "averaging.json"), doc)
    return ["averaging.json"], {"mu": result.mu, "mu_lower_bound": bound}


def _cmd_validate(cfg, out, seed):
    import numpy as np

    from . import io, report

    game, mats, v0, averaging = _assemble_sl(cfg)
    rep = averaging.validate_averaging(
        mats.S,
        mats.L,
        v0,
        _number(cfg, "gamma", positive=True),
        substeps_per_period=_integer(cfg, "substeps_per_period", 64, positive=True),
        efolds=_number(cfg, "efolds", 8.0, positive=True),
    )
    io.write_csv(
        os.path.join(out, "envelope.csv"),
        ["s[s]", "envelope[1]"],
        zip(rep.envelope_t, rep.envelope_amp),
    )
    predicted = rep.envelope_amp[0] * np.exp(
        -rep.rate_predicted * (rep.envelope_t - rep.envelope_t[0])
    )
    report.line_plot(
        os.path.join(out, "envelope.png"),
        [
            report.Series(rep.envelope_t, rep.envelope_amp, "per-period max |phi|"),
            report.Series(rep.envelope_t, predicted, "averaged prediction", "--"),
        ],
        xlabel="s",
        ylabel="envelope",
        logy=True,
    )
    report.gnuplot_script(
        os.path.join(out, "envelope.gp"),
        "envelope.csv",
        [(1, 2)],
        xlabel="s",
        ylabel="envelope",
        logy=True,
    )
    doc = {
        "mu": rep.mu,
        "gamma": rep.gamma,
        "rate_fitted": rep.rate_fitted,
        "rate_predicted": rep.rate_predicted,
        "tolerance": rep.tolerance,
        "ok": rep.ok,
    }
    io.write_json(os.path.join(out, "validate.json"), doc)
    return (
        ["envelope.csv", "envelope.png", "envelope.gp", "validate.json"],
        {"rate_fitted": rep.rate_fitted, "rate_predicted": rep.rate_predicted, "ok": rep.ok},
    )


_COMMANDS = {
    "spectrum": _cmd_spectrum,
    "simulate": _cmd_simulate,
    "hypo": _cmd_hypo,
    "precond": _cmd_precond,
    "meanfield": _cmd_meanfield,
    "coupling": _cmd_coupling,
    "rates": _cmd_rates,
    "averaging": _cmd_averaging,
    "validate": _cmd_validate,
}


def _apply_thread_cap(threads: int | None):
    if threads is None:
        return
    for var in (
        "OMP_NUM_THREADS",
        "OPENBLAS_NUM_THREADS",
        "MKL_NUM_THREADS",
        "NUMEXPR_NUM_THREADS",
    ):
        os.environ[var] = str(threads)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ttgda",
        description="Two-timescale gradient descent-ascent experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON config file")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--seed", type=int, default=0, help="base RNG seed")
        p.add_argument(
            "--threads", type=int, default=None, help="cap BLAS/OpenMP threads"
        )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    _apply_thread_cap(args.threads)
    try:
        from . import io

        cfg = io.read_config(args.config)
        os.makedirs(args.out, exist_ok=True)
        outputs, results = _COMMANDS[args.command](cfg, args.out, args.seed)
        manifest = io.build_manifest(
            args.command,
            cfg,
            args.seed,
            outputs,
            threads=args.threads,
            results=results,
        )
        io.write_json(os.path.join(args.out, "manifest.json"), manifest)
        return 0
    except (ConfigError, ContractViolation, DimensionError) as exc:
        payload = {"error": "config", "message": str(exc)}
        if isinstance(exc, ConfigError) and exc.field is not None:
            payload["field"] = exc.field
        print(json.dumps(payload), file=sys.stderr)
        return 2
    except TTGDAError as exc:
        payload = {
            "error": "numerical",
            "type": type(exc).__name__,
            "message": str(exc),
        }
        print(json.dumps(payload), file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
