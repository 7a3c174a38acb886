"""Command-line interface: reproducible cooling experiments to CSV + PNG.

Configuration is a flat key = value text file plus repeatable command-line
overrides (-s key=value); every quantity is in kappa units.  Each data
command writes a CSV whose header comments echo the fully resolved
configuration, so a result file identifies its run exactly; identical
configurations reproduce byte-identical CSVs in fixed-step mode.  A PNG
rendering of the same data is written next to each CSV unless --no-plot.

Commands:
  derive     dump the 25 moment equations (text + matrix CSV + residuals)
  simulate   integrate a model (full25 | weak5 | strong1) and emit m(t)
  steady     steady state of the chosen model
  analyze    cooling-rate / detuning report (gamma_c, A+-, m_ss, delta_opt)
  stability  weak-model spectrum, optional tilde-trajectory phase data
  sweep      m_ss and gamma_c grids over delta_eff and/or nu
  oracle     truncated-Fock-space master-equation run (ground truth)
  compare    aligned m(t) from full25 vs analytic (vs oracle), deviations
  keys       list all configuration keys and defaults

Exit codes: 0 success, 2 configuration error, 3 numerical failure
(singular system / step underflow), 4 cutoff saturation.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import effective, oracle, plotting, stability
from .errors import (
    ConfigError,
    CutoffSaturation,
    NonPositiveRate,
    SingularSystem,
    StepUnderflow,
)
from .opalg import MOMENTS, format_row
from .params import SystemParams, effective_params
from .rates import (
    StepPolicy,
    assemble,
    default_initial,
    integrate,
    mean_phonon,
    stationary,
)

MODELS = ("full25", "weak5", "strong1", "oracle")


@dataclass
class RunConfig:
    """Flat run configuration; all rates in kappa units."""

    eta: float = 0.1
    nu: float = 0.1
    kappa: float = 1.0
    delta_eff: float = 0.5
    g_eff: float = 0.1
    Omega: float | None = None
    g: float | None = None
    Delta: float | None = None
    delta: float | None = None
    model: str = "full25"
    eta_order: int = 2
    t_end: float = 50.0
    samples: int = 401
    m0: float = 100.0
    m0_kind: str = "fock"
    n_cav: int = 6
    n_phn: int = 24
    step_mode: str = "adaptive"
    rtol: float = 1e-9
    atol: float = 1e-12
    dt: float | None = None
    sweep_axis: str = "delta_eff"
    sweep_min: float = 0.1
    sweep_max: float = 3.0
    sweep_points: int = 60
    sweep_scale: str = "log"
    sweep2_axis: str | None = None
    sweep2_min: float | None = None
    sweep2_max: float | None = None
    sweep2_points: int | None = None
    sweep2_scale: str = "log"
    quantity: str = "both"
    workers: int = 1

    def params(self) -> SystemParams:
        return SystemParams(
            eta=self.eta,
            nu=self.nu,
            delta_eff=self.delta_eff,
            g_eff=self.g_eff,
            kappa=self.kappa,
        )

    def step_policy(self) -> StepPolicy:
        return StepPolicy(
            mode=self.step_mode,
            rtol=self.rtol,
            atol=self.atol,
            dt=self.dt,
            samples=self.samples,
        )


_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(RunConfig)}
_RAW_KEYS = ("Omega", "g", "Delta", "delta")


def _parse_value(key: str, text: str):
    if key not in _FIELD_TYPES:
        raise ConfigError(f"unknown configuration key {key!r}")
    text = text.strip()
    if text.lower() in ("none", ""):
        return None
    ftype = _FIELD_TYPES[key]
    try:
        if "int" in ftype:
            return int(text)
        if "float" in ftype:
            return float(text)
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {text!r} ({exc})") from exc
    return text


def load_config(path: str | None, overrides: list[str]) -> RunConfig:
    """Resolve a RunConfig from file + key=value overrides."""
    explicit: dict[str, object] = {}
    if path:
        try:
            lines = Path(path).read_text().splitlines()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        for lineno, line in enumerate(lines, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
            key, _, value = line.partition("=")
            explicit[key.strip()] = _parse_value(key.strip(), value)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        key, _, value = item.partition("=")
        explicit[key.strip()] = _parse_value(key.strip(), value)

    raw_given = [k for k in _RAW_KEYS if explicit.get(k) is not None]
    if raw_given:
        if len(raw_given) != len(_RAW_KEYS):
            missing = sorted(set(_RAW_KEYS) - set(raw_given))
            raise ConfigError(f"raw parameters require all of {_RAW_KEYS}; missing {missing}")
        if "g_eff" in explicit or "delta_eff" in explicit:
            raise ConfigError("give either raw (Omega, g, Delta, delta) or "
                              "(g_eff, delta_eff), not both")

    cfg = RunConfig(**explicit)
    if raw_given:
        cfg.g_eff, cfg.delta_eff = effective_params(cfg.Omega, cfg.g, cfg.Delta, cfg.delta)

    if cfg.model not in MODELS:
        raise ConfigError(f"model must be one of {MODELS}, got {cfg.model!r}")
    if cfg.eta_order not in (0, 1, 2):
        raise ConfigError("eta_order must be 0, 1, or 2")
    if cfg.t_end <= 0:
        raise ConfigError("t_end must be positive")
    if cfg.samples < 2:
        raise ConfigError("samples must be at least 2")
    if cfg.sweep_points < 2 or (cfg.sweep2_points is not None and cfg.sweep2_points < 2):
        raise ConfigError("sweep grids need at least 2 points per axis")
    if cfg.step_mode not in ("adaptive", "fixed"):
        raise ConfigError("step_mode must be 'adaptive' or 'fixed'")
    if cfg.m0_kind not in ("fock", "thermal"):
        raise ConfigError("m0_kind must be 'fock' or 'thermal'")
    try:
        cfg.params()
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------

def _config_comments(cfg: RunConfig, command: str) -> list[str]:
    lines = [f"# cavcool {command}"]
    for f in dataclasses.fields(RunConfig):
        lines.append(f"# {f.name} = {getattr(cfg, f.name)}")
    return lines


def write_csv(path: Path, comments: list[str], columns: list[str], rows) -> None:
    """CSV with provenance comments; floats use round-trip repr."""
    with open(path, "w") as fh:
        for line in comments:
            fh.write(line + "\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def _trajectory_rows(times, states, eta):
    for t, state in zip(times, states):
        m = state[1] - eta * state[MOMENTS.index("k12")] + eta**2 * state[2]
        yield [t, m, *state]


TRAJECTORY_COLUMNS = ["t", "m", *MOMENTS]


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_derive(cfg: RunConfig, out: Path, plot: bool) -> int:
    from .opalg import derive_rate_system, rows_to_numeric

    params = cfg.params()
    rows, open_rows = derive_rate_system(params, cfg.eta_order)

    eq_path = out.with_name(out.name + "_equations.txt")
    with open(eq_path, "w") as fh:
        fh.write("\n".join(_config_comments(cfg, "derive")) + "\n\n")
        for row in rows:
            fh.write(format_row(row) + "\n")
    print(f"wrote {eq_path}")

    matrix, drive = rows_to_numeric(rows, params.eta)
    mat_path = out.with_name(out.name + "_matrix.csv")
    write_csv(
        mat_path,
        _config_comments(cfg, "derive"),
        ["row"] + list(MOMENTS) + ["drive"],
        ([i, *line, d] for i, (line, d) in enumerate(zip(matrix, drive))),
    )
    print(f"wrote {mat_path}")

    res_path = out.with_name(out.name + "_residuals.txt")
    with open(res_path, "w") as fh:
        fh.write("\n".join(_config_comments(cfg, "derive")) + "\n\n")
        if not open_rows:
            fh.write("all rows closed over the 25 named moments at this order\n")
        for row in open_rows:
            fh.write(f"row {row.target}: dropped couplings outside the moment set:\n")
            for mon, coeff in sorted(row.residual.terms.items()):
                fh.write(f"    ({coeff}) * <{mon.label()}>\n")
    print(f"wrote {res_path}")
    for row in rows:
        print(format_row(row))
    if open_rows:
        names = ", ".join(r.target for r in open_rows)
        print(f"note: rows {names} drop couplings outside the 25-moment set "
              f"(see {res_path.name})")
    return 0


def _simulate_full25(cfg: RunConfig):
    params = cfg.params()
    system = assemble(params, cfg.eta_order)
    v0 = default_initial(cfg.m0, params)
    traj = integrate(system, v0, cfg.t_end, cfg.step_policy())
    return params, traj


def cmd_simulate(cfg: RunConfig, out: Path, plot: bool) -> int:
    params = cfg.params()
    csv_path = out.with_suffix(".csv")
    comments = _config_comments(cfg, "simulate")

    if cfg.model == "full25":
        _, traj = _simulate_full25(cfg)
        write_csv(csv_path, comments, TRAJECTORY_COLUMNS,
                  _trajectory_rows(traj.times, traj.states, params.eta))
        times, m = traj.times, traj.m
    elif cfg.model == "weak5":
        model = effective.weak_model(params, cfg.eta_order)
        times = np.linspace(0.0, cfg.t_end, cfg.samples)
        from scipy.integrate import solve_ivp

        sol = solve_ivp(
            lambda t, v: model.M @ v + model.beta,
            (0.0, cfg.t_end),
            np.array([cfg.m0, 0.0, 0.0, 0.0, 0.0]),
            method="DOP853", rtol=cfg.rtol, atol=cfg.atol, t_eval=times,
        )
        if not sol.success:
            raise StepUnderflow(sol.message)
        m = sol.y[0]
        write_csv(csv_path, comments, ["t", "m", "n2", "k7", "k8", "k9", "k10"],
                  ([t, row[0], *row] for t, row in zip(sol.t, sol.y.T)))
    elif cfg.model == "strong1":
        model = effective.strong_model(params)
        times = np.linspace(0.0, cfg.t_end, cfg.samples)
        m = effective.m_of_t(model, cfg.m0, times)
        write_csv(csv_path, comments, ["t", "m"], zip(times, m))
    else:
        raise ConfigError("use the 'oracle' command for model=oracle runs")

    print(f"wrote {csv_path}")
    print(f"m(0) = {m[0]:.6g}  ->  m({cfg.t_end:g}) = {m[-1]:.6g}")
    if plot:
        png = plotting.render_trajectory(times, m, str(out.with_suffix(".png")),
                                         title=f"{cfg.model} cooling trajectory")
        print(f"wrote {png}")
    return 0


def cmd_steady(cfg: RunConfig, out: Path, plot: bool) -> int:
    params = cfg.params()
    comments = _config_comments(cfg, "steady")
    csv_path = out.with_suffix(".csv")

    if cfg.model == "full25":
        system = assemble(params, cfg.eta_order)
        v = stationary(system)
        m = mean_phonon(v, params.eta)
        write_csv(csv_path, comments, ["m", *MOMENTS], [[m, *v.values]])
        print(f"wrote {csv_path}")
        print(f"steady m = {m:.8g}   (n1 = {v['n1']:.6g}, n2 = {v['n2']:.6g})")
        violations = v.physicality_violations()
        if violations:
            print("advisory physicality checks: " + "; ".join(violations))
    elif cfg.model == "weak5":
        model = effective.weak_model(params, cfg.eta_order)
        v = effective.weak_stationary(model)
        write_csv(csv_path, comments, ["m", "n2", "k7", "k8", "k9", "k10"],
                  [[v[0], *v]])
        print(f"wrote {csv_path}")
        print(f"weak-model steady n2 = {v[0]:.8g}")
    elif cfg.model == "strong1":
        model = effective.strong_model(params)
        m = model.m_ss
        write_csv(csv_path, comments, ["m"], [[m]])
        print(f"wrote {csv_path}")
        print(f"analytic steady m_ss = {m:.8g}")
    else:
        raise ConfigError("steady supports models full25, weak5, strong1")
    return 0


def cmd_analyze(cfg: RunConfig, out: Path, plot: bool) -> int:
    params = cfg.params()
    model = effective.strong_model(params)
    regime = "weak confinement (nu < kappa)" if params.nu < params.kappa else \
        "strong confinement (nu >= kappa)"
    opt = effective.optimal_detuning(params)

    lines = [
        f"parameters: eta={params.eta:g} nu={params.nu:g} delta_eff={params.delta_eff:g} "
        f"g_eff={params.g_eff:g} kappa={params.kappa:g}",
        f"regime: {regime}",
        f"A+ = {model.a_plus:.8g}   A- = {model.a_minus:.8g}   [kappa]",
        f"cooling rate gamma_c = {model.gamma_c:.8g} kappa "
        f"({'cooling' if model.gamma_c > 0 else 'heating'})",
    ]
    if model.gamma_c > 0:
        lines.append(f"steady phonon number m_ss = {model.m_ss:.8g}")
        lines.append(f"1/e cooling time = {1.0 / model.gamma_c:.8g} / kappa")
    else:
        lines.append("steady phonon number undefined (delta_eff <= 0 heats)")
    lines.append(
        f"optimal detuning ({opt.regime} limit): delta = {opt.delta_regime:.8g} "
        f"-> m_ss = {opt.m_ss_regime:.8g}"
    )
    lines.append(
        f"optimal detuning (exact minimizer):  delta = {opt.delta_exact:.8g} "
        f"-> m_ss = {opt.m_ss_exact:.8g} (numeric: {opt.delta_numeric:.10g})"
    )
    text = "\n".join(lines)
    print(text)
    txt_path = out.with_suffix(".txt")
    txt_path.write_text("\n".join(_config_comments(cfg, "analyze")) + "\n\n" + text + "\n")
    print(f"wrote {txt_path}")
    return 0


def cmd_stability(cfg: RunConfig, out: Path, plot: bool, with_trajectory: bool) -> int:
    params = cfg.params()
    for order in (0, 1, 2):
        print(stability.spectrum(params, order))
    report = stability.spectrum(params, cfg.eta_order)
    txt_path = out.with_suffix(".txt")
    txt_path.write_text(
        "\n".join(_config_comments(cfg, "stability")) + "\n\n"
        + "\n".join(str(stability.spectrum(params, o)) for o in (0, 1, 2)) + "\n"
    )
    print(f"wrote {txt_path}")

    if with_trajectory:
        model = effective.weak_model(params, cfg.eta_order)
        from scipy.integrate import solve_ivp

        v0 = np.array([cfg.m0, 0.0, 0.0, 0.0, 0.0])
        if cfg.eta_order >= 2:
            v0 = stability.shift_to_tilde(model, v0)
        t_eval = np.linspace(0.0, cfg.t_end, cfg.samples)
        sol = solve_ivp(lambda t, v: model.M @ v, (0.0, cfg.t_end), v0,
                        method="DOP853", rtol=cfg.rtol, atol=cfg.atol, t_eval=t_eval)
        if not sol.success:
            raise StepUnderflow(sol.message)
        csv_path = out.with_suffix(".csv")
        write_csv(csv_path, _config_comments(cfg, "stability"),
                  ["t", "n2t", "k7t", "k8t", "k9t", "k10t"],
                  ([t, *row] for t, row in zip(sol.t, sol.y.T)))
        print(f"wrote {csv_path}")
        if plot:
            png = plotting.render_phase(sol.y.T, str(out.with_suffix(".png")))
            print(f"wrote {png}")
    return 0


def _steady_m_worker(args) -> float:
    eta, nu, delta_eff, g_eff, kappa, eta_order = args
    try:
        params = SystemParams(eta=eta, nu=nu, delta_eff=delta_eff, g_eff=g_eff, kappa=kappa)
        return mean_phonon(stationary(assemble(params, eta_order)), eta)
    except (SingularSystem, ValueError):
        return float("nan")


def _axis_values(lo: float, hi: float, points: int, scale: str) -> np.ndarray:
    if scale == "log":
        if lo <= 0 or hi <= 0:
            raise ConfigError("log-scale sweep bounds must be positive")
        return np.geomspace(lo, hi, points)
    if scale == "linear":
        return np.linspace(lo, hi, points)
    raise ConfigError("sweep scale must be 'log' or 'linear'")


def cmd_sweep(cfg: RunConfig, out: Path, plot: bool) -> int:
    params = cfg.params()
    if cfg.sweep_axis not in ("delta_eff", "nu"):
        raise ConfigError("sweep_axis must be 'delta_eff' or 'nu'")
    axis1 = _axis_values(cfg.sweep_min, cfg.sweep_max, cfg.sweep_points, cfg.sweep_scale)
    comments = _config_comments(cfg, "sweep")
    csv_path = out.with_suffix(".csv")
    gamma_norm = 2 * params.g_eff**2 / params.kappa

    def point_params(**kw) -> dict[str, float]:
        base = {"nu": params.nu, "delta_eff": params.delta_eff}
        base.update(kw)
        return base

    if cfg.sweep2_axis:
        if {cfg.sweep_axis, cfg.sweep2_axis} != {"delta_eff", "nu"}:
            raise ConfigError("2-D sweeps must cover delta_eff and nu, one each")
        if None in (cfg.sweep2_min, cfg.sweep2_max, cfg.sweep2_points):
            raise ConfigError("sweep2_min/max/points required for a 2-D sweep")
        axis2 = _axis_values(cfg.sweep2_min, cfg.sweep2_max, cfg.sweep2_points,
                             cfg.sweep2_scale)
        rows = []
        nus = axis1 if cfg.sweep_axis == "nu" else axis2
        deltas = axis2 if cfg.sweep_axis == "nu" else axis1
        mss_grid = np.empty((len(nus), len(deltas)))
        rate_grid = np.empty_like(mss_grid)
        for i, nu in enumerate(nus):
            for j, d in enumerate(deltas):
                try:
                    mss = effective.steady_phonon_zeroth(nu, d, params.kappa)
                except NonPositiveRate:
                    mss = float("nan")
                model = effective.strong_model(
                    SystemParams(eta=params.eta, nu=nu, delta_eff=d,
                                 g_eff=params.g_eff, kappa=params.kappa))
                mss_grid[i, j] = mss
                rate_grid[i, j] = model.gamma_c
                rows.append([nu, d, mss, model.gamma_c, model.gamma_c / gamma_norm])
        write_csv(csv_path, comments,
                  ["nu", "delta_eff", "m_ss", "gamma_c", "gamma_c_over_2g2_kappa"], rows)
        print(f"wrote {csv_path}")
        if plot:
            png1 = plotting.render_sweep_grid(nus, deltas, mss_grid,
                                              str(out.with_name(out.name + "_mss.png")),
                                              label="m_ss")
            png2 = plotting.render_sweep_grid(nus, deltas, rate_grid / gamma_norm,
                                              str(out.with_name(out.name + "_gamma.png")),
                                              label="gamma_c / (2 g_eff^2/kappa)")
            print(f"wrote {png1}\nwrote {png2}")
        return 0

    # 1-D sweep
    include_full = cfg.quantity in ("full25", "all")
    columns = [cfg.sweep_axis, "m_ss", "gamma_c", "gamma_c_over_2g2_kappa"]
    if include_full:
        columns.append("m_full25")
    rows = []
    full_vals: list[float] = []
    if include_full:
        jobs = []
        for value in axis1:
            pp = point_params(**{cfg.sweep_axis: float(value)})
            jobs.append((params.eta, pp["nu"], pp["delta_eff"], params.g_eff,
                         params.kappa, cfg.eta_order))
        if cfg.workers > 1:
            with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
                full_vals = list(pool.map(_steady_m_worker, jobs))
        else:
            full_vals = [_steady_m_worker(job) for job in jobs]
    for idx, value in enumerate(axis1):
        pp = point_params(**{cfg.sweep_axis: float(value)})
        try:
            mss = effective.steady_phonon_zeroth(pp["nu"], pp["delta_eff"], params.kappa)
        except NonPositiveRate:
            mss = float("nan")
        model = effective.strong_model(
            SystemParams(eta=params.eta, nu=pp["nu"], delta_eff=pp["delta_eff"],
                         g_eff=params.g_eff, kappa=params.kappa))
        row = [value, mss, model.gamma_c, model.gamma_c / gamma_norm]
        if include_full:
            row.append(full_vals[idx])
        rows.append(row)
    write_csv(csv_path, comments, columns, rows)
    print(f"wrote {csv_path}")
    mss_col = np.array([r[1] for r in rows])
    if np.isfinite(mss_col).any():
        imin = int(np.nanargmin(mss_col))
        print(f"m_ss minimum {mss_col[imin]:.8g} at {cfg.sweep_axis} = {axis1[imin]:.8g}")
    if plot:
        png = plotting.render_sweep_line(
            axis1, mss_col, str(out.with_suffix(".png")),
            xlabel=f"{cfg.sweep_axis} / kappa", ylabel="m_ss",
            logx=(cfg.sweep_scale == "log"))
        print(f"wrote {png}")
    return 0


def cmd_oracle(cfg: RunConfig, out: Path, plot: bool) -> int:
    params = cfg.params()
    space = oracle.TruncatedSpace(cfg.n_cav, cfg.n_phn)
    rho0 = oracle.initial_state(space, cfg.m0, cfg.m0_kind)
    result = oracle.lindblad_evolve(
        rho0, params, space, cfg.t_end,
        samples=cfg.samples, rtol=cfg.rtol, atol=cfg.atol)
    csv_path = out.with_suffix(".csv")
    rows = (
        [t, m, *mom, terr, pc, pp]
        for t, m, mom, terr, pc, pp in zip(
            result.times, result.m, result.moments, result.trace_error,
            result.edge_population_cav, result.edge_population_phn)
    )
    write_csv(csv_path, _config_comments(cfg, "oracle"),
              TRAJECTORY_COLUMNS + ["trace_error", "edge_pop_cav", "edge_pop_phn"],
              rows)
    print(f"wrote {csv_path}")
    print(f"m(0) = {result.m[0]:.6g} -> m({cfg.t_end:g}) = {result.m[-1]:.6g}; "
          f"max trace error {result.trace_error.max():.3e}")
    if plot:
        png = plotting.render_oracle(result.times, result.m, result.trace_error,
                                     str(out.with_suffix(".png")))
        print(f"wrote {png}")
    return 0


def cmd_compare(cfg: RunConfig, out: Path, plot: bool, with_oracle: bool) -> int:
    params = cfg.params()
    system = assemble(params, cfg.eta_order)
    traj = integrate(system, default_initial(cfg.m0, params), cfg.t_end, cfg.step_policy())
    model = effective.strong_model(params)
    m_analytic = effective.m_of_t(model, cfg.m0, traj.times)

    columns = ["t", "m_full25", "m_analytic"]
    series = {"full25": traj.m, "analytic": m_analytic}
    if with_oracle:
        space = oracle.TruncatedSpace(cfg.n_cav, cfg.n_phn)
        rho0 = oracle.initial_state(space, cfg.m0, cfg.m0_kind)
        result = oracle.lindblad_evolve(rho0, params, space, cfg.t_end,
                                        samples=cfg.samples, rtol=cfg.rtol, atol=cfg.atol)
        m_oracle = np.interp(traj.times, result.times, result.m)
        columns.append("m_oracle")
        series["oracle"] = m_oracle

    csv_path = out.with_suffix(".csv")
    write_csv(csv_path, _config_comments(cfg, "compare"), columns,
              zip(traj.times, *series.values()))
    print(f"wrote {csv_path}")

    # deviation report
    late = traj.times > 5.0 / params.kappa
    dev = np.abs(traj.m - m_analytic)
    rel = dev / np.maximum(np.abs(m_analytic), 1e-300)
    print(f"full25 vs analytic: final |dm| = {dev[-1]:.4g} "
          f"({100 * rel[-1]:.2f}% of analytic)")
    if late.any():
        print(f"  max relative deviation after t = 5/kappa: {100 * rel[late].max():.2f}%")
    if with_oracle:
        dev_o = np.abs(traj.m - series["oracle"])
        print(f"full25 vs oracle: max |dm| = {dev_o.max():.4g}, final {dev_o[-1]:.4g}")

    try:
        m_steady = mean_phonon(stationary(system), params.eta)
        ratio = m_steady / model.m_ss
        print(f"steady state: full25 m = {m_steady:.6g}, analytic m_ss = {model.m_ss:.6g}, "
              f"ratio = {ratio:.3f}")
        if ratio > 2.0:
            print("FLAG: rate-equation steady state exceeds the analytic prediction "
                  f"{ratio:.1f}-fold; eta^2 reduced models are unreliable here "
                  "(strongly coupled cavity and/or weak confinement).")
        elif ratio < 0.5:
            print("FLAG: analytic steady state exceeds the rate-equation value "
                  f"{1/ratio:.1f}-fold; outside the validated regime.")
    except (SingularSystem, NonPositiveRate) as exc:
        print(f"steady-state comparison unavailable: {exc}")

    if plot:
        png = plotting.render_compare(traj.times, series, str(out.with_suffix(".png")))
        print(f"wrote {png}")
    return 0


def cmd_keys() -> int:
    for f in dataclasses.fields(RunConfig):
        print(f"{f.name:15s} default = {f.default!r}")
    return 0


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cavcool",
        description="Cavity-mediated laser-cooling simulations "
                    "(25-moment rate equations, reduced models, Lindblad oracle).",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("-c", "--config", help="flat key = value configuration file")
        p.add_argument("-s", "--set", dest="overrides", action="append", default=[],
                       metavar="KEY=VALUE", help="override one configuration key")
        p.add_argument("-o", "--output", default=None,
                       help="output path prefix (default: command name)")
        p.add_argument("--no-plot", action="store_true", help="skip PNG rendering")

    for name, help_text in [
        ("derive", "dump the 25 moment equations and residual report"),
        ("simulate", "integrate a model and write the trajectory CSV"),
        ("steady", "steady state of the chosen model"),
        ("analyze", "cooling-rate and optimal-detuning report"),
        ("stability", "weak-model spectrum and phase-space data"),
        ("sweep", "m_ss / gamma_c sweeps over delta_eff and/or nu"),
        ("oracle", "truncated-Fock-space master-equation run"),
        ("compare", "aligned m(t): full25 vs analytic (vs oracle)"),
    ]:
        p = sub.add_parser(name, help=help_text)
        add_common(p)
        if name == "stability":
            p.add_argument("--trajectory", action="store_true",
                           help="also integrate and emit the tilde-variable trajectory")
        if name == "compare":
            p.add_argument("--with-oracle", action="store_true",
                           help="include the master-equation oracle route")
    sub.add_parser("keys", help="list configuration keys and defaults")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "keys":
        return cmd_keys()
    try:
        cfg = load_config(args.config, args.overrides)
        out = Path(args.output) if args.output else Path(args.command)
        if out.parent and not out.parent.exists():
            out.parent.mkdir(parents=True, exist_ok=True)
        plot = not args.no_plot
        if args.command == "derive":
            return cmd_derive(cfg, out, plot)
        if args.command == "simulate":
            return cmd_simulate(cfg, out, plot)
        if args.command == "steady":
            return cmd_steady(cfg, out, plot)
        if args.command == "analyze":
            return cmd_analyze(cfg, out, plot)
        if args.command == "stability":
            return cmd_stability(cfg, out, plot, args.trajectory)
        if args.command == "sweep":
            return cmd_sweep(cfg, out, plot)
        if args.command == "oracle":
            return cmd_oracle(cfg, out, plot)
        if args.command == "compare":
            return cmd_compare(cfg, out, plot, args.with_oracle)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except (SingularSystem, StepUnderflow, NonPositiveRate) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except CutoffSaturation as exc:
        print(f"cutoff saturation: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
