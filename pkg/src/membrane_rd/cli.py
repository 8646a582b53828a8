"""Configuration, experiment orchestration and file output.

Commands:
    analyze  --config F [--out D]            stability + spectrum report
    simulate --config F --out D [--svg]      time integration, CSV snapshots
    spectrum --config F --n-max N [--out D]  eigenvalue table
    sweep    --config F --param P --values v1,v2,... [--out D] [--jobs N]

Config files are `key = value` lines with `#` comments.  Exit codes:
0 success, 2 config error, 3 numerical blow-up, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from . import fdm, spectrum, stability
from .model import ModelParams, conserved_mass, initial_data, steady_state


class ConfigError(ValueError):
    """Invalid configuration; carries the offending key."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


_FLOAT_KEYS = {
    "L", "x_m", "D_vl", "D_vr", "theta", "nu_D", "k_u", "k_v", "eps",
    "alpha", "Theta_scheme", "dx", "dt", "T", "preset_amplitude",
    "noise_amplitude", "mass",
}
_INT_KEYS = {"N_l", "N_r", "seed", "preset_mode"}
_STR_KEYS = {"preset", "out_dir", "command"}
_ALL_KEYS = _FLOAT_KEYS | _INT_KEYS | _STR_KEYS


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved run description; parse -> serialize -> parse is the identity."""

    L: float = 1.0
    x_m: float = 0.5
    D_vl: float = 1.0
    D_vr: float = 1.0
    theta: float = 7.8e-2
    nu_D: float = 1.0
    k_u: float | None = None
    k_v: float = 1.0
    eps: float = 1.0
    alpha: float = 1.0
    Theta_scheme: float = 1.0
    dx: float = 1.0 / 200.0
    dt: float | None = None
    N_l: int | None = None
    N_r: int | None = None
    preset: str = "paper-fig3"
    preset_mode: int = 1
    preset_amplitude: float = 1e-3
    noise_amplitude: float = 1e-2
    mass: float = 0.8
    T: float = 1000.0
    seed: int = 0
    out_dir: str = "out"
    command: str = ""

    def to_params(self) -> ModelParams:
        try:
            return ModelParams(
                L=self.L, x_m=self.x_m, D_vl=self.D_vl, D_vr=self.D_vr,
                theta=self.theta, k_v=self.k_v, k_u=self.k_u, eps=self.eps,
                alpha=self.alpha, Theta_scheme=self.Theta_scheme, dx=self.dx,
                dt=self.dt, N_l=self.N_l, N_r=self.N_r,
            )
        except ValueError as exc:
            key = str(exc).split(":", 1)[0]
            raise ConfigError(key, str(exc).split(":", 1)[-1].strip()) from None


def _resolve(cfg: RunConfig) -> RunConfig:
    if abs(cfg.D_vr / cfg.D_vl - cfg.nu_D) > 1e-12 * max(1.0, cfg.nu_D):
        raise ConfigError("nu_D", f"inconsistent with D_vr/D_vl = {cfg.D_vr / cfg.D_vl!r}")
    params = cfg.to_params()  # validates and derives the open fields
    return replace(cfg, k_u=params.k_u, dt=params.dt, N_l=params.N_l,
                   N_r=params.N_r)


def parse_config(text: str) -> RunConfig:
    """Parse `key = value` lines; unknown keys and bad values are rejected."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(line.split()[0], f"line {lineno}: expected key = value")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key not in _ALL_KEYS:
            raise ConfigError(key, "unknown key")
        if key in values:
            raise ConfigError(key, "duplicate key")
        if key in _STR_KEYS:
            values[key] = val
        elif key in _INT_KEYS:
            try:
                values[key] = int(val)
            except ValueError:
                raise ConfigError(key, f"cannot parse {val!r} as an integer") from None
        else:
            try:
                values[key] = float(val)
            except ValueError:
                raise ConfigError(key, f"cannot parse {val!r} as a number") from None
    if values.get("T", 1.0) <= 0:
        raise ConfigError("T", "final time must be positive")
    return _resolve(RunConfig(**values))


def serialize_config(cfg: RunConfig) -> str:
    """Emit the fully resolved config; floats use repr so parsing round-trips."""
    lines = []
    for f in fields(cfg):
        value = getattr(cfg, f.name)
        if value is None:
            continue
        lines.append(f"{f.name} = {value!r}" if isinstance(value, float)
                     else f"{f.name} = {value}")
    return "\n".join(lines) + "\n"


def load_config(path: str | Path) -> RunConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"))


def _g(x: float) -> str:
    return format(float(x), ".17g")


def _initial_state(cfg: RunConfig, params: ModelParams, grid):
    return initial_data(
        cfg.preset, grid, params,
        mass=cfg.mass, mode=cfg.preset_mode, amplitude=cfg.preset_amplitude,
        noise_amplitude=cfg.noise_amplitude, seed=cfg.seed,
    )


# ------------------------------------------------------------------- analyze

@dataclass(eq=False)
class AnalysisReport:
    M: float
    u_bar: float
    v_bar: float
    jac: object
    ode: object
    theta_c: float
    rng: object
    modes: list
    unstable: list
    count: int
    dominant: object | None  # EigenMode with the largest growth rate
    verdict: str


def analyze(cfg: RunConfig) -> AnalysisReport:
    params = cfg.to_params()
    grid = fdm.build_grid(params)
    u0, v0 = _initial_state(cfg, params, grid)
    M = conserved_mass(u0, v0, grid)
    ss = steady_state(M, params.eps, params.alpha)
    ode = stability.ode_stability(ss.jac)
    rng = stability.instability_range(params.theta, ss.jac)
    count, hits = spectrum.count_unstable(rng, params, with_modes=True)
    n_show = max(8, (hits[-1].n + 2) if hits else 0)
    modes = spectrum.eigenvalues(params, n_show)
    dominant = None
    if hits:
        growth = [stability.dispersion(m.eta, params.theta, ss.jac).max_re
                  for m in hits]
        dominant = hits[int(np.argmax(growth))]
    verdict = (f"pattern expected ({count} unstable modes)" if count
               else "converges to equilibrium")
    return AnalysisReport(
        M=M, u_bar=ss.u_bar, v_bar=ss.v_bar, jac=ss.jac, ode=ode,
        theta_c=rng.theta_c, rng=rng, modes=modes,
        unstable=[m.eta for m in hits], count=count, dominant=dominant,
        verdict=verdict,
    )


def _format_analysis(cfg: RunConfig, rep: AnalysisReport) -> str:
    rng, ode = rep.rng, rep.ode
    out = [
        "# stability analysis",
        f"M = {_g(rep.M)}",
        f"u_bar = {_g(rep.u_bar)}",
        f"v_bar = {_g(rep.v_bar)}",
        f"fu = {_g(rep.jac.fu)}",
        f"fv = {_g(rep.jac.fv)}",
        f"gu = {_g(rep.jac.gu)}",
        f"gv = {_g(rep.jac.gv)}",
        f"tr = {_g(ode.tr)}",
        f"det = {_g(ode.det)}",
        f"det_borderline = {ode.det_borderline}",
        f"ode_stable = {ode.stable}",
        f"activator_inhibitor = {ode.activator_inhibitor}",
        f"theta = {_g(cfg.theta)}",
        f"theta_c = {_g(rep.theta_c)}",
        f"eta_minus = {'none' if rng.is_empty else _g(rng.eta_minus)}",
        f"eta_plus = {'none' if rng.is_empty else _g(rng.eta_plus)}",
        f"unstable_count = {rep.count}",
        f"dominant_mode = {rep.dominant.n if rep.dominant else 'none'}",
        f"verdict = {rep.verdict}",
        "# modes: n, eta, lambda, residual, unstable",
    ]
    lo = -1.0 if rng.is_empty else rng.eta_minus
    hi = -1.0 if rng.is_empty else rng.eta_plus
    for m in rep.modes:
        flag = int(m.eta > 0.0 and lo < m.eta < hi)
        out.append(
            f"mode[{m.n}] = {_g(m.eta)} {_g(m.lam)} {_g(m.residual)} {flag}"
        )
    return "\n".join(out) + "\n"


def cmd_analyze(cfg: RunConfig, out_dir: str | Path | None = None) -> AnalysisReport:
    rep = analyze(cfg)
    text = _format_analysis(cfg, rep)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "analysis.txt").write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return rep


# ------------------------------------------------------------------ simulate

def _write_profile_csv(path: Path, grid, U, V):
    rows = ["x,side,u,v"]
    n_l = grid.N_l + 1
    for i in range(grid.n_points):
        side = "l" if i < n_l else "r"
        rows.append(f"{_g(grid.centers[i])},{side},{_g(U[i])},{_g(V[i])}")
    path.write_text("\n".join(rows) + "\n", encoding="utf-8")


def _svg_profile(path: Path, grid, values, label: str):
    # two polylines (one per side) with the membrane marked by a vertical rule
    w, hgt, ml, mr, mt, mb = 640, 400, 50, 10, 10, 30
    lo, hi = float(np.min(values)), float(np.max(values))
    pad = 0.05 * (hi - lo) or 1.0
    lo, hi = lo - pad, hi + pad

    def sx(x):
        return ml + (w - ml - mr) * x / grid.L

    def sy(y):
        return mt + (hgt - mt - mb) * (hi - y) / (hi - lo)

    def poly(sl):
        pts = " ".join(
            f"{sx(x):.2f},{sy(y):.2f}"
            for x, y in zip(grid.centers[sl], values[sl])
        )
        return (f'<polyline fill="none" stroke="#1f77b4" stroke-width="1.5" '
                f'points="{pts}"/>')

    xm = sx(grid.x_m)
    svg = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {w} {hgt}">',
        f'<rect x="{ml}" y="{mt}" width="{w-ml-mr}" height="{hgt-mt-mb}" '
        f'fill="white" stroke="black"/>',
        f'<line x1="{xm:.2f}" y1="{mt}" x2="{xm:.2f}" y2="{hgt-mb}" '
        f'stroke="#888888" stroke-dasharray="4 3"/>',
        poly(grid.left),
        poly(grid.right),
        f'<text x="{ml}" y="{hgt-8}" font-size="12">0</text>',
        f'<text x="{w-mr-10}" y="{hgt-8}" font-size="12">{grid.L:g}</text>',
        f'<text x="4" y="{mt+12}" font-size="12">{hi:.4g}</text>',
        f'<text x="4" y="{hgt-mb}" font-size="12">{lo:.4g}</text>',
        f'<text x="{w//2}" y="{hgt-8}" font-size="12">{label}</text>',
        "</svg>",
    ]
    path.write_text("\n".join(svg) + "\n", encoding="utf-8")


def simulate(cfg: RunConfig) -> fdm.SimResult:
    params = cfg.to_params()
    grid = fdm.build_grid(params)
    u0, v0 = _initial_state(cfg, params, grid)
    return fdm.run(params, (u0, v0), cfg.T)


def _format_sim_report(cfg: RunConfig, res: fdm.SimResult) -> str:
    U = res.u.values
    var_l, var_r = fdm.side_variation(U, res.grid)
    lines = [
        "# simulation report",
        f"converged = {res.converged}",
        f"t_final = {_g(res.t_final)}",
        f"n_steps = {res.n_steps}",
        f"jump_u = {_g(res.jump[0])}",
        f"jump_v = {_g(res.jump[1])}",
        f"supvar_u_l = {_g(var_l)}",
        f"supvar_u_r = {_g(var_r)}",
        f"mass_initial = {_g(res.mass_initial)}",
        f"mass_final = {_g(res.mass_series[-1][1])}",
        f"mass_drift = {_g(res.mass_drift)}",
        "# resolved configuration",
    ]
    lines += serialize_config(cfg).rstrip("\n").splitlines()
    return "\n".join(lines) + "\n"


def cmd_simulate(cfg: RunConfig, out_dir: str | Path, svg: bool = False) -> fdm.SimResult:
    res = simulate(cfg)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = ["index,t,file,mass"]
    for i, ((t, U, V), (_, m)) in enumerate(zip(res.snapshots, res.mass_series)):
        name = f"snapshot_{i:03d}.csv"
        _write_profile_csv(out / name, res.grid, U, V)
        manifest.append(f"{i},{_g(t)},{name},{_g(m)}")
    (out / "snapshots.csv").write_text("\n".join(manifest) + "\n", encoding="utf-8")
    _write_profile_csv(out / "final.csv", res.grid, res.u.values, res.v.values)
    (out / "report.txt").write_text(_format_sim_report(cfg, res), encoding="utf-8")
    if svg:
        _svg_profile(out / "final_u.svg", res.grid, res.u.values, "u")
        _svg_profile(out / "final_v.svg", res.grid, res.v.values, "v")
    return res


# ------------------------------------------------------------------ spectrum

def cmd_spectrum(cfg: RunConfig, n_max: int, out_dir: str | Path | None = None) -> list:
    params = cfg.to_params()
    modes = spectrum.eigenvalues(params, n_max)
    rows = ["n,eta,lambda,xi_over_pi,residual,degenerate_zero"]
    for m in modes:
        rows.append(
            f"{m.n},{_g(m.eta)},{_g(m.lam)},{_g(m.b_n / np.pi)},"
            f"{_g(m.residual)},{int(m.degenerate_zero)}"
        )
    text = "\n".join(rows) + "\n"
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "spectrum.csv").write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return modes


# --------------------------------------------------------------------- sweep

_SWEEP_PARAMS = ("theta", "k_v", "eps")


def _sweep_child(cfg: RunConfig, param: str, value: float) -> RunConfig:
    # the coupled regime k_u = theta*k_v is re-derived for every child
    child = replace(cfg, **{param: value}, k_u=None, command="simulate",
                    out_dir=str(Path(cfg.out_dir) / f"{param}_{value:g}"))
    if param == "eps":
        child = replace(child, dt=None)  # dt cap depends on eps
    return _resolve(child)


def _run_child(child: RunConfig) -> dict:
    rep = analyze(child)
    res = cmd_simulate(child, child.out_dir)
    U = res.u.values
    var_l, var_r = fdm.side_variation(U, res.grid)
    sc_l, sc_r = fdm.sign_changes(U, rep.u_bar, res.grid)
    return {
        "count": rep.count, "converged": res.converged,
        "jump_u": res.jump[0], "jump_v": res.jump[1],
        "supvar_l": var_l, "supvar_r": var_r,
        "crossings_l": sc_l, "crossings_r": sc_r,
        "mass_drift": res.mass_drift,
    }


def cmd_sweep(cfg: RunConfig, param: str, values: list[float],
              out_dir: str | Path | None = None, jobs: int = 1) -> list[dict]:
    if param not in _SWEEP_PARAMS:
        raise ConfigError("param", f"sweep parameter must be one of {_SWEEP_PARAMS}")
    if not 1 <= len(values) <= 64:
        raise ConfigError("values", "need between 1 and 64 sweep values")
    base = replace(cfg, out_dir=str(out_dir)) if out_dir is not None else cfg

    def guard(value):
        try:
            return _run_child(_sweep_child(base, param, value))
        except Exception as exc:  # failures recorded per-row, sweep continues
            return {"error": f"{type(exc).__name__}: {exc}"}

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(guard, values))
    else:
        results = [guard(v) for v in values]

    header = ("param,value,count,converged,jump_u,jump_v,supvar_l,supvar_r,"
              "crossings_l,crossings_r,mass_drift,status")
    rows = [header]
    summary = []
    for v, r in zip(values, results):
        if "error" in r:
            rows.append(f"{param},{_g(v)},,,,,,,,,,{r['error']}")
        else:
            rows.append(
                f"{param},{_g(v)},{r['count']},{int(r['converged'])},"
                f"{_g(r['jump_u'])},{_g(r['jump_v'])},{_g(r['supvar_l'])},"
                f"{_g(r['supvar_r'])},{r['crossings_l']},{r['crossings_r']},"
                f"{_g(r['mass_drift'])},ok"
            )
        summary.append({"param": param, "value": v, **r})
    out = Path(base.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "sweep_summary.csv").write_text("\n".join(rows) + "\n",
                                           encoding="utf-8")
    return summary


def _parse_sweep_values(cfg: RunConfig, text: str) -> list[float]:
    values = []
    for tok in text.split(","):
        tok = tok.strip()
        if tok == "theta_c":
            rep = analyze(replace(cfg, command="analyze"))
            values.append(rep.theta_c)
            continue
        try:
            values.append(float(tok))
        except ValueError:
            raise ConfigError("values", f"cannot parse {tok!r} as a number") from None
    return values


# ---------------------------------------------------------------------- main

def _build_parser() -> argparse.ArgumentParser:
    defaults = RunConfig()
    p = argparse.ArgumentParser(
        prog="membrane-rd",
        description=__doc__,
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=(
            "config defaults: L=1, x_m=0.5, dx=1/200, D_vl=D_vr=1, "
            f"theta={defaults.theta}, k_v=1, k_u=theta*k_v, eps=1, alpha=1, "
            "Theta_scheme=1, dt=min(1e-2, eps/4), preset=paper-fig3, "
            "T=1000, seed=0"
        ),
    )
    sub = p.add_subparsers(dest="cmd", required=True)

    def common(sp):
        sp.add_argument("--config", required=True, help="path to a key = value file")
        sp.add_argument("--out", default=None, help="output directory")

    sp = sub.add_parser("analyze", help="steady state, critical ratio, unstable modes")
    common(sp)
    sp = sub.add_parser("simulate", help="time integration with CSV snapshots")
    common(sp)
    sp.add_argument("--svg", action="store_true", help="also write SVG line plots")
    sp = sub.add_parser("spectrum", help="membrane eigenvalue table")
    common(sp)
    sp.add_argument("--n-max", type=int, default=8)
    sp = sub.add_parser("sweep", help="one simulation per parameter value")
    common(sp)
    sp.add_argument("--param", required=True, choices=_SWEEP_PARAMS)
    sp.add_argument("--values", required=True,
                    help="comma-separated values; 'theta_c' is accepted")
    sp.add_argument("--jobs", type=int, default=1)
    return p


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        try:
            text = Path(args.config).read_text(encoding="utf-8")
        except OSError as exc:
            print(f"error: cannot read config: {exc}", file=sys.stderr)
            return 4
        cfg = parse_config(text)
        out = args.out if args.out is not None else cfg.out_dir
        if args.cmd == "analyze":
            cmd_analyze(cfg, out)
        elif args.cmd == "simulate":
            cmd_simulate(cfg, out, svg=args.svg)
        elif args.cmd == "spectrum":
            cmd_spectrum(cfg, args.n_max, out)
        elif args.cmd == "sweep":
            values = _parse_sweep_values(cfg, args.values)
            summary = cmd_sweep(cfg, args.param, values, out, jobs=args.jobs)
            failed = [s for s in summary if "error" in s]
            for s in failed:
                print(f"sweep {args.param}={s['value']:g} failed: {s['error']}",
                      file=sys.stderr)
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except fdm.BlowUpError as exc:
        print(f"blow-up: {exc} (step {exc.step_index}, t = {exc.t})",
              file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 4
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
