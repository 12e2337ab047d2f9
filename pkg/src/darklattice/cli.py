"""Command-line runner: one subcommand per experiment, CSV + JSON outputs.

    darklattice retrieve --nx 21 --ny 21 --spacing 0.3 --waist-sweep 2:10:0.5
    darklattice bands --spacing 0.2 --path "M',G,X',M'"
    darklattice shape --window blackman --t-end 10
    darklattice validate --config run.yaml

Exit codes: 0 success, 2 invalid configuration, 3 numerical failure
(instability, undecayed trajectory, singular steady state), 4 infeasible
target. Failures print one JSON record on stderr.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import yaml

from . import __version__
from .config import (EXPERIMENTS, ExperimentConfig, build_pattern, canonical_json, config_hash,
                     load_file, parse_dipole, resolve, validate)
from .errors import (ConsistencyError, DegenerateConfigurationError, InfeasibleTargetError,
                     InstabilityError, InvalidInputError, TruncatedTransformError)
from .outputs import write_outputs

log = logging.getLogger("darklattice")

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME, EXIT_INFEASIBLE = 0, 2, 3, 4
S = argparse.SUPPRESS


def pool_size() -> int:
    env = os.environ.get("DARKLATTICE_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise InvalidInputError(f"DARKLATTICE_THREADS must be an integer, got {env!r}")
        if n < 1:
            raise InvalidInputError("DARKLATTICE_THREADS must be >= 1")
        return n
    return os.cpu_count() or 1


def parse_range(text: str) -> list[float]:
    """'start:stop:step' (stop included) or a comma-separated list."""
    if ":" in text:
        parts = [float(p) for p in text.split(":")]
        if len(parts) != 3 or parts[2] <= 0 or parts[1] < parts[0]:
            raise argparse.ArgumentTypeError(f"bad range {text!r}; expected start:stop:step")
        n = int(np.floor((parts[1] - parts[0]) / parts[2] + 1e-9)) + 1
        return [round(parts[0] + i * parts[2], 12) for i in range(n)]
    return [float(p) for p in text.split(",") if p.strip()]


def _param_list(text: str) -> list:
    """Pattern parameters: 'a,b,c' with complex entries as 'x+yj'."""
    out = []
    for p in text.split(","):
        z = complex(p.strip().replace("i", "j"))
        out.append(z.real if z.imag == 0 else [z.real, z.imag])
    return out


# ---------------------------------------------------------------- runners

def _lattice(cfg: ExperimentConfig):
    from .lattice import apply_defects, build_square_lattice
    lat = cfg.lattice
    base = build_square_lattice(int(lat["nx"]), int(lat["ny"]), float(lat["spacing"]), parse_dipole(lat["dipole"]))
    holes = lat.get("defects") or []
    return apply_defects(base, holes) if holes else base


def _waist(cfg):
    return float(cfg.mode["waist"]) * float(cfg.lattice["spacing"])


def run_bands(cfg):
    from .bands import BAND_COLUMNS, BandPath, band_path_bravais, band_path_checkerboard, band_rows
    d = float(cfg.lattice["spacing"])
    o = cfg.options
    dip = parse_dipole(cfg.lattice["dipole"])
    path = BandPath.from_labels(o["path"], d, int(o["samples"]))
    R = None if o.get("radius") is None else float(o["radius"]) * d
    Delta = float(o.get("Delta") or 0.0)
    if Delta > 0:
        pts = band_path_checkerboard(path, d, Delta, dip, R)
    else:
        pts = band_path_bravais(path, d, dip, R, folded=bool(o.get("folded")))
    rows = band_rows(pts)
    return BAND_COLUMNS, rows, {"n_points": len(pts), "min_decay": min(r[5] for r in rows)}


def run_disperse(cfg):
    from .bands import high_symmetry_point
    from .greens import dispersion
    d = float(cfg.lattice["spacing"])
    dip = parse_dipole(cfg.lattice["dipole"])
    R = None if cfg.options.get("radius") is None else float(cfg.options["radius"]) * d
    rows = []
    for p in cfg.options["points"]:
        if isinstance(p, str):
            label, k = p, high_symmetry_point(p, d)
        else:
            # explicit points are in units of pi/d
            label, k = "", np.asarray(p, dtype=float) * np.pi / d
        r = dispersion(k, d, dip, R, window=cfg.options.get("window", "smooth"))
        rows.append((label, float(k[0]), float(k[1]), r.J, r.Gamma))
    return ("label", "kx", "ky", "J", "Gamma"), rows, {"n_points": len(rows)}


def run_store(cfg):
    from .dynamics import momentum_population, prepare_stored_state
    from .protocols.retrieval import make_coupling
    lat = _lattice(cfg)
    pattern = build_pattern(cfg.pattern)
    st = prepare_stored_state(lat, make_coupling(lat, dense=True), _waist(cfg), pattern=pattern)
    rows = [(int(i), int(j), float(z.real), float(z.imag), float(abs(z) ** 2))
            for (i, j), z in zip(lat.indices, st.e)]
    Q = [q for q, a in zip(pattern.quasimomenta, pattern.amplitudes) if np.any(q != 0) and a != 0]
    summary = {"n_atoms": lat.n_atoms}
    if len(Q) == 1:
        summary["dark_population"] = momentum_population(lat, st.e, Q[0], np.pi / 4)
    return ("ix", "iy", "re", "im", "population"), rows, summary


def run_retrieve(cfg):
    from .protocols.retrieval import retrieval_experiment
    lat = _lattice(cfg)
    p = build_pattern(cfg.pattern)
    if cfg.pattern.get("kind") != "checkerboard":
        raise InvalidInputError("pattern.kind must be checkerboard for retrieval")
    Delta = float(p.amplitudes[0].real)
    ds = cfg.options.get("Delta_store")
    res = retrieval_experiment(lat, _waist(cfg), Delta, float(cfg.dynamics.get("t_storage", 0.0)),
                               None if ds is None else float(ds), dt=float(cfg.dynamics["dt"]))
    row = (float(cfg.mode["waist"]), res.waist, res.eta, res.error, res.stored_norm)
    return ("waist_over_d", "waist", "eta", "error", "stored_norm"), [row], {"eta": res.eta, "error": res.error}


def run_shape(cfg):
    from .dynamics import checkerboard_model, evolve_few_level
    from .protocols.shaping import pair_parameters, shaping_experiment, solve_detuning_sequence, window_shape
    o = cfg.options
    params = {"taper": float(o["taper"])} if o["window"] == "tukey" else {}
    target = window_shape(o["window"], float(cfg.dynamics["t_end"]), float(o.get("total", 1.0)), **params)
    J, Gr = pair_parameters(float(cfg.lattice["spacing"]), parse_dipole(cfg.lattice["dipole"]))
    if o.get("on_lattice"):
        run = shaping_experiment(_lattice(cfg), target, _waist(cfg), dt=float(cfg.dynamics["dt"]),
                                 solver_dt=float(o["solver_dt"]))
        seq, times, achieved, mismatch = run.sequence, run.times, run.achieved, run.mismatch()
    else:
        seq = solve_detuning_sequence(target, Gr, J, dt=float(o["solver_dt"]), plateau=float(o["plateau"]),
                                      cap=float(o["cap"]))
        tr = evolve_few_level(checkerboard_model(J, 0.0, Gr, 1.0, envelope=seq), [1, 0], target.t_end,
                              float(o["solver_dt"]))
        times, achieved = tr.times, Gr * np.abs(tr.states[:, 1]) ** 2
        lim = seq.plateau_start if seq.plateau_start is not None else target.t_end
        sel = times <= lim + 1e-12
        tgt = target.rate(times[sel])
        mismatch = float(np.sqrt(np.trapezoid((achieved[sel] - tgt) ** 2, times[sel])
                                 / np.trapezoid(tgt**2, times[sel])))
    rows = [(float(t), seq(float(t)), float(target.rate(t)), float(a)) for t, a in zip(times, achieved)]
    summary = {"J": J, "Gamma_r": Gr, "peak_detuning": seq.peak, "plateau_start": seq.plateau_start,
               "mismatch": mismatch, "on_lattice": bool(o.get("on_lattice"))}
    return ("t", "Delta", "target_dndt", "achieved_dndt"), rows, summary


def _omega(cfg):
    lo, hi, step = (float(v) for v in cfg.options["omega"])
    return np.round(np.arange(lo, hi + step / 2, step), 10)


def _pair(cfg):
    from .greens import dispersion
    d = float(cfg.lattice["spacing"])
    dip = parse_dipole(cfg.lattice["dipole"])
    dark = dispersion((np.pi / d, np.pi / d), d, dip)
    rad = dispersion((0.0, 0.0), d, dip)
    return dark.J, rad.J, rad.Gamma


def run_spectrum(cfg):
    from .protocols.spectra import spectrum_experiment
    lat = _lattice(cfg)
    Delta = float(build_pattern(cfg.pattern).amplitudes[0].real)
    Jd, Jr, Gr = _pair(cfg)
    dt = cfg.options.get("dt")
    run = spectrum_experiment(lat, Delta, _waist(cfg), Jd, Jr, Gr, _omega(cfg), None if dt is None else float(dt))
    ana = np.abs(run.analytic.field)
    ana = ana / ana.max() if ana.max() > 0 else ana
    rows = [(float(w), float(E.real), float(E.imag), float(abs(E)), float(a))
            for w, E, a in zip(run.omega, run.field, ana)]
    sep = float(run.poles[0].real - run.poles[1].real)
    summary = {"poles": [[p.real, p.imag] for p in run.poles], "separation": sep,
               "analytic_separation": run.analytic.separation, "predominant_side": run.side,
               "J_dark": Jd, "J_rad": Jr, "Gamma_rad": Gr}
    return ("omega", "re_E", "im_E", "abs_E", "abs_E_analytic"), rows, summary


def run_sidebands(cfg):
    from .protocols.spectra import sideband_experiment
    lat = _lattice(cfg)
    Delta = float(build_pattern(cfg.pattern).amplitudes[0].real)
    o = cfg.options
    dt = o.get("dt")
    run = sideband_experiment(lat, Delta, _waist(cfg), float(o["delta_mod"]), float(o["Omega_mod"]),
                              _omega(cfg), None if dt is None else float(dt))
    rows = [(float(w), float(E.real), float(E.imag), float(abs(E))) for w, E in zip(run.omega, run.field)]
    summary = {"orders": run.orders.tolist(), "weights": run.weights.tolist(),
               "expected": (run.expected**2).tolist(), "ratios": run.ratios().tolist(),
               "peaks": run.peaks.tolist()}
    return ("omega", "re_E", "im_E", "abs_E"), rows, summary


def run_steer(cfg):
    from .protocols.steering import steering_experiment
    lat = _lattice(cfg)
    step = float(cfg.options["theta_step"])
    theta = np.radians(np.arange(-90.0, 90.0 + step / 2, step))
    run = steering_experiment(lat, build_pattern(cfg.pattern), _waist(cfg),
                              float(cfg.options["Delta_store"]), theta, dt=float(cfg.dynamics["dt"]))
    rows = [(float(np.degrees(t)), float(p)) for t, p in zip(run.theta, run.profile)]
    neg, pos = run.oblique_peaks()
    rep = run.report
    summary = {"period": rep.period, "coupled_kx_over_pi": rep.coupled, "in_light_cone": rep.in_light_cone,
               "predicted_sin_theta": rep.sin_theta, "flags": sorted(rep.flags), "omega": run.omega,
               "peak_theta_deg": [float(np.degrees(neg)), float(np.degrees(pos))],
               "on_axis": run.value_at(0.0)}
    return ("theta_deg", "abs_E"), rows, summary


def run_rabi(cfg):
    from .protocols.rabi import count_periods, quality_for_waist, rabi_experiment
    lat = _lattice(cfg)
    Delta = float(build_pattern(cfg.pattern).amplitudes[0].real)
    run = rabi_experiment(lat, Delta, _waist(cfg), float(cfg.dynamics["t_end"]),
                          float(cfg.options["Delta_store"]), dt=float(cfg.dynamics["dt"]),
                          stride=int(cfg.options["stride"]))
    rows = [(float(t), float(p[0]), float(p[1]), float(n)) for t, p, n in zip(run.times, run.populations, run.norms)]
    summary = {"periods": count_periods(run.times, run.populations[:, 1]),
               "max_M": float(run.populations[:, 1].max())}
    try:
        summary["quality"] = quality_for_waist(_waist(cfg), lat.spacing, Delta)
    except InvalidInputError as exc:
        summary["quality"] = None
        log.info("quality factor unavailable: %s", exc)
    return ("t", "pop_X", "pop_M", "norm"), rows, summary


def run_cycle(cfg):
    from .protocols.rabi import cycle_experiment, dominant_sequence, is_cyclic
    lat = _lattice(cfg)
    o = cfg.options
    n = int(o["n_states"])
    run = cycle_experiment(lat, n, _waist(cfg), float(cfg.dynamics["t_end"]), float(o["amplitude"]),
                           radius=float(o["radius"]), dt=float(cfg.dynamics["dt"]), stride=int(o["stride"]),
                           direction=int(o["direction"]))
    cols = ("t",) + tuple(f"pop_{m}" for m in range(n)) + ("norm",)
    rows = [(float(t),) + tuple(float(v) for v in p) + (float(nn),)
            for t, p, nn in zip(run.times, run.populations, run.norms)]
    seq = dominant_sequence(run)
    return cols, rows, {"sequence": seq, "cyclic": is_cyclic(seq, n),
                        "centers_over_d": [list(c) for c in run.labels]}


def run_defects(cfg):
    from .protocols.defects import DEFECT_SETS, defect_sweep
    lat = _lattice(cfg)
    sets = cfg.options.get("sets") or DEFECT_SETS
    waists = tuple(float(w) for w in cfg.options["waists"])
    pts, alpha = defect_sweep(lat, sets, waists, dt=float(cfg.dynamics["dt"]))
    rows = [(p.label, p.waist, p.fraction, p.eta, p.eta_def, p.drop) for p in pts]
    return ("set", "waist_over_d", "intensity_fraction", "eta", "eta_defect", "drop"), rows, {"alpha": alpha}


RUNNERS = {"bands": run_bands, "disperse": run_disperse, "store": run_store, "retrieve": run_retrieve,
           "shape": run_shape, "spectrum": run_spectrum, "sidebands": run_sidebands, "steer": run_steer,
           "rabi": run_rabi, "cycle": run_cycle, "defects": run_defects}


def execute(cfg: ExperimentConfig, threads: int | None = None):
    """Run every sweep element; returns (columns, rows, summary) with rows in sweep order."""
    runner = RUNNERS[cfg.experiment]
    elements = cfg.sweep_elements()
    if len(elements) == 1 and elements[0][0] is None:
        return runner(cfg)
    threads = pool_size() if threads is None else threads
    with ThreadPoolExecutor(max_workers=min(threads, len(elements))) as pool:
        results = list(pool.map(lambda el: runner(el[1]), elements))
    param = cfg.sweep["parameter"]
    columns = (param,) + tuple(results[0][0])
    rows = [(v,) + tuple(r) for (v, _), res in zip(elements, results) for r in res[1]]
    summary = {"sweep": param, "elements": [{"value": v, **res[2]} for (v, _), res in zip(elements, results)]}
    if cfg.experiment == "retrieve":
        best = min(range(len(elements)), key=lambda i: results[i][2]["error"])
        summary["best"] = {"value": elements[best][0], "error": results[best][2]["error"]}
    return columns, rows, summary


def run(config: dict, threads: int | None = None) -> dict:
    """Validate, execute and write outputs for a resolved configuration dict."""
    diags = validate(config)
    if diags:
        raise InvalidInputError("; ".join(diags))
    cfg = ExperimentConfig.from_dict(config)
    columns, rows, summary = execute(cfg, threads)
    h = cfg.hash
    csv_path, json_path = write_outputs(cfg.output.get("dir", "results"), cfg.experiment, cfg.to_dict(),
                                        h, columns, rows, summary)
    return {"csv": str(csv_path), "json": str(json_path), "config_hash": h, "summary": summary}


# ---------------------------------------------------------------- argument parsing

def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="YAML or JSON configuration file")
    p.add_argument("--dry-run", action="store_true", help="validate and print the resolved configuration")
    p.add_argument("-v", "--verbose", action="store_true")
    g = p.add_argument_group("overrides")
    g.add_argument("--nx", dest="lattice.nx", type=int, default=S)
    g.add_argument("--ny", dest="lattice.ny", type=int, default=S)
    g.add_argument("--spacing", dest="lattice.spacing", type=float, default=S, help="lattice constant / lambda0")
    g.add_argument("--dipole", dest="lattice.dipole", default=S, help="circular, x, y or z")
    g.add_argument("--waist", dest="mode.waist", type=float, default=S, help="mode waist in units of d")
    g.add_argument("--dt", dest="dynamics.dt", type=float, default=S)
    g.add_argument("--t-end", dest="dynamics.t_end", type=float, default=S)
    g.add_argument("--t-storage", dest="dynamics.t_storage", type=float, default=S)
    g.add_argument("--pattern", dest="pattern.kind", default=S)
    g.add_argument("--params", dest="pattern.params", type=_param_list, default=S,
                   help="comma-separated pattern parameters, complex as x+yj")
    g.add_argument("--sweep-param", dest="sweep.parameter", default=S)
    g.add_argument("--sweep-values", dest="sweep.values", type=parse_range, default=S,
                   help="start:stop:step or a comma-separated list")
    g.add_argument("--output-dir", dest="output.dir", default=S)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="darklattice", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bands", help="band structure along a path")
    _common(p)
    p.add_argument("--path", dest="options.path", default=S)
    p.add_argument("--samples", dest="options.samples", type=int, default=S)
    p.add_argument("--Delta", dest="options.Delta", type=float, default=S, help="checkerboard strength")
    p.add_argument("--folded", dest="options.folded", action="store_true", default=S)
    p.add_argument("--radius", dest="options.radius", type=float, default=S, help="truncation radius / d")

    p = sub.add_parser("disperse", help="J_k and Gamma_k at chosen momenta")
    _common(p)
    p.add_argument("--points", dest="options.points", type=lambda s: s.split(","), default=S,
                   help="comma-separated high-symmetry labels")
    p.add_argument("--radius", dest="options.radius", type=float, default=S)

    p = sub.add_parser("store", help="stored dark state written by a weak drive")
    _common(p)

    p = sub.add_parser("retrieve", help="storage and retrieval efficiency")
    _common(p)
    p.add_argument("--waist-sweep", dest="_waist_sweep", type=parse_range, default=S,
                   help="start:stop:step in units of d")
    p.add_argument("--Delta", dest="_delta", type=float, default=S, help="checkerboard strength")

    p = sub.add_parser("shape", help="detuning sequence for a target photon shape")
    _common(p)
    p.add_argument("--window", dest="options.window", default=S)
    p.add_argument("--taper", dest="options.taper", type=float, default=S)
    p.add_argument("--total", dest="options.total", type=float, default=S, help="excitation to release")
    p.add_argument("--on-lattice", dest="options.on_lattice", action="store_true", default=S)

    for name in ("spectrum", "sidebands"):
        p = sub.add_parser(name, help=f"{name} of the released photon")
        _common(p)
        p.add_argument("--Delta", dest="_delta", type=float, default=S)
        p.add_argument("--omega-range", dest="options.omega", type=parse_range_triplet, default=S,
                       help="min:max:step")
        if name == "sidebands":
            p.add_argument("--delta-mod", dest="options.delta_mod", type=float, default=S)
            p.add_argument("--omega-mod", dest="options.Omega_mod", type=float, default=S)

    p = sub.add_parser("steer", help="emission direction for period-3/4 patterns")
    _common(p)
    p.add_argument("--theta-step", dest="options.theta_step", type=float, default=S)

    p = sub.add_parser("rabi", help="X-M Rabi oscillations")
    _common(p)
    p.add_argument("--Delta", dest="_rabi_delta", type=float, default=S)

    p = sub.add_parser("cycle", help="cyclic transfer between dark states")
    _common(p)
    p.add_argument("--states", dest="options.n_states", type=int, default=S)
    p.add_argument("--amplitude", dest="options.amplitude", type=float, default=S)
    p.add_argument("--direction", dest="options.direction", type=int, choices=(1, -1), default=S)

    p = sub.add_parser("defects", help="efficiency loss from missing atoms")
    _common(p)
    p.add_argument("--waists", dest="options.waists", type=parse_range, default=S)

    p = sub.add_parser("validate", help="check a configuration file")
    p.add_argument("--config", required=True)
    p.add_argument("--experiment", choices=EXPERIMENTS, help="overrides the file's experiment key")
    return parser


def parse_range_triplet(text: str) -> list[float]:
    parts = [float(v) for v in text.split(":")]
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected min:max:step")
    return parts


def overrides_from_args(ns: argparse.Namespace) -> dict:
    raw = {k: v for k, v in vars(ns).items() if "." in k or k.startswith("_")}
    out = {k: v for k, v in raw.items() if "." in k}
    if "_waist_sweep" in raw:
        out["sweep.parameter"] = "mode.waist"
        out["sweep.values"] = raw["_waist_sweep"]
    if "_delta" in raw:
        out["pattern.kind"] = "checkerboard"
        out["pattern.params"] = [raw["_delta"]]
    if "_rabi_delta" in raw:
        out["pattern.kind"] = "stripe_y"
        out["pattern.params"] = [raw["_rabi_delta"]]
    return out


def _fail(code: int, exc: BaseException) -> int:
    record = {"status": "error", "exit_code": code, "error": type(exc).__name__, "message": str(exc)}
    print(json.dumps(record, sort_keys=True), file=sys.stderr)
    return code


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(ns, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        file_cfg = load_file(ns.config) if ns.config else {}
        if ns.command == "validate":
            exp = ns.experiment or file_cfg.get("experiment")
            diags = validate(resolve(exp, file_cfg)) if exp in EXPERIMENTS else [f"experiment: unknown experiment {exp!r}"]
            print(json.dumps({"valid": not diags, "diagnostics": diags}, indent=2))
            return EXIT_OK if not diags else EXIT_INVALID
        cfg = resolve(ns.command, file_cfg, overrides_from_args(ns))
        diags = validate(cfg)
        if diags:
            return _fail(EXIT_INVALID, InvalidInputError("; ".join(diags)))
        if ns.dry_run:
            print(json.dumps({"config": json.loads(canonical_json(cfg)), "config_hash": config_hash(cfg)},
                             indent=2, sort_keys=True))
            return EXIT_OK
        result = run(cfg)
    except InfeasibleTargetError as exc:
        return _fail(EXIT_INFEASIBLE, exc)
    except (InstabilityError, TruncatedTransformError, DegenerateConfigurationError, ConsistencyError) as exc:
        return _fail(EXIT_RUNTIME, exc)
    except (InvalidInputError, OSError, ValueError, yaml.YAMLError) as exc:
        return _fail(EXIT_INVALID, exc)
    print(json.dumps({"status": "ok", "csv": result["csv"], "json": result["json"],
                      "config_hash": result["config_hash"]}))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
