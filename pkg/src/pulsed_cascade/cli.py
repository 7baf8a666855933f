"""Command-line front end.

Each subcommand regenerates the data behind one family of results and
writes CSV files (commented config header, then one header row) into
``--out``. Plotting is left to whatever consumes the CSV.
"""
import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import operators as ops
from .config import COMMANDS, load
from .correlations import RegressionEngine, normalized_g2_tt, same_time_g2_trace
from .csvio import write_csv
from .exceptions import FitError, SimulationError
from .liouvillian import build_cascaded
from .observables import (
    CLIP_SLACK,
    extinction_fit,
    hom_overlap,
    hom_visibility,
    linewidth_fwhm,
    pulsed_g2_zero,
    rabi_curves,
    spectrum,
    visibility,
)
from .propagator import TimeGrid, emission_grid, evolve, map_grid
from .sweeps import SweepSpec, run_sweep, write_sweep

COLUMN_DOCS = {
    "rabi_curves.csv": "area (rad), length (FWHM, 1/gamma_sigma), emitter, intensity (time-integrated <c^+c>)",
    "visibility.csv": "length, emitter, visibility (max near pi vs min near 2pi; 0 without extrema)",
    "extinction.csv": "emitter, beta (V ~ exp(-beta W)), intercept (ln prefactor), residual (rms of ln V), n_points",
    "spectra.csv": "area, emitter, omega (rad gamma_sigma, relative to the laser), S (time-integrated spectrum)",
    "linewidth.csv": "area, emitter, fwhm, intensity, sum_rule (int S domega/2pi), sum_rule_error (relative), central_dip",
    "occupation_<k>.csv": "t (relative to the pulse maximum), n_source, n_target, n_flux",
    "g2.csv": "area, emitter, g2_zero (same-pulse over different-pulse coincidences)",
    "hom.csv": "area, emitter, overlap (mean wavepacket overlap), g2_zero, hom_visibility (overlap/(1+g2_zero)), clipped",
    "g2map_<emitter>.csv": "t1, t2 (relative to the pulse maximum), G2 coincidence rate",
    "same_time.csv": "t, G2_source_tt, G2_target_tt, G2_flux_tt, n_flux, g2_flux_tt (normalized; empty where undefined)",
    "stimulated_decay.csv": "emitter, decay_rate (fit of the G2_flux(t,t) tail), fit_start, fit_points",
    "sweep.csv": "area, length, chi2, emitter, observable, value (scalars), handle (file of array results), error",
}


def _header(cfg):
    return [("engine", f"pulsed_cascade {__version__}")] + cfg.echo()


def _check_writable(out):
    out.mkdir(parents=True, exist_ok=True)
    if not os.access(out, os.W_OK):
        raise PermissionError(f"output directory {out} is not writable")


def _write_readme(out, written):
    lines = ["# Output files", ""]
    for path in written:
        name = Path(path).name
        key = name
        if name.startswith("occupation_"):
            key = "occupation_<k>.csv"
        elif name.startswith("g2map_"):
            key = "g2map_<emitter>.csv"
        doc = COLUMN_DOCS.get(key)
        if doc:
            lines.append(f"- `{name}`: {doc}")
    lines += ["", "Every CSV starts with `# key = value` lines echoing the resolved configuration."]
    (out / "README.md").write_text("\n".join(lines) + "\n")


# ------------------------------------------------------------------ commands


def cmd_rabi(cfg):
    opts, out, hdr = cfg.options, cfg.out, _header(cfg)
    emitters = opts["emitters"]
    curve_rows, vis_rows, vis = [], [], {w: [] for w in emitters}
    for length in opts["lengths"]:
        curves = rabi_curves(cfg.system, length, opts["areas"], emitters, cfg.grid["tol"], cfg.jobs, cfg.pulse.t0)
        for w in emitters:
            c = curves[w]
            curve_rows += [[a, length, w, i] for a, i in zip(c.areas, c.intensities)]
            v = visibility(c)
            vis[w].append((length, v))
            vis_rows.append([length, w, v])
    written = [
        write_csv(out / "rabi_curves.csv", ["area", "length", "emitter", "intensity"], curve_rows, hdr),
        write_csv(out / "visibility.csv", ["length", "emitter", "visibility"], vis_rows, hdr),
    ]
    lo, hi = opts.get("fit_range", (0.1, 1.5))
    fit_rows = []
    for w in emitters:
        pts = [(l, v) for l, v in vis[w] if lo - 1e-12 <= l <= hi + 1e-12]
        try:
            fit = extinction_fit(pts)
        except FitError as exc:
            print(f"extinction fit skipped for {w}: {exc}", file=sys.stderr)
            continue
        fit_rows.append([w, fit.beta, fit.intercept, fit.residual, fit.n_points])
    if fit_rows:
        cols = ["emitter", "beta", "intercept", "residual", "n_points"]
        written.append(write_csv(out / "extinction.csv", cols, fit_rows, hdr))
    return written


def cmd_spectrum(cfg):
    opts, out, hdr = cfg.options, cfg.out, _header(cfg)
    parts = build_cascaded(cfg.system)
    g = cfg.grid
    spec_rows, lw_rows = [], []
    for area in opts["areas"]:
        pulse = cfg.pulse.replace(area=area)
        grid = map_grid(pulse, cfg.system, g["spectrum_points"], g["spectrum_t_after"])
        engine = RegressionEngine(parts, pulse, grid, g["tol"])
        for w in opts["emitters"]:
            s = spectrum(engine.g1_map(w))
            om, val = s.window(g["spectrum_window"])
            spec_rows += [[area, w, o, v] for o, v in zip(om, val)]
            k0 = int(np.argmin(np.abs(s.omega)))
            dip = bool(s.values[k0] < s.values[k0 - 1] and s.values[k0] < s.values[k0 + 1])
            try:
                fwhm = linewidth_fwhm(s)
            except SimulationError as exc:
                print(f"linewidth unresolved for {w} at area {area:.6g}: {exc}", file=sys.stderr)
                fwhm = None
            lw_rows.append([area, w, fwhm, s.intensity, s.sum_rule, s.sum_rule_error, dip])
    return [
        write_csv(out / "spectra.csv", ["area", "emitter", "omega", "S"], spec_rows, hdr),
        write_csv(
            out / "linewidth.csv",
            ["area", "emitter", "fwhm", "intensity", "sum_rule", "sum_rule_error", "central_dip"],
            lw_rows,
            hdr,
        ),
    ]


def cmd_occupation(cfg):
    out, hdr = cfg.out, _header(cfg)
    parts = build_cascaded(cfg.system)
    written = []
    for k, area in enumerate(cfg.options["areas"]):
        pulse = cfg.pulse.replace(area=area)
        traj = evolve(ops.ground_state(), parts, pulse, emission_grid(pulse, cfg.system, cfg.grid["dt"]), cfg.grid["tol"])
        pops = [traj.population(w) for w in ("source", "target", "flux")]
        rows = np.column_stack([traj.times - pulse.t0] + pops).tolist()
        written.append(
            write_csv(
                out / f"occupation_{k}.csv",
                ["t", "n_source", "n_target", "n_flux"],
                rows,
                hdr + [("area", repr(area))],
            )
        )
    return written


def _two_photon_scan(cfg):
    parts = build_cascaded(cfg.system)
    g = cfg.grid
    for area in cfg.options["areas"]:
        pulse = cfg.pulse.replace(area=area)
        engine = RegressionEngine(parts, pulse, map_grid(pulse, cfg.system, g["map_points"], g["map_t_after"]), g["tol"])
        yield area, engine


def cmd_g2(cfg):
    rows = []
    for area, engine in _two_photon_scan(cfg):
        for w in cfg.options["emitters"]:
            rows.append([area, w, pulsed_g2_zero(engine.g2_map(w), engine.trajectory, w)])
    return [write_csv(cfg.out / "g2.csv", ["area", "emitter", "g2_zero"], rows, _header(cfg))]


def cmd_hom(cfg):
    rows = []
    for area, engine in _two_photon_scan(cfg):
        for w in cfg.options["emitters"]:
            raw = hom_overlap(engine.g1_map(w), engine.trajectory, w)
            g2z = pulsed_g2_zero(engine.g2_map(w), engine.trajectory, w)
            clipped = not -CLIP_SLACK <= raw <= 1.0 + CLIP_SLACK
            m = min(max(raw, 0.0), 1.0)
            rows.append([area, w, m, g2z, hom_visibility(m, g2z), clipped])
    cols = ["area", "emitter", "overlap", "g2_zero", "hom_visibility", "clipped"]
    return [write_csv(cfg.out / "hom.csv", cols, rows, _header(cfg))]


def cmd_g2map(cfg):
    out, hdr, g = cfg.out, _header(cfg), cfg.grid
    parts = build_cascaded(cfg.system)
    pulse = cfg.pulse.replace(area=cfg.options["area"])
    grid = map_grid(pulse, cfg.system, g["map_points"], g["map_t_after"])
    engine = RegressionEngine(parts, pulse, grid, g["tol"])
    t = grid.samples - pulse.t0
    written = []
    diag = {}
    for w in cfg.options["emitters"]:
        m = engine.g2_map(w)
        diag[w] = m.diagonal()
        t1, t2 = np.meshgrid(t, t, indexing="ij")
        rows = np.column_stack([t1.ravel(), t2.ravel(), m.values.ravel()]).tolist()
        written.append(write_csv(out / f"g2map_{w}.csv", ["t1", "t2", "G2"], rows, hdr))
    same = {w: diag[w] if w in diag else engine.same_time_g2(w) for w in ("source", "target", "flux")}
    norm = normalized_g2_tt(parts, pulse, grid, "flux", engine=engine)
    rows = [
        [ti, s, x, f, n, None if np.isnan(r) else r]
        for ti, s, x, f, n, r in zip(t, same["source"], same["target"], same["flux"], engine.population("flux"), norm)
    ]
    cols = ["t", "G2_source_tt", "G2_target_tt", "G2_flux_tt", "n_flux", "g2_flux_tt"]
    written.append(write_csv(out / "same_time.csv", cols, rows, hdr))
    trace = same_time_g2_trace(parts, pulse, grid, engine=engine)
    written.append(
        write_csv(
            out / "stimulated_decay.csv",
            ["emitter", "decay_rate", "fit_start", "fit_points"],
            [["flux", trace.decay_rate, trace.fit_start - pulse.t0, trace.fit_points]],
            hdr,
        )
    )
    return written


def cmd_sweep(cfg):
    opts, g = cfg.options, cfg.grid
    spec = SweepSpec(
        base=cfg.system,
        areas=opts["areas"],
        lengths=opts["lengths"],
        chi2_values=opts["chi2_values"],
        outputs=frozenset(opts["outputs"]),
        emitters=tuple(opts["emitters"]),
        tol=g["tol"],
        map_points=g["map_points"],
        map_t_after=g["map_t_after"],
        spectrum_points=g["spectrum_points"],
        spectrum_t_after=g["spectrum_t_after"],
        spectrum_window=g["spectrum_window"],
        t0=cfg.pulse.t0,
    )
    result = run_sweep(spec, cfg.jobs)
    path = write_sweep(result, cfg.out, _header(cfg))
    errors = result.errors()
    if errors:
        raise SimulationError(f"{len(errors)} sweep record(s) failed; see the error column of {path}")
    written = [path] + sorted(cfg.out.glob("points/*.csv"))
    return written


HANDLERS = {
    "rabi": cmd_rabi,
    "spectrum": cmd_spectrum,
    "occupation": cmd_occupation,
    "g2": cmd_g2,
    "hom": cmd_hom,
    "g2map": cmd_g2map,
    "sweep": cmd_sweep,
}


# ------------------------------------------------------------------- parsing


def _overrides(args):
    """Translate command-line flags into ``{section: {key: text}}`` overrides."""
    ov = {}

    def put(sec, key, val):
        ov.setdefault(sec, {})[key] = str(val)

    cmd = args.command
    if args.tol is not None:
        put("grid", "tol", args.tol)
    if args.chi2 is not None:
        put("system", "chi2", args.chi2)
    if args.length is not None:
        if cmd in ("rabi", "sweep"):
            put(cmd, "lengths", args.length)
        else:
            put("pulse", "fwhm", args.length)
    if args.areas is not None:
        if cmd == "g2map":
            put("g2map", "area", args.areas)
        else:
            put(cmd, "areas", args.areas)
    if args.emitter:
        if cmd == "occupation":
            raise ValueError("occupation always writes all three emitters")
        put(cmd, "emitters", ",".join(args.emitter))
    for item in args.set or ():
        key, sep, value = item.partition("=")
        sec, dot, name = key.strip().partition(".")
        if not sep or not dot:
            raise ValueError(f"--set expects section.key=value, got {item!r}")
        put(sec, name, value.strip())
    return ov


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="sectioned key=value configuration file")
    common.add_argument("--out", type=Path, default=Path("."), help="output directory (default: .)")
    common.add_argument("--jobs", type=int, default=1, help="worker processes for area/sweep grids")
    common.add_argument("--tol", type=float, help="integrator tolerance (default 1e-10)")
    common.add_argument("--length", help="pulse FWHM in 1/gamma_sigma (list for rabi and sweep)")
    common.add_argument("--areas", "--area", dest="areas", help="pulse area(s), e.g. 'pi' or '0:3pi:0.05pi'")
    common.add_argument("--emitter", action="append", help="source, target or flux (repeatable)")
    common.add_argument("--chi2", type=float, help="fraction of target emission in the photon flux")
    common.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE", help="override any config key")

    parser = argparse.ArgumentParser(prog="pulsed-cascade", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "rabi": "integrated intensity vs pulse area, visibility and extinction fits",
        "spectrum": "time-integrated spectra and linewidth summary",
        "occupation": "time-dependent occupations of source, target and photon flux",
        "g2": "pulsed g2(0) against pulse area",
        "hom": "HOM indistinguishability against pulse area",
        "g2map": "two-time G2 maps and same-time correlations",
        "sweep": "arbitrary grid over area, length and chi2",
    }
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load(args.command, args.config, _overrides(args), args.out, args.jobs)
        _check_writable(cfg.out)
    except (ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        written = HANDLERS[args.command](cfg)
    except SimulationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    _write_readme(cfg.out, written)
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
