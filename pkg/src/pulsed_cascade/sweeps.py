"""Parameter sweeps over pulse area, pulse length and target coupling.

Grid points are flattened in (chi2, length, area) order and split into
contiguous chunks, one per worker. Results are reassembled in index order,
so a sweep is bitwise identical for any worker count.
"""
import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from . import operators as ops
from .correlations import RegressionEngine
from .csvio import write_csv
from .exceptions import SimulationError
from .liouvillian import EMITTERS, SystemParams, build_cascaded
from .observables import (
    RabiCurve,
    hom_overlap,
    hom_visibility,
    linewidth_fwhm,
    pulsed_g2_zero,
    spectrum,
    visibility,
)
from .propagator import DEFAULT_TOL, emission_grid, evolve, integrate_intensity, map_grid
from .pulse import PulseParams

OUTPUTS = frozenset({"intensity", "spectrum", "g2zero", "hom", "occupation", "g2map", "visibility"})


@dataclass(frozen=True)
class SweepSpec:
    base: SystemParams
    areas: tuple
    lengths: tuple
    chi2_values: tuple
    outputs: frozenset
    emitters: tuple = EMITTERS
    tol: float = DEFAULT_TOL
    map_points: int = 401
    map_t_after: float = 12.0
    spectrum_points: int = 1201
    spectrum_t_after: float = 36.0
    spectrum_window: float = 10.0
    t0: float = 0.0

    def __post_init__(self):
        for name in ("areas", "lengths", "chi2_values"):
            vals = tuple(float(v) for v in getattr(self, name))
            if not vals:
                raise ValueError(f"sweep grid {name!r} is empty")
            object.__setattr__(self, name, vals)
        if min(self.areas) < 0:
            raise ValueError("areas must be >= 0")
        if min(self.lengths) <= 0:
            raise ValueError("lengths must be > 0")
        if not all(0.0 <= c <= 1.0 for c in self.chi2_values):
            raise ValueError("chi2 values must lie in [0, 1]")
        outputs = frozenset(self.outputs)
        unknown = outputs - OUTPUTS
        if unknown or not outputs:
            raise ValueError(f"unknown or empty outputs {sorted(unknown)}; choose from {sorted(OUTPUTS)}")
        object.__setattr__(self, "outputs", outputs)
        object.__setattr__(self, "emitters", tuple(self.emitters))

    def points(self):
        """Flattened grid in deterministic (chi2, length, area) order."""
        return list(itertools.product(self.chi2_values, self.lengths, self.areas))

    def echo(self):
        """Every knob needed to regenerate the sweep."""
        base = {f"base.{k}": v for k, v in self.base.__dict__.items()}
        return {
            **base,
            "areas": list(self.areas),
            "lengths": list(self.lengths),
            "chi2_values": list(self.chi2_values),
            "outputs": sorted(self.outputs),
            "emitters": list(self.emitters),
            "tol": self.tol,
            "map_points": self.map_points,
            "map_t_after": self.map_t_after,
            "spectrum_points": self.spectrum_points,
            "spectrum_t_after": self.spectrum_t_after,
            "spectrum_window": self.spectrum_window,
            "t0": self.t0,
            "engine_version": __version__,
        }


@dataclass(frozen=True)
class SweepError:
    message: str


@dataclass(frozen=True, eq=False)
class SweepResult:
    records: dict = field(repr=False)
    provenance: dict

    def value(self, area, length, chi2, emitter, observable):
        return self.records[(area, length, chi2, emitter, observable)]

    def errors(self):
        return {k: v for k, v in self.records.items() if isinstance(v, SweepError)}


def evaluate_point(spec, chi2, length, area):
    """All requested per-point observables for one grid point, keyed by (emitter, observable)."""
    sp = spec.base.replace(chi2=chi2)
    pulse = PulseParams(area=area, t0=spec.t0, fwhm=length)
    parts = build_cascaded(sp)
    out = {}
    wants = spec.outputs
    if wants & {"intensity", "occupation", "visibility"}:
        traj = evolve(ops.ground_state(), parts, pulse, emission_grid(pulse, sp), spec.tol)
        for w in spec.emitters:
            if wants & {"intensity", "visibility"}:
                out[(w, "intensity")] = integrate_intensity(traj, w)
            if "occupation" in wants:
                out[(w, "occupation")] = np.column_stack([traj.times, traj.population(w)])
    if wants & {"g2zero", "hom", "g2map"}:
        engine = RegressionEngine(parts, pulse, map_grid(pulse, sp, spec.map_points, spec.map_t_after), spec.tol)
        for w in spec.emitters:
            g2 = engine.g2_map(w)
            g2zero = pulsed_g2_zero(g2, engine.trajectory, w)
            if "g2zero" in wants:
                out[(w, "g2zero")] = g2zero
            if "hom" in wants:
                m = hom_overlap(engine.g1_map(w), engine.trajectory, w)
                out[(w, "hom")] = m
                out[(w, "hom_visibility")] = hom_visibility(m, g2zero)
            if "g2map" in wants:
                out[(w, "g2map")] = np.asarray(g2.values)
    if "spectrum" in wants:
        grid = map_grid(pulse, sp, spec.spectrum_points, spec.spectrum_t_after)
        engine = RegressionEngine(parts, pulse, grid, spec.tol)
        for w in spec.emitters:
            s = spectrum(engine.g1_map(w))
            om, val = s.window(spec.spectrum_window)
            out[(w, "spectrum")] = np.column_stack([om, val])
            try:
                out[(w, "fwhm")] = linewidth_fwhm(s)
            except SimulationError as exc:
                out[(w, "fwhm")] = SweepError(str(exc))
            out[(w, "sum_rule_error")] = s.sum_rule_error
    return out


def _expected_keys(spec):
    obs = []
    for o in sorted(spec.outputs - {"visibility"}):
        obs.append(o)
        if o == "hom":
            obs.append("hom_visibility")
        if o == "spectrum":
            obs += ["fwhm", "sum_rule_error"]
    if "visibility" in spec.outputs and "intensity" not in obs:
        obs.append("intensity")
    return [(w, o) for w in spec.emitters for o in obs]


def _run_chunk(args):
    spec, chunk = args
    results = []
    for chi2, length, area in chunk:
        try:
            res = evaluate_point(spec, chi2, length, area)
        except (SimulationError, ValueError, ArithmeticError) as exc:
            err = SweepError(f"{type(exc).__name__}: {exc}")
            res = {k: err for k in _expected_keys(spec)}
        results.append(res)
    return results


def _partition(items, n):
    n = max(1, min(n, len(items)))
    bounds = np.linspace(0, len(items), n + 1).round().astype(int)
    return [items[a:b] for a, b in zip(bounds[:-1], bounds[1:])]


def run_sweep(spec, parallelism=1):
    """Evaluate every grid point; per-point failures become ``SweepError`` records."""
    points = spec.points()
    chunks = _partition(points, parallelism)
    if len(chunks) > 1:
        with ProcessPoolExecutor(max_workers=len(chunks)) as pool:
            parts = list(pool.map(_run_chunk, [(spec, c) for c in chunks]))
    else:
        parts = [_run_chunk((spec, chunks[0]))]
    per_point = [r for part in parts for r in part]
    records = {}
    for (chi2, length, area), res in zip(points, per_point):
        for (w, obs), val in res.items():
            if obs == "intensity" and "intensity" not in spec.outputs:
                continue
            records[(area, length, chi2, w, obs)] = val
    if "visibility" in spec.outputs:
        for chi2, length in itertools.product(spec.chi2_values, spec.lengths):
            for w in spec.emitters:
                records[(None, length, chi2, w, "visibility")] = _visibility_record(
                    spec, per_point, points, chi2, length, w
                )
    return SweepResult(records=records, provenance=spec.echo())


def _visibility_record(spec, per_point, points, chi2, length, w):
    vals = []
    for (c, l, a), res in zip(points, per_point):
        if c == chi2 and l == length:
            v = res.get((w, "intensity"))
            if isinstance(v, SweepError):
                return v
            vals.append((a, v))
    vals.sort()
    if len(vals) < 3:
        return SweepError("visibility needs at least three areas")
    a, i = np.array(vals).T
    return visibility(RabiCurve(a, i, w, length))


def write_sweep(result, out_dir, header=()):
    """Aggregate table plus one file per heavy artifact, referenced by handle."""
    out = Path(out_dir)
    rows = []
    artifacts = out / "points"
    for n, (key, val) in enumerate(sorted(result.records.items(), key=_record_order)):
        area, length, chi2, w, obs = key
        value, handle, error = "", "", ""
        if isinstance(val, SweepError):
            error = val.message
        elif np.ndim(val) == 0:
            value = float(val)
        else:
            name = f"{obs}_{w}_{n:05d}.csv"
            cols = {"occupation": ["t", "n"], "spectrum": ["omega", "S"]}.get(obs)
            arr = np.asarray(val)
            if cols is None:
                cols = [f"c{j}" for j in range(arr.shape[1])]
            write_csv(artifacts / name, cols, arr.tolist(), header=list(header) + [("record", key)])
            handle = f"points/{name}"
        rows.append(["" if area is None else area, length, chi2, w, obs, value, handle, error])
    write_csv(
        out / "sweep.csv",
        ["area", "length", "chi2", "emitter", "observable", "value", "handle", "error"],
        rows,
        header=list(header) + sorted((f"sweep.{k}", v) for k, v in result.provenance.items()),
    )
    return out / "sweep.csv"


def _record_order(item):
    (area, length, chi2, w, obs), _ = item
    return (chi2, length, -1.0 if area is None else area, EMITTERS.index(w) if w in EMITTERS else 9, obs)
