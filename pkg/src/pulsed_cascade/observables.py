"""Scalar and curve observables: Rabi visibility, spectra, g2(0) and HOM."""
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import operators as ops
from .exceptions import FitError, SimulationError
from .liouvillian import EMITTERS, build_cascaded
from .propagator import DEFAULT_TOL, emission_grid, evolve, integrate_intensity
from .pulse import PulseParams

SPECTRAL_CLIP = 1e-8
TAU_TAIL = 1e-6
# rounding slack before an out-of-range HOM overlap counts as clipped
CLIP_SLACK = 1e-12


class ObservableWarning(UserWarning):
    pass


# ---------------------------------------------------------------- Rabi curves


@dataclass(frozen=True, eq=False)
class RabiCurve:
    areas: np.ndarray
    intensities: np.ndarray
    emitter: str
    fwhm: float

    @property
    def monotone(self):
        """True when the curve has no interior extremum."""
        d = np.diff(self.intensities)
        return bool(np.all(d >= 0) or np.all(d <= 0))


def intensities_at(sp, pulse, tol=DEFAULT_TOL, dt=0.02):
    """Integrated intensity of every emitter for one pulse."""
    parts = build_cascaded(sp)
    traj = evolve(ops.ground_state(), parts, pulse, emission_grid(pulse, sp, dt=dt), tol)
    return {w: integrate_intensity(traj, w) for w in EMITTERS}


def _intensities_task(args):
    return intensities_at(*args)


def rabi_curves(sp, fwhm, areas, emitters=EMITTERS, tol=DEFAULT_TOL, jobs=1, t0=0.0):
    """Integrated intensity against pulse area for several emitters at once.

    Each area is an independent simulation; with ``jobs > 1`` they run in a
    process pool and are collected in grid order.
    """
    areas = np.asarray(areas, dtype=float)
    tasks = [(sp, PulseParams(area=a, t0=t0, fwhm=fwhm), tol) for a in areas]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_intensities_task, tasks))
    else:
        rows = [_intensities_task(t) for t in tasks]
    return {
        w: RabiCurve(areas, np.array([r[w] for r in rows]), w, float(fwhm)) for w in emitters
    }


def rabi_curve(sp, fwhm, areas, which="source", tol=DEFAULT_TOL, jobs=1):
    return rabi_curves(sp, fwhm, areas, (which,), tol, jobs)[which]


def _refine_extremum(x, y, k):
    """Vertex value of the parabola through samples ``k-1, k, k+1``."""
    x0, x1, x2 = x[k - 1 : k + 2]
    y0, y1, y2 = y[k - 1 : k + 2]
    denom = (x0 - x1) * (x0 - x2) * (x1 - x2)
    a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom
    b = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / denom
    if a == 0:
        return x1, y1
    xv = -b / (2 * a)
    if not x0 <= xv <= x2:
        return x1, y1
    c = y0 - a * x0 * x0 - b * x0
    return xv, a * xv * xv + b * xv + c


def local_extrema(x, y, kind):
    """Indices of interior local maxima (``kind='max'``) or minima."""
    s = 1.0 if kind == "max" else -1.0
    yy = s * np.asarray(y)
    return [k for k in range(1, len(yy) - 1) if yy[k] >= yy[k - 1] and yy[k] > yy[k + 1]]


def visibility(curve):
    """Normalized contrast between the maximum near A = pi and the minimum near A = 2 pi.

    Returns 0 when either extremum is missing.
    """
    x, y = np.asarray(curve.areas), np.asarray(curve.intensities)
    maxima = local_extrema(x, y, "max")
    minima = local_extrema(x, y, "min")
    if not maxima or not minima:
        return 0.0
    kmax = min(maxima, key=lambda k: abs(x[k] - np.pi))
    kmin = min(minima, key=lambda k: abs(x[k] - 2 * np.pi))
    big = _refine_extremum(x, y, kmax)[1]
    small = _refine_extremum(x, y, kmin)[1]
    if big + small <= 0:
        return 0.0
    return float((big - small) / (big + small))


@dataclass(frozen=True)
class ExtinctionFit:
    beta: float
    intercept: float
    residual: float
    n_points: int


def extinction_fit(points, floor=1e-4):
    """Least-squares slope of ``ln V`` against ``W gamma_sigma``; ``beta`` is minus the slope."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    sel = pts[:, 1] > floor
    if np.count_nonzero(sel) < 5:
        raise FitError(f"need >= 5 visibility points above {floor:g}, got {np.count_nonzero(sel)}")
    w, lv = pts[sel, 0], np.log(pts[sel, 1])
    (slope, intercept), res, *_ = np.polyfit(w, lv, 1, full=True)
    residual = float(np.sqrt(res[0] / w.size)) if res.size else 0.0
    return ExtinctionFit(float(-slope), float(intercept), residual, int(w.size))


# ------------------------------------------------------------------- spectra


@dataclass(frozen=True, eq=False)
class Spectrum:
    omega: np.ndarray
    values: np.ndarray = field(repr=False)
    emitter: str
    intensity: float
    sum_rule: float
    clipped: bool = False
    truncated: bool = False

    @property
    def sum_rule_error(self):
        return abs(self.sum_rule - self.intensity) / abs(self.intensity)

    def window(self, half_width):
        sel = np.abs(self.omega) <= half_width
        return self.omega[sel], self.values[sel]


def lag_profile(g1):
    """``s(tau) = int G1(t, t + tau) dt`` on the lags of a uniform map grid."""
    if g1.kind != "g1":
        raise ValueError("spectrum needs a first-order correlation map")
    dt = g1.axis.step
    v = g1.values
    n = v.shape[0]
    s = np.empty(n, dtype=complex)
    for k in range(n):
        band = np.diagonal(v, offset=k)
        s[k] = np.trapezoid(band, dx=dt) if band.size > 1 else 0.0
    return s, dt * np.arange(n)


def spectrum(g1, pad_to=1 << 15):
    """Time-integrated emission spectrum from a first-order correlation map.

    ``S(w) = 2 Re int_0^inf s(tau) exp(-i w tau) d tau`` evaluated by FFT of
    the zero-padded lag profile (trapezoid in ``tau``). On the FFT frequency
    grid the discrete sum rule ``sum S dw / 2 pi = s(0)`` holds exactly.
    """
    s, tau = lag_profile(g1)
    dt = tau[1] - tau[0]
    # correlations still alive on the last row of the map mean the window ends too early
    edge = np.max(np.abs(g1.values[:, -1])) / np.max(np.abs(g1.values))
    truncated = bool(edge > TAU_TAIL)
    if truncated:
        warnings.warn(
            f"time window ends too early: |G1| at t_end is {edge:.2e} of its maximum",
            ObservableWarning,
            stacklevel=2,
        )
    m = max(int(pad_to), 4 * s.size)
    w = s.copy()
    w[0] *= 0.5
    spec = 2.0 * np.real(np.fft.fft(w, n=m)) * dt
    omega = 2.0 * np.pi * np.fft.fftfreq(m, d=dt)
    omega, spec = np.fft.fftshift(omega), np.fft.fftshift(spec)
    clipped = bool(np.any(spec < -SPECTRAL_CLIP * spec.max()))
    if clipped:
        warnings.warn("negative spectral ringing clipped to zero", ObservableWarning, stacklevel=2)
        spec = np.where(spec < 0, 0.0, spec)
    sum_rule = float(np.sum(spec) * (omega[1] - omega[0]) / (2 * np.pi))
    return Spectrum(omega, spec, g1.emitter, float(np.real(s[0])), sum_rule, clipped, truncated)


def _crossing(x0, x1, y0, y1, level):
    return x0 + (level - y0) * (x1 - x0) / (y1 - y0)


def linewidth_fwhm(spec, min_points=20):
    """Full width at half maximum between the outermost half-maximum crossings.

    A line split by a central dip (the photon flux at resonance) is measured
    across both lobes, so its width is never that of a single lobe.
    """
    w, s = spec.omega, spec.values
    half = 0.5 * np.max(s)
    above = np.flatnonzero(s >= half)
    lo, hi = int(above[0]), int(above[-1])
    if hi - lo + 1 < min_points:
        raise SimulationError(f"line resolved by only {hi - lo + 1} points above half maximum")
    if lo == 0 or hi == s.size - 1:
        raise SimulationError("line does not fall below half maximum inside the frequency window")
    left = _crossing(w[lo - 1], w[lo], s[lo - 1], s[lo], half)
    right = _crossing(w[hi], w[hi + 1], s[hi], s[hi + 1], half)
    return float(right - left)


# ----------------------------------------------------- two-photon observables


def _intensity(traj, which):
    n = traj.population(which)
    total = float(np.trapezoid(n, traj.times))
    if not total > 0:
        raise SimulationError(f"zero {which} intensity; normalization undefined")
    return total


def _check_compatible(cmap, traj):
    if traj.grid.n_points != cmap.axis.n_points or not np.allclose(traj.times, cmap.times):
        raise ValueError("correlation map and trajectory must share one time grid")


def pulsed_g2_zero(g2, traj, which=None):
    """Same-pulse coincidences over the uncorrelated different-pulse coincidence area."""
    which = which or g2.emitter
    _check_compatible(g2, traj)
    return float(g2.integral() / _intensity(traj, which) ** 2)


def hom_overlap(g1, traj, which=None):
    """Unclipped mean wavepacket overlap ``int int |G1|^2 / (int n)^2``."""
    which = which or g1.emitter
    _check_compatible(g1, traj)
    return float(g1.integral(lambda v: np.abs(v) ** 2) / _intensity(traj, which) ** 2)


def hom_indistinguishability(g1, traj, which=None):
    """Mean wavepacket overlap clipped to [0, 1]; clipping raises an ObservableWarning."""
    m = hom_overlap(g1, traj, which)
    if not -CLIP_SLACK <= m <= 1.0 + CLIP_SLACK:
        warnings.warn(f"HOM overlap {m:.6g} clipped to [0, 1]", ObservableWarning, stacklevel=2)
    return min(max(m, 0.0), 1.0)


def hom_visibility(overlap, g2_zero):
    """HOM dip visibility ``1 - C_par / C_perp`` for two identical independent inputs.

    With ``C_par ~ 1 + g2 - M`` and ``C_perp ~ 1 + g2`` this is ``M / (1 + g2)``.
    """
    return float(overlap / (1.0 + g2_zero))
