"""Two-time correlation functions via the quantum regression theorem.

A map on an ``N``-point grid needs the state at every grid time and the
propagator between every pair of times. Both come from the ``N - 1`` step
propagators ``Phi(t_{k+1}, t_k)``: the conditional states of all rows are
held side by side as columns of one ``16 x N`` array and pushed forward one
grid interval at a time, so the whole map costs ``N`` small matrix products
instead of ``N^2`` separate integrations.
"""
from dataclasses import dataclass, field

import numpy as np

from . import operators as ops
from .exceptions import FitError
from .propagator import (
    DEFAULT_TOL,
    Trajectory,
    check_states,
    states_from_propagators,
    step_propagators,
)

G2_FLOOR = -1e-10
NOISE_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class CorrelationMap:
    """Two-time correlation on ``axis x axis``.

    ``values[i, j]`` is ``<c^+(t_j) c(t_i)>`` for kind ``g1`` and the
    coincidence rate of photons at ``t_i`` and ``t_j`` for kind ``g2``.
    """

    axis: object
    values: np.ndarray = field(repr=False)
    kind: str
    emitter: str

    @property
    def axis1(self):
        return self.axis

    @property
    def axis2(self):
        return self.axis

    @property
    def times(self):
        return self.axis.samples

    def diagonal(self):
        return np.real(np.diag(self.values)) if self.kind == "g2" else np.diag(self.values)

    def integral(self, func=None):
        """Trapezoidal double integral of ``func(values)`` over the square."""
        v = self.values if func is None else func(self.values)
        t = self.times
        return np.trapezoid(np.trapezoid(v, t, axis=1), t)


class RegressionEngine:
    """Step propagators and the mean-field trajectory on one uniform or custom grid."""

    def __init__(self, parts, pulse, grid, tol=DEFAULT_TOL, rho0=None):
        self.parts = parts
        self.pulse = pulse
        self.grid = grid
        self.tol = tol
        self.props = step_propagators(parts, pulse, grid, tol)
        rho0 = ops.ground_state() if rho0 is None else np.asarray(rho0, dtype=complex)
        states = states_from_propagators(rho0, self.props)
        check_states(states, grid.samples)
        states.setflags(write=False)
        self.trajectory = Trajectory(grid=grid, states=states, parts=parts, pulse=pulse)

    @property
    def states(self):
        return self.trajectory.states

    def _regress(self, initial, observable):
        """``out[i, j] = Tr[observable Phi(t_j, t_i)[initial_i]]`` for ``j >= i``.

        ``initial`` has shape (N, 4, 4); the lower triangle is left as zero.
        """
        n = self.grid.n_points
        x0 = initial.transpose(0, 2, 1).reshape(n, ops.LDIM).T  # column-stacked vec per row
        row = ops.expectation_row(observable)
        out = np.zeros((n, n), dtype=complex)
        cond = np.empty((ops.LDIM, n), dtype=complex)
        for j in range(n):
            if j > 0:
                cond[:, :j] = self.props[j - 1] @ cond[:, :j]
            cond[:, j] = x0[:, j]
            out[: j + 1, j] = row @ cond[:, : j + 1]
        return out

    def g1_map(self, which):
        c = self.parts.emitter_operator(which)
        # G1(t, t+tau) = Tr[c^+ Phi(t+tau, t)[c rho(t)]]
        upper = self._regress(c @ self.states, ops.adjoint(c))
        values = np.triu(upper) + np.conj(np.triu(upper, 1)).T
        values.setflags(write=False)
        return CorrelationMap(self.grid, values, "g1", which)

    def g2_map(self, which):
        c = self.parts.emitter_operator(which)
        cd = ops.adjoint(c)
        upper = np.real(self._regress(c @ self.states @ cd, cd @ c))
        values = np.triu(upper, 1) + np.triu(upper, 1).T
        # closed-form same-time value Tr[c^+ c^+ c c rho]
        np.fill_diagonal(values, self.same_time_g2(which))
        values.setflags(write=False)
        return CorrelationMap(self.grid, values, "g2", which)

    def same_time_g2(self, which):
        c = self.parts.emitter_operator(which)
        cd = ops.adjoint(c)
        return np.real(self.trajectory.expectation(cd @ cd @ c @ c))

    def population(self, which):
        return self.trajectory.population(which)


def g1_map(parts, pulse, grid, which, tol=DEFAULT_TOL):
    return RegressionEngine(parts, pulse, grid, tol).g1_map(which)


def g2_map(parts, pulse, grid, which, tol=DEFAULT_TOL):
    return RegressionEngine(parts, pulse, grid, tol).g2_map(which)


@dataclass(frozen=True, eq=False)
class SameTimeTrace:
    times: np.ndarray
    values: np.ndarray
    decay_rate: float
    fit_start: float
    fit_points: int


def fit_exponential_tail(times, values, t_from, floor=NOISE_FLOOR, min_points=10):
    """Log-linear least-squares decay rate of ``values`` for ``t >= t_from``."""
    sel = (times >= t_from) & (values > floor)
    if np.count_nonzero(sel) < min_points:
        raise FitError(f"only {np.count_nonzero(sel)} tail samples above {floor:g}")
    slope, _ = np.polyfit(times[sel], np.log(values[sel]), 1)
    return -slope, int(np.count_nonzero(sel))


def same_time_g2_trace(parts, pulse, grid, tol=DEFAULT_TOL, engine=None):
    """Same-time photon-flux coincidences ``G2_phi(t, t)`` and their tail decay rate.

    The tail starts at the pulse edge ``t0 + 5 nu``. When the trace is
    identically zero (no cascade) the decay rate is reported as ``nan``.
    """
    engine = engine or RegressionEngine(parts, pulse, grid, tol)
    values = engine.same_time_g2("flux")
    t = grid.samples
    t_from = pulse.t0 + 5.0 * pulse.nu
    if np.max(np.abs(values)) == 0.0:
        rate, npts = float("nan"), 0
    else:
        rate, npts = fit_exponential_tail(t, values, t_from)
    return SameTimeTrace(times=t, values=values, decay_rate=float(rate), fit_start=t_from, fit_points=npts)


def normalized_g2_tt(parts, pulse, grid, which="flux", tol=DEFAULT_TOL, engine=None):
    """``G2(t, t) / <c^+ c>(t)^2``; points with a denominator below 1e-12 are ``nan``."""
    engine = engine or RegressionEngine(parts, pulse, grid, tol)
    num = engine.same_time_g2(which)
    den = engine.population(which) ** 2
    out = np.full_like(num, np.nan)
    ok = den >= NOISE_FLOOR
    out[ok] = num[ok] / den[ok]
    return out
