"""Adaptive time evolution of states and propagators under ``L(t)``.

The integrator is an embedded Dormand-Prince 5(4) pair. Reported grid
samples are hit exactly by clipping the last step of each grid interval; the
accepted steps are additionally kept for cubic Hermite dense output so that
trajectories can be queried between samples.
"""
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson
from scipy.linalg import expm

from . import operators as ops
from .exceptions import InvariantError, StiffnessError, TruncatedTrajectoryError
from .pulse import default_start, unit_envelope

DEFAULT_TOL = 1e-10
INVARIANT_ABORT = 1e-6
TAIL_RATIO = 1e-8
# below this drive strength a grid interval is propagated with expm(l_static h)
QUIET_DRIVE = 1e-14

# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array(_A[6] + [0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4


@dataclass(frozen=True)
class TimeGrid:
    samples: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        if s.ndim != 1 or s.size < 2:
            raise ValueError("a time grid needs at least two samples")
        if np.any(np.diff(s) <= 0):
            raise ValueError("grid samples must be strictly increasing")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    @classmethod
    def uniform(cls, t_start, t_end, n_points):
        if not t_start < t_end:
            raise ValueError("t_start must precede t_end")
        if n_points < 2:
            raise ValueError("n_points must be >= 2")
        return cls(np.linspace(t_start, t_end, int(n_points)))

    @property
    def t_start(self):
        return float(self.samples[0])

    @property
    def t_end(self):
        return float(self.samples[-1])

    @property
    def n_points(self):
        return self.samples.size

    @property
    def step(self):
        """Spacing of a uniform grid (raises for non-uniform grids)."""
        d = np.diff(self.samples)
        if not np.allclose(d, d[0], rtol=1e-9, atol=0.0):
            raise ValueError("grid is not uniform")
        return float((self.t_end - self.t_start) / (self.n_points - 1))

    @property
    def is_uniform(self):
        d = np.diff(self.samples)
        return bool(np.allclose(d, d[0], rtol=1e-9, atol=0.0))

    def __len__(self):
        return self.n_points


def emission_grid(pulse, sp, dt=0.02, n_pulse=201, t_end=None):
    """Piecewise-uniform grid: fine across the pulse, spacing ``dt`` afterwards.

    Starts at ``t0 - 5 nu``. The default end ``t0 + 30/gamma_min`` leaves an
    intensity tail below 1e-8 of the peak for every emitter, including the
    slower ``t exp(-t)`` tail of the target.
    """
    t_start = default_start(pulse)
    t_pulse = pulse.t0 + 5.0 * pulse.nu
    if t_end is None:
        g = sp.gamma_min
        t_end = max(pulse.t0 + 30.0 / g, t_pulse + 10.0 / g)
    n1 = max(int(n_pulse), int(np.ceil((t_pulse - t_start) / dt)) + 1)
    seg1 = np.linspace(t_start, t_pulse, n1)
    if t_end <= t_pulse:
        return TimeGrid(seg1)
    n2 = int(np.ceil((t_end - t_pulse) / dt))
    seg2 = t_pulse + dt * np.arange(1, n2 + 1)
    return TimeGrid(np.concatenate([seg1, seg2]))


def map_grid(pulse, sp, n_points=401, t_after=12.0):
    """Uniform grid ``[t0 - 5 nu, t0 + t_after/gamma_min]`` for two-time maps."""
    return TimeGrid.uniform(default_start(pulse), pulse.t0 + t_after / sp.gamma_min, n_points)


class _Rhs:
    """``dY/dt = (l_static + area * g(t) * l_drive) @ Y`` with ``g`` the unit pulse."""

    def __init__(self, parts, pulse):
        self.l0 = np.asarray(parts.l_static)
        self.l1 = np.asarray(parts.l_drive)
        self.t0 = pulse.t0
        self.inv_nu = 1.0 / pulse.nu
        self.peak = pulse.area * float(unit_envelope(pulse.t0, pulse))

    def drive(self, t):
        x = (t - self.t0) * self.inv_nu
        return self.peak * math.exp(-0.5 * x * x)

    def quiet(self, a, b):
        """True when the drive stays below QUIET_DRIVE over [a, b]."""
        return self.drive(min(max(self.t0, a), b)) < QUIET_DRIVE

    def __call__(self, t, y):
        w = self.drive(t)
        if w == 0.0:
            return self.l0 @ y
        return (self.l0 + w * self.l1) @ y


class DenseOutput:
    """Cubic Hermite interpolant through accepted steps."""

    def __init__(self, ts, ys, fs):
        self.ts = np.asarray(ts)
        self.ys = np.asarray(ys)
        self.fs = np.asarray(fs)

    def __call__(self, t):
        t = float(t)
        if t < self.ts[0] or t > self.ts[-1]:
            raise ValueError(f"t={t} outside dense-output range [{self.ts[0]}, {self.ts[-1]}]")
        k = int(np.clip(np.searchsorted(self.ts, t) - 1, 0, self.ts.size - 2))
        t0, t1 = self.ts[k], self.ts[k + 1]
        h = t1 - t0
        s = (t - t0) / h
        h00 = (1 + 2 * s) * (1 - s) ** 2
        h10 = s * (1 - s) ** 2
        h01 = s * s * (3 - 2 * s)
        h11 = s * s * (s - 1)
        return h00 * self.ys[k] + h10 * h * self.fs[k] + h01 * self.ys[k + 1] + h11 * h * self.fs[k + 1]


class _DormandPrince:
    """Stateful DP5(4) stepper; the step size carries over between calls."""

    def __init__(self, rhs, tol, h0, record=False):
        self.rhs = rhs
        self.tol = tol
        self.h = h0
        self.record = record
        self.ts, self.ys, self.fs = [], [], []
        self.n_steps = 0
        self.n_rejected = 0

    def advance(self, t, y, t_target, f=None):
        """Integrate from ``t`` to exactly ``t_target``; returns ``(y, f)`` there."""
        if f is None:
            f = self.rhs(t, y)
        if self.record and not self.ts:
            self._keep(t, y, f)
        while t < t_target:
            if self.h <= 1e-13 * max(1.0, abs(t)):
                raise StiffnessError(f"step size underflow at t={t:.6g} (h={self.h:.3e})")
            remaining = t_target - t
            # stretch by up to 1% rather than leave a sliver before the target
            last = remaining <= 1.01 * self.h
            h = remaining if last else self.h
            k = [f]
            for i in range(1, 7):
                yi = y + h * sum(a * kj for a, kj in zip(_A[i], k) if a != 0.0)
                k.append(self.rhs(t + _C[i] * h, yi))
            y_new = yi  # stage 7 is evaluated at the 5th-order solution (FSAL)
            err_vec = h * sum(e * kj for e, kj in zip(_E, k) if e != 0.0)
            scale = self.tol * (1.0 + np.maximum(np.abs(y), np.abs(y_new)))
            err = float(np.max(np.abs(err_vec) / scale))
            if err <= 1.0:
                t = t_target if last else t + h
                y, f = y_new, k[6]
                self.n_steps += 1
                if self.record:
                    self._keep(t, y, f)
                factor = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
                # do not let a clipped final step shrink the carried step size
                if not (last and factor >= 1.0 and h < self.h):
                    self.h = h * factor
            else:
                self.n_rejected += 1
                self.h = h * max(0.2, 0.9 * err ** -0.2)
        return y, f

    def _keep(self, t, y, f):
        self.ts.append(t)
        self.ys.append(np.array(y, copy=True))
        self.fs.append(np.array(f, copy=True))

    def dense_output(self):
        return DenseOutput(self.ts, self.ys, self.fs)


def _initial_step(pulse, sp):
    return 0.05 * min(pulse.nu, 1.0 / max(sp.gamma_sigma, sp.gamma_xi))


def _check_tol(tol):
    if not 1e-12 <= tol <= 1e-4:
        raise ValueError(f"tol must lie in [1e-12, 1e-4], got {tol}")


class _FreePropagator:
    """Cache of ``expm(l_static h)`` keyed by the step length."""

    def __init__(self, parts):
        self.l0 = np.asarray(parts.l_static)
        self.cache = {}

    def __call__(self, h):
        key = round(h, 13)
        if key not in self.cache:
            self.cache[key] = expm(self.l0 * h)
        return self.cache[key]


def check_states(states, times, limit=INVARIANT_ABORT):
    """Vectorized ``check_state`` over a stack of samples."""
    adj = np.conj(np.swapaxes(states, 1, 2))
    herm = np.max(np.abs(states - adj), axis=(1, 2))
    trace = np.abs(np.einsum("tii->t", states) - 1.0)
    lam = np.linalg.eigvalsh(0.5 * (states + adj))[:, 0]
    bad = (herm > limit) | (trace > limit) | (lam < -limit) | ~np.isfinite(herm)
    if np.any(bad):
        i = int(np.argmax(bad))
        check_state(states[i], f" at t={times[i]:.6g}", limit)
        raise InvariantError(f"non-finite state at t={times[i]:.6g}")


def check_state(rho, where="", limit=INVARIANT_ABORT):
    """Raise InvariantError if ``rho`` is not a density matrix within ``limit``."""
    herm = float(np.max(np.abs(rho - ops.adjoint(rho))))
    trace = abs(np.trace(rho) - 1.0)
    lam = float(np.min(np.linalg.eigvalsh(0.5 * (rho + ops.adjoint(rho)))))
    if herm > limit or trace > limit or lam < -limit:
        raise InvariantError(
            f"density matrix invariants violated{where}: hermiticity {herm:.2e}, "
            f"trace error {trace:.2e}, min eigenvalue {lam:.2e}"
        )


@dataclass(frozen=True, eq=False)
class Trajectory:
    grid: TimeGrid
    states: np.ndarray = field(repr=False)
    parts: object = field(repr=False)
    pulse: object
    dense: DenseOutput = field(default=None, repr=False)
    n_steps: int = 0

    @property
    def times(self):
        return self.grid.samples

    def expectation(self, op):
        """Time series of Tr[op rho(t)]."""
        return np.einsum("ij,tji->t", np.asarray(op), self.states)

    def population(self, which):
        c = self.parts.emitter_operator(which)
        return np.real(self.expectation(ops.adjoint(c) @ c))

    def state_at(self, t):
        """State at an arbitrary time from the dense output."""
        if self.dense is None:
            raise ValueError("trajectory was built without dense output")
        return ops.devectorize(self.dense(t))

    def diagnostics(self):
        tr = np.einsum("tii->t", self.states)
        herm = np.max(np.abs(self.states - np.conj(np.swapaxes(self.states, 1, 2))))
        lam = min(float(np.min(np.linalg.eigvalsh(0.5 * (r + r.conj().T)))) for r in self.states)
        return {
            "max_trace_error": float(np.max(np.abs(tr - 1.0))),
            "max_hermiticity_error": float(herm),
            "min_eigenvalue": lam,
        }


def evolve(rho0, parts, pulse, grid, tol=DEFAULT_TOL, dense=False):
    """Integrate ``d rho/dt = L(t) rho`` from ``grid.t_start`` and sample on ``grid``.

    The trace is monitored but never renormalized. ``dense=True`` keeps the
    accepted steps for Hermite interpolation via ``Trajectory.state_at``.
    """
    _check_tol(tol)
    rho0 = np.asarray(rho0, dtype=complex)
    check_state(rho0, " in initial state")
    rhs = _Rhs(parts, pulse)
    stepper = _DormandPrince(rhs, tol, _initial_step(pulse, parts.params), record=dense)
    free = _FreePropagator(parts)
    t = grid.t_start
    y = ops.vectorize(rho0)
    f = None
    states = np.empty((grid.n_points, ops.DIM, ops.DIM), dtype=complex)
    states[0] = rho0
    for i, t_next in enumerate(grid.samples[1:], start=1):
        t_next = float(t_next)
        if not dense and rhs.quiet(t, t_next):
            y, f = free(t_next - t) @ y, None
        else:
            y, f = stepper.advance(t, y, t_next, f)
        t = t_next
        states[i] = ops.devectorize(y)
    check_states(states, grid.samples)
    states.setflags(write=False)
    return Trajectory(
        grid=grid,
        states=states,
        parts=parts,
        pulse=pulse,
        dense=stepper.dense_output() if dense else None,
        n_steps=stepper.n_steps,
    )


def propagate_operator(x0, parts, pulse, t_from, t_to, tol=DEFAULT_TOL):
    """Solve ``dX/dt = L(t) X`` from ``X(t_from) = x0`` and return ``X(t_to)``."""
    _check_tol(tol)
    if t_to < t_from:
        raise ValueError("propagate_operator requires t_from <= t_to")
    x0 = np.asarray(x0, dtype=complex)
    if t_to == t_from:
        return x0.copy()
    stepper = _DormandPrince(_Rhs(parts, pulse), tol, _initial_step(pulse, parts.params))
    y, _ = stepper.advance(float(t_from), ops.vectorize(x0), float(t_to))
    return ops.devectorize(y)


def step_propagators(parts, pulse, grid, tol=DEFAULT_TOL):
    """Liouville-space propagators ``U_k = Phi(t_{k+1}, t_k)`` for every grid interval.

    Intervals where the drive stays below ``QUIET_DRIVE`` use the exact
    free propagator ``expm(l_static h)``.
    """
    _check_tol(tol)
    rhs = _Rhs(parts, pulse)
    stepper = _DormandPrince(rhs, tol, _initial_step(pulse, parts.params))
    ts = grid.samples
    out = np.empty((ts.size - 1, ops.LDIM, ops.LDIM), dtype=complex)
    eye = np.eye(ops.LDIM, dtype=complex)
    free = _FreePropagator(parts)
    for k in range(ts.size - 1):
        a, b = float(ts[k]), float(ts[k + 1])
        if rhs.quiet(a, b):
            out[k] = free(b - a)
        else:
            out[k], _ = stepper.advance(a, eye, b)
    return out


def states_from_propagators(rho0, props):
    """Chain step propagators from ``rho0``; returns states of shape (N, 4, 4)."""
    y = ops.vectorize(rho0)
    states = np.empty((props.shape[0] + 1, ops.DIM, ops.DIM), dtype=complex)
    states[0] = rho0
    for k, u in enumerate(props):
        y = u @ y
        states[k + 1] = ops.devectorize(y)
    return states


def integrate_intensity(traj, which):
    """Time-integrated intensity of ``<c^+ c>`` over the trajectory (Simpson rule)."""
    n = traj.population(which)
    peak = float(np.max(np.abs(n)))
    if peak > 0 and abs(n[-1]) > TAIL_RATIO * peak:
        raise TruncatedTrajectoryError(
            f"{which} intensity at t_end is {abs(n[-1]) / peak:.2e} of its peak; extend the grid"
        )
    return float(simpson(n, x=traj.times))
