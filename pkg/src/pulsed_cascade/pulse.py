"""Gaussian drive envelope parameterized by area, center and FWHM."""
from dataclasses import dataclass

import numpy as np

FWHM_PER_SIGMA = 2.0 * np.sqrt(2.0 * np.log(2.0))


@dataclass(frozen=True)
class PulseParams:
    """Gaussian pulse.

    ``area`` is the integrated Rabi area (rad), ``t0`` the center and ``fwhm``
    the full width at half maximum, both in units of ``1/gamma_sigma``.
    """

    area: float = np.pi
    t0: float = 0.0
    fwhm: float = 1.0

    def __post_init__(self):
        if not self.area >= 0:
            raise ValueError(f"pulse area must be >= 0, got {self.area}")
        if not self.fwhm > 0:
            raise ValueError(f"pulse fwhm must be > 0, got {self.fwhm}")

    @property
    def nu(self):
        """Standard deviation of the Gaussian."""
        return self.fwhm / FWHM_PER_SIGMA

    @property
    def peak(self):
        return self.area / np.sqrt(2.0 * np.pi * self.nu**2)

    def replace(self, **changes):
        values = {"area": self.area, "t0": self.t0, "fwhm": self.fwhm}
        values.update(changes)
        return PulseParams(**values)


def envelope(t, p):
    """Rabi frequency Omega(t) of the pulse; accepts scalars or arrays."""
    x = (np.asarray(t, dtype=float) - p.t0) / p.nu
    return p.peak * np.exp(-0.5 * x * x)


def unit_envelope(t, p):
    """Envelope per unit area, so that ``envelope = area * unit_envelope``."""
    x = (np.asarray(t, dtype=float) - p.t0) / p.nu
    return np.exp(-0.5 * x * x) / np.sqrt(2.0 * np.pi * p.nu**2)


def support_window(p, tail_tol=1e-8):
    """Interval outside which the envelope is below ``tail_tol * peak``."""
    if not 0.0 < tail_tol <= 1.0:
        raise ValueError("tail_tol must lie in (0, 1]")
    half = p.nu * np.sqrt(2.0 * np.log(1.0 / tail_tol))
    return p.t0 - half, p.t0 + half


def default_start(p, n_sigma=5.0):
    """Integration start time, ``n_sigma`` standard deviations before the center."""
    return p.t0 - n_sigma * p.nu
