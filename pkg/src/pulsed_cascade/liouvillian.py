"""Cascaded master-equation generator and its Lindblad-form decomposition.

Everything is written in the rotating frame of the laser with
``gamma_sigma = 1`` as the natural unit. The generator is affine in the
drive, ``L(t) = l_static + Omega(t) * l_drive``, so it is assembled once per
parameter set and evaluated cheaply inside the integrator.
"""
from dataclasses import dataclass, field

import numpy as np

from . import operators as ops

EMITTERS = ("source", "target", "flux")

DECOMPOSITION_TOL = 1e-12


@dataclass(frozen=True)
class SystemParams:
    omega_sigma: float = 0.0
    omega_xi: float = 0.0
    omega_L: float = 0.0
    gamma_sigma: float = 1.0
    gamma_xi: float = 1.0
    chi1: float = 1.0
    chi2: float = 0.5

    def __post_init__(self):
        if not (self.gamma_sigma > 0 and self.gamma_xi > 0):
            raise ValueError("decay rates must be positive")
        for name in ("chi1", "chi2"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")

    @property
    def delta_sigma(self):
        return self.omega_sigma - self.omega_L

    @property
    def delta_xi(self):
        return self.omega_xi - self.omega_L

    @property
    def coupling(self):
        """Cascaded coupling strength sqrt(chi1 chi2 gamma_sigma gamma_xi)."""
        return np.sqrt(self.chi1 * self.chi2 * self.gamma_sigma * self.gamma_xi)

    @property
    def gamma_min(self):
        return min(self.gamma_sigma, self.gamma_xi)

    def replace(self, **changes):
        values = dict(self.__dict__)
        values.update(changes)
        return SystemParams(**values)


@dataclass(frozen=True, eq=False)
class LiouvillianParts:
    """Affine pieces of the generator plus the emission jump operators."""

    params: SystemParams
    l_static: np.ndarray = field(repr=False)
    l_drive: np.ndarray = field(repr=False)
    jump_source: np.ndarray = field(repr=False)
    jump_target: np.ndarray = field(repr=False)
    jump_flux: np.ndarray = field(repr=False)
    cascaded: bool = True

    def generator(self, omega):
        return self.l_static + omega * self.l_drive

    def emitter_operator(self, which):
        """Field operator ``c`` observed for an emitter selector.

        ``source``/``target``/``flux`` give sigma, xi and J_phi; the
        ``jump_source``/``jump_target`` selectors give J_sigma and J_xi.
        """
        table = {
            "source": ops.sigma_source(),
            "target": ops.xi_target(),
            "flux": self.jump_flux,
            "jump_source": self.jump_source,
            "jump_target": self.jump_target,
        }
        try:
            return table[which]
        except KeyError:
            raise ValueError(f"unknown emitter {which!r}; expected one of {sorted(table)}") from None


def _drive_hamiltonian():
    s = ops.sigma_source()
    return 0.5 * (s + ops.adjoint(s))


def _static_hamiltonian(sp):
    s, x = ops.sigma_source(), ops.xi_target()
    return sp.delta_sigma * ops.adjoint(s) @ s + sp.delta_xi * ops.adjoint(x) @ x


def _lindblad_term(c):
    # superoperator of L_c(rho) = 2 c rho c^+ - c^+ c rho - rho c^+ c
    return 2.0 * ops.dissipator(c)


def master_equation_generator(sp):
    """Static generator assembled term by term as in the cascaded master equation.

    ``d rho/dt = i[rho, H] + g_s/2 L_s + g_x/2 L_x
    - k ([x^+, s rho] + [rho s^+, x])`` with ``k`` the cascaded coupling.
    """
    s, x = ops.sigma_source(), ops.xi_target()
    sd, xd = ops.adjoint(s), ops.adjoint(x)
    k = sp.coupling
    h = _static_hamiltonian(sp)
    # i[rho, H] = -i[H, rho]
    gen = ops.hamiltonian_super(h)
    gen = gen + 0.5 * sp.gamma_sigma * _lindblad_term(s) + 0.5 * sp.gamma_xi * _lindblad_term(x)
    # [x^+, s rho] = x^+ s rho - s rho x^+
    casc = ops.left(xd @ s) - ops.sandwich(s, xd)
    # [rho s^+, x] = rho s^+ x - x rho s^+
    casc = casc + ops.right(sd @ x) - ops.sandwich(x, sd)
    return gen - k * casc


def jump_operators(sp):
    s, x = ops.sigma_source(), ops.xi_target()
    j_s = np.sqrt((1.0 - sp.chi1) * sp.gamma_sigma) * s
    j_x = np.sqrt((1.0 - sp.chi2) * sp.gamma_xi) * x
    j_f = np.sqrt(sp.chi1 * sp.gamma_sigma) * s + np.sqrt(sp.chi2 * sp.gamma_xi) * x
    return j_s, j_x, j_f


def cascade_hamiltonian(sp):
    """Coherent exchange term left over when the cascade is put in Lindblad form."""
    s, x = ops.sigma_source(), ops.xi_target()
    return 0.5j * sp.coupling * (ops.adjoint(s) @ x - ops.adjoint(x) @ s)


def lindblad_form_generator(sp):
    """Static generator rebuilt from the jump operators J_sigma, J_xi, J_phi."""
    h = _static_hamiltonian(sp) + cascade_hamiltonian(sp)
    gen = ops.hamiltonian_super(h)
    for j in jump_operators(sp):
        gen = gen + ops.dissipator(j)
    return gen


def drive_generator():
    return ops.hamiltonian_super(_drive_hamiltonian())


def build_cascaded(sp):
    """Assemble the full cascaded generator and check it against its Lindblad form."""
    l_static = master_equation_generator(sp)
    deviation = np.max(np.abs(l_static - lindblad_form_generator(sp)))
    if deviation > DECOMPOSITION_TOL:
        raise AssertionError(f"Lindblad decomposition mismatch: {deviation:.3e}")
    j_s, j_x, j_f = jump_operators(sp)
    return LiouvillianParts(
        params=sp,
        l_static=_readonly(l_static),
        l_drive=_readonly(drive_generator()),
        jump_source=_readonly(j_s),
        jump_target=_readonly(j_x),
        jump_flux=_readonly(j_f),
        cascaded=True,
    )


def build_source_only(sp):
    """Driven source emitter alone; the target factor stays idle."""
    s = ops.sigma_source()
    h = sp.delta_sigma * ops.adjoint(s) @ s
    l_static = ops.hamiltonian_super(h) + 0.5 * sp.gamma_sigma * _lindblad_term(s)
    zero = np.zeros_like(s)
    return LiouvillianParts(
        params=sp,
        l_static=_readonly(l_static),
        l_drive=_readonly(drive_generator()),
        jump_source=_readonly(np.sqrt(sp.gamma_sigma) * s),
        jump_target=_readonly(zero),
        jump_flux=_readonly(zero),
        cascaded=False,
    )


def _readonly(a):
    a = np.ascontiguousarray(a, dtype=complex)
    a.setflags(write=False)
    return a


def expectation(rho, op):
    return complex(np.trace(op @ rho))


def effective_photon_flux_population(rho, parts):
    """Photon-flux occupation Tr[rho J_phi^+ J_phi]."""
    j = parts.jump_flux
    return float(np.real(np.trace(rho @ ops.adjoint(j) @ j)))


def number_operator(parts, which):
    c = parts.emitter_operator(which)
    return ops.adjoint(c) @ c


def partial_trace_target(rho):
    """Reduced 2x2 state of the source emitter."""
    r = np.asarray(rho).reshape(2, 2, 2, 2)
    return np.einsum("ajbj->ab", r)
