"""Joint Hilbert-space operators and Liouville-space algebra for two 2LSs.

Basis ordering is ``|g_s g_t>, |g_s e_t>, |e_s g_t>, |e_s e_t>`` (source
index varies slowest, i.e. ``kron(source, target)``).

Vectorization stacks columns: ``vec(X) = X.reshape(-1, order="F")``, so that
``vec(A @ X @ B) == kron(B.T, A) @ vec(X)``.
"""
import numpy as np

DIM = 4
LDIM = DIM * DIM

_LOWER = np.array([[0, 1], [0, 0]], dtype=complex)
_EYE2 = np.eye(2, dtype=complex)


def _frozen(m):
    m = np.ascontiguousarray(m, dtype=complex)
    m.setflags(write=False)
    return m


def adjoint(m):
    return np.conj(m).T


def commutator(a, b):
    return a @ b - b @ a


def anticommutator(a, b):
    return a @ b + b @ a


def sigma_source():
    """Lowering operator of the source emitter, ``lower (x) 1``."""
    return _frozen(np.kron(_LOWER, _EYE2))


def xi_target():
    """Lowering operator of the target emitter, ``1 (x) lower``."""
    return _frozen(np.kron(_EYE2, _LOWER))


def identity():
    return _frozen(np.eye(DIM))


def ground_state():
    """Density matrix of the joint ground state ``|g g><g g|``."""
    rho = np.zeros((DIM, DIM), dtype=complex)
    rho[0, 0] = 1.0
    return rho


def basis_projector(source_excited, target_excited):
    k = 2 * int(bool(source_excited)) + int(bool(target_excited))
    rho = np.zeros((DIM, DIM), dtype=complex)
    rho[k, k] = 1.0
    return rho


def vectorize(m):
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    return m.reshape(-1, order="F").astype(complex)


def devectorize(v):
    v = np.asarray(v)
    n = int(round(np.sqrt(v.shape[0])))
    if v.ndim != 1 or n * n != v.shape[0]:
        raise ValueError(f"vector of length {v.shape[0]} is not a vectorized square matrix")
    return v.reshape((n, n), order="F")


def left(a):
    """Superoperator of ``X -> a @ X``."""
    return np.kron(np.eye(a.shape[0]), a)


def right(b):
    """Superoperator of ``X -> X @ b``."""
    return np.kron(b.T, np.eye(b.shape[0]))


def sandwich(a, b):
    """Superoperator of ``X -> a @ X @ b``."""
    return np.kron(b.T, a)


def hamiltonian_super(h):
    """Superoperator of ``X -> -i [h, X]``."""
    return -1j * (left(h) - right(h))


def dissipator(j):
    """Superoperator of ``D[j] X = j X j^+ - (j^+ j X + X j^+ j) / 2``."""
    jd = adjoint(j)
    jdj = jd @ j
    return sandwich(j, jd) - 0.5 * (left(jdj) + right(jdj))


def trace_functional(dim=DIM):
    """Row vector ``t`` with ``t @ vec(X) == Tr X``."""
    return vectorize(np.eye(dim)).conj()


def expectation_row(op):
    """Row vector ``r`` with ``r @ vec(rho) == Tr[op @ rho]``."""
    # Tr[op rho] = sum_ij op_ji rho_ij = vec(op^T) . vec(rho)
    return vectorize(np.asarray(op).T)
