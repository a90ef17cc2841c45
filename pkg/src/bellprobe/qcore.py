"""Dense linear algebra for 1-, 2- and 4-qubit objects.

Conventions used everywhere in the package:

* Qubit 0 is the leftmost tensor factor, so ``tensor(a, b)`` acts with ``a`` on
  qubit 0 and ``b`` on qubit 1, and basis state ``|q0 q1 ...>`` has index
  ``sum(q_k * 2**(n-1-k))`` (row-major over the factors, i.e. ``np.kron``).
* Operators and states are plain complex ``numpy`` arrays. Dimensions never
  exceed 16 so everything is dense.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import reduce

import numpy as np

# structural invariants (hermiticity, unitarity, trace, PSD)
STRUCT_TOL = 1e-10
# analytic round trips (closed form vs numerics, estimator vs truth)
ROUNDTRIP_TOL = 1e-9

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (I2, SX, SY, SZ)
PAULI_LABELS = ("I", "X", "Y", "Z")


def tensor(*ops) -> np.ndarray:
    """Kronecker product, leftmost argument on qubit 0."""
    return reduce(np.kron, [np.asarray(op, dtype=complex) for op in ops])


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(m).T


def is_hermitian(m, tol: float = STRUCT_TOL) -> bool:
    m = np.asarray(m)
    return m.ndim == 2 and m.shape[0] == m.shape[1] and np.allclose(m, dagger(m), atol=tol, rtol=0)


def is_unitary(m, tol: float = STRUCT_TOL) -> bool:
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    return np.allclose(dagger(m) @ m, np.eye(m.shape[0]), atol=tol, rtol=0)


def is_psd(m, tol: float = STRUCT_TOL) -> bool:
    if not is_hermitian(m, tol):
        return False
    herm = 0.5 * (m + dagger(m))
    return bool(np.linalg.eigvalsh(herm).min() >= -tol)


def is_density_matrix(rho, tol: float = STRUCT_TOL) -> bool:
    return is_psd(rho, tol) and abs(np.trace(rho) - 1) <= tol


def check_density_matrix(rho, tol: float = STRUCT_TOL) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if not is_density_matrix(rho, tol):
        raise ValueError("not a valid density matrix (Hermitian, unit trace, PSD)")
    return rho


def ket(*bits: int) -> np.ndarray:
    v = np.zeros(2 ** len(bits), dtype=complex)
    v[int("".join(str(b) for b in bits), 2)] = 1
    return v


def projector(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, np.conj(psi))


def global_phase_fidelity(u, v) -> float:
    """|tr(U^dag V)|/d; equals 1 iff U and V agree up to a global phase."""
    u = np.asarray(u)
    return float(abs(np.trace(dagger(u) @ np.asarray(v))) / u.shape[0])


def partial_trace(rho, keep, dims) -> np.ndarray:
    """Reduced state on the factors listed in ``keep``.

    ``dims`` gives the dimension of each tensor factor; their product must
    equal ``rho.shape[0]``. Kept factors stay in ascending order. Keeping no
    factor returns the 1x1 matrix ``[[tr rho]]``.
    """
    rho = np.asarray(rho, dtype=complex)
    dims = [int(d) for d in dims]
    n = len(dims)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1] or int(np.prod(dims)) != rho.shape[0]:
        raise ValueError(f"dims {dims} do not match operator of shape {rho.shape}")
    keep = sorted(set(keep))
    if any(k < 0 or k >= n for k in keep):
        raise ValueError(f"subsystem index out of range in {keep}")
    traced = [k for k in range(n) if k not in keep]
    t = rho.reshape(dims + dims)
    # trace out from the highest index down so remaining axis numbers stay valid
    for k in sorted(traced, reverse=True):
        nk = t.ndim // 2
        t = np.trace(t, axis1=k, axis2=k + nk)
    dk = int(np.prod([dims[k] for k in keep])) if keep else 1
    return t.reshape(dk, dk)


def apply_to_qubits(op, rho, targets, n_qubits: int) -> np.ndarray:
    """Conjugate ``rho`` by ``op`` acting on the listed qubits: op rho op^dag."""
    full = embed(op, targets, n_qubits)
    return full @ rho @ dagger(full)


def embed(op, targets, n_qubits: int) -> np.ndarray:
    """Lift an operator on ``targets`` (in that order) to the full register."""
    op = np.asarray(op, dtype=complex)
    targets = list(targets)
    k = len(targets)
    if op.shape != (2**k, 2**k):
        raise ValueError(f"operator shape {op.shape} does not match {k} target qubits")
    if sorted(set(targets)) != sorted(targets) or any(q < 0 or q >= n_qubits for q in targets):
        raise ValueError(f"bad target list {targets} for {n_qubits} qubits")
    rest = [q for q in range(n_qubits) if q not in targets]
    # build op (x) I on order targets+rest, then permute axes back to 0..n-1
    big = np.kron(op, np.eye(2 ** len(rest), dtype=complex))
    order = targets + rest
    inv = np.argsort(order)
    t = big.reshape([2] * (2 * n_qubits))
    t = t.transpose(list(inv) + [n_qubits + i for i in inv])
    return t.reshape(2**n_qubits, 2**n_qubits)


def matexp_hermitian(h, t: float, sign: int = 1) -> np.ndarray:
    """exp(-i * sign * t * H) for Hermitian H, via the spectral decomposition."""
    h = np.asarray(h, dtype=complex)
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    if not is_hermitian(h):
        raise ValueError("matexp_hermitian requires a Hermitian generator")
    w, v = np.linalg.eigh(0.5 * (h + dagger(h)))
    return (v * np.exp(-1j * sign * t * w)) @ dagger(v)


@dataclass(frozen=True)
class PauliBasis:
    """Ordered Pauli product basis {I, X, Y, Z}^(x n).

    Index of sigma_i (x) sigma_j is ``4*i + j``; for two qubits the "diagonal"
    products XX, YY, ZZ sit at 5, 10, 15.
    """

    n_qubits: int
    operators: tuple = field(init=False, repr=False, compare=False)
    labels: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.n_qubits not in (1, 2):
            raise ValueError("PauliBasis supports 1 or 2 qubits")
        idx = list(itertools.product(range(4), repeat=self.n_qubits))
        ops = tuple(tensor(*[PAULIS[i] for i in combo]) for combo in idx)
        labels = tuple("".join(PAULI_LABELS[i] for i in combo) for combo in idx)
        for op in ops:
            op.setflags(write=False)
        object.__setattr__(self, "operators", ops)
        object.__setattr__(self, "labels", labels)

    @property
    def dim(self) -> int:
        return 2**self.n_qubits

    def __len__(self):
        return len(self.operators)

    def __getitem__(self, m):
        return self.operators[m]

    def index(self, label: str) -> int:
        return self.labels.index(label)

    def gram(self) -> np.ndarray:
        """Matrix of tr(sigma_m^dag sigma_n); equals d * identity."""
        ops = np.array(self.operators)
        return np.einsum("mab,nab->mn", np.conj(ops), ops)

    def coefficients(self, op) -> np.ndarray:
        """Expansion a_m = tr(sigma_m^dag op)/d."""
        ops = np.array(self.operators)
        return np.einsum("mab,ab->m", np.conj(ops), np.asarray(op, dtype=complex)) / self.dim


SINGLE_QUBIT_BASIS = PauliBasis(1)
TWO_QUBIT_BASIS = PauliBasis(2)


_R2 = 1 / np.sqrt(2)
# Ordered so that index k is the image of Phi+ under sigma_k (x) I, up to phase:
# 0 <-> Phi+ <-> I, 1 <-> Psi+ <-> X, 2 <-> Psi- <-> Y, 3 <-> Phi- <-> Z.
BELL_LABELS = ("Phi+", "Psi+", "Psi-", "Phi-")
BELL_STATES = (
    _R2 * (ket(0, 0) + ket(1, 1)),
    _R2 * (ket(0, 1) + ket(1, 0)),
    _R2 * (ket(0, 1) - ket(1, 0)),
    _R2 * (ket(0, 0) - ket(1, 1)),
)
BELL_PROJECTORS = tuple(projector(b) for b in BELL_STATES)
for _v in BELL_STATES + BELL_PROJECTORS:
    _v.setflags(write=False)
