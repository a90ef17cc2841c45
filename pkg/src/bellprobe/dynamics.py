"""Unitaries, relaxation channels, chi matrices, and the brute-force process oracle.

The chi matrix of a channel E is defined over the unnormalised Pauli basis
{I, X, Y, Z}^(x n):

    E(rho) = sum_mn chi_mn sigma_m rho sigma_n^dag,

so a trace-preserving map has sum_m chi_mm = 1 and a unitary U = sum_m a_m sigma_m
gives chi_mn = a_m conj(a_n).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import qcore
from .errors import ParameterError
from .qcore import (
    BELL_PROJECTORS,
    PAULIS,
    SINGLE_QUBIT_BASIS,
    STRUCT_TOL,
    TWO_QUBIT_BASIS,
    PauliBasis,
    dagger,
)

EXCHANGE_CLASSES = ("isotropic", "XY", "XXZ", "XYZ")


@dataclass(frozen=True)
class SingleQubitHamiltonian:
    """H = J . sigma with coupling vector J (angular frequency, hbar = 1)."""

    J: tuple

    def __post_init__(self):
        j = tuple(float(x) for x in self.J)
        if len(j) != 3 or not all(math.isfinite(x) for x in j):
            raise ParameterError(f"coupling vector must be 3 finite reals, got {self.J!r}")
        object.__setattr__(self, "J", j)

    @property
    def magnitude(self) -> float:
        return float(np.linalg.norm(self.J))

    @property
    def direction(self):
        """Unit vector J/|J|, or None when J = 0."""
        mag = self.magnitude
        if mag == 0:
            return None
        return tuple(x / mag for x in self.J)

    def matrix(self) -> np.ndarray:
        return sum(j * s for j, s in zip(self.J, PAULIS[1:]))


def classify_exchange(jx, jy, jz, tol=1e-12) -> str:
    def eq(a, b):
        return abs(a - b) <= tol * max(1.0, abs(a), abs(b))

    if eq(jx, jy) and eq(jy, jz):
        return "isotropic"
    if eq(jx, jy) and eq(jz, 0.0):
        return "XY"
    if eq(jx, jy):
        return "XXZ"
    return "XYZ"


@dataclass(frozen=True)
class ExchangeHamiltonian:
    """H_ex = Jx XX + Jy YY + Jz ZZ on two qubits.

    ``kind`` is inferred when omitted. An explicit tag must agree with the
    couplings, except that ``XYZ`` is accepted for any couplings.
    """

    Jx: float
    Jy: float
    Jz: float
    kind: str | None = None

    def __post_init__(self):
        for name in ("Jx", "Jy", "Jz"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise ParameterError(f"{name} must be finite")
            object.__setattr__(self, name, v)
        inferred = classify_exchange(self.Jx, self.Jy, self.Jz)
        if self.kind is None:
            object.__setattr__(self, "kind", inferred)
        elif self.kind not in EXCHANGE_CLASSES:
            raise ParameterError(f"unknown exchange class {self.kind!r}")
        elif self.kind != "XYZ" and self.kind != inferred:
            raise ParameterError(
                f"class tag {self.kind!r} inconsistent with couplings "
                f"({self.Jx}, {self.Jy}, {self.Jz}), which are {inferred!r}"
            )

    @property
    def couplings(self):
        return (self.Jx, self.Jy, self.Jz)

    def matrix(self) -> np.ndarray:
        return sum(j * np.kron(s, s) for j, s in zip(self.couplings, PAULIS[1:]))

    def bell_energies(self):
        """Eigenvalues on (Phi+, Psi+, Psi-, Phi-), the fixed Bell order."""
        jx, jy, jz = self.couplings
        return (jx - jy + jz, jx + jy - jz, -jx - jy - jz, -jx + jy + jz)


@dataclass(frozen=True)
class RelaxationParams:
    """Homogenisation toward population ``a_inf`` of |0>.

    T1 may be ``math.inf`` (pure dephasing). Physicality requires T2 <= 2*T1.
    """

    T1: float
    T2: float
    a_inf: float = 0.5

    def __post_init__(self):
        t1, t2, a = float(self.T1), float(self.T2), float(self.a_inf)
        if not t1 > 0 or not t2 > 0 or not math.isfinite(t2):
            raise ParameterError(f"relaxation times must be positive, got T1={t1}, T2={t2}")
        if not 0.0 <= a <= 1.0:
            raise ParameterError(f"a_inf must lie in [0, 1], got {a}")
        if t2 > 2 * t1 * (1 + 1e-12):
            raise ParameterError(f"unphysical relaxation: T2={t2} > 2*T1={2 * t1} (violates T2 <= 2*T1)")
        object.__setattr__(self, "T1", t1)
        object.__setattr__(self, "T2", t2)
        object.__setattr__(self, "a_inf", a)


@dataclass(frozen=True)
class ChiMatrix:
    basis: PauliBasis
    entries: np.ndarray = field(repr=False)

    def __post_init__(self):
        e = np.array(self.entries, dtype=complex)
        if e.shape != (len(self.basis), len(self.basis)):
            raise ValueError(f"chi of shape {e.shape} does not match basis of size {len(self.basis)}")
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)

    def __getitem__(self, idx):
        return self.entries[idx]

    @property
    def diagonal(self) -> np.ndarray:
        return np.real(np.diag(self.entries))

    def trace(self) -> float:
        return float(np.real(np.trace(self.entries)))

    def is_hermitian(self, tol=STRUCT_TOL) -> bool:
        return qcore.is_hermitian(self.entries, tol)

    def is_psd(self, tol=STRUCT_TOL) -> bool:
        return qcore.is_psd(self.entries, tol)

    def eigenvalues(self) -> np.ndarray:
        """Descending eigenvalues of the Hermitian part."""
        e = self.entries
        return np.sort(np.linalg.eigvalsh(0.5 * (e + dagger(e))))[::-1]

    def apply(self, rho) -> np.ndarray:
        ops = self.basis.operators
        out = np.zeros_like(np.asarray(rho, dtype=complex))
        for m, n in zip(*np.nonzero(np.abs(self.entries) > 0)):
            out += self.entries[m, n] * ops[m] @ rho @ dagger(ops[n])
        return out


@dataclass(frozen=True)
class Channel:
    """A CPTP map given by Kraus operators acting on ``dim``-dimensional systems.

    ``kind`` is one of ``unitary``, ``relaxation``, ``composed``; ``params``
    keeps the generating parameters for bookkeeping.
    """

    kind: str
    kraus: tuple = field(repr=False)
    params: object = None

    def __post_init__(self):
        ks = tuple(np.array(k, dtype=complex) for k in self.kraus)
        if not ks:
            raise ValueError("channel needs at least one Kraus operator")
        d = ks[0].shape[0]
        if any(k.shape != (d, d) for k in ks):
            raise ValueError("Kraus operators must share one square shape")
        for k in ks:
            k.setflags(write=False)
        object.__setattr__(self, "kraus", ks)

    @property
    def dim(self) -> int:
        return self.kraus[0].shape[0]

    @property
    def n_qubits(self) -> int:
        return int(round(math.log2(self.dim)))

    def apply(self, rho) -> np.ndarray:
        rho = np.asarray(rho, dtype=complex)
        return sum(k @ rho @ dagger(k) for k in self.kraus)

    def apply_to(self, rho, targets, n_qubits: int) -> np.ndarray:
        """Act on the listed qubits of an ``n_qubits`` register, identity elsewhere."""
        rho = np.asarray(rho, dtype=complex)
        out = np.zeros_like(rho)
        for k in self.kraus:
            big = qcore.embed(k, targets, n_qubits)
            out += big @ rho @ dagger(big)
        return out

    def choi(self) -> np.ndarray:
        """sum_ij |i><j| (x) E(|i><j|)."""
        d = self.dim
        c = np.zeros((d * d, d * d), dtype=complex)
        for i in range(d):
            for j in range(d):
                unit = np.zeros((d, d), dtype=complex)
                unit[i, j] = 1
                c += np.kron(unit, self.apply(unit))
        return c

    def is_completely_positive(self, tol=STRUCT_TOL) -> bool:
        return qcore.is_psd(self.choi(), tol)

    def is_trace_preserving(self, tol=STRUCT_TOL) -> bool:
        s = sum(dagger(k) @ k for k in self.kraus)
        return np.allclose(s, np.eye(self.dim), atol=tol, rtol=0)

    def then(self, other: "Channel") -> "Channel":
        """Apply ``self`` first, then ``other``."""
        if other.dim != self.dim:
            raise ValueError("cannot compose channels of different dimension")
        ks = [b @ a for a in self.kraus for b in other.kraus]
        return Channel("composed", tuple(ks), (self.params, other.params))


def single_qubit_unitary(h: SingleQubitHamiltonian, t: float) -> np.ndarray:
    """cos(Jt) I - i sin(Jt) (J_hat . sigma); exactly I for J = 0."""
    J = h.magnitude
    if J == 0:
        return np.eye(2, dtype=complex)
    n = h.direction
    gen = sum(x * s for x, s in zip(n, PAULIS[1:]))
    return math.cos(J * t) * np.eye(2, dtype=complex) - 1j * math.sin(J * t) * gen


def exchange_unitary(h: ExchangeHamiltonian, t: float) -> np.ndarray:
    """exp(-i t H_ex) assembled from its Bell-basis eigendecomposition."""
    return sum(np.exp(-1j * e * t) * p for e, p in zip(h.bell_energies(), BELL_PROJECTORS))


def chi_from_unitary(u, basis: PauliBasis | None = None) -> ChiMatrix:
    u = np.asarray(u, dtype=complex)
    if basis is None:
        basis = SINGLE_QUBIT_BASIS if u.shape[0] == 2 else TWO_QUBIT_BASIS
    if u.shape != (basis.dim, basis.dim):
        raise ValueError(f"unitary of shape {u.shape} does not match basis dimension {basis.dim}")
    if not qcore.is_unitary(u):
        raise ValueError("chi_from_unitary requires a unitary input")
    a = basis.coefficients(u)
    return ChiMatrix(basis, np.outer(a, np.conj(a)))


def unitary_channel(u, params=None) -> Channel:
    u = np.asarray(u, dtype=complex)
    if not qcore.is_unitary(u):
        raise ValueError("unitary_channel requires a unitary input")
    return Channel("unitary", (u,), params)


def hamiltonian_channel(h, t: float) -> Channel:
    """Channel rho -> U rho U^dag for a single-qubit or exchange Hamiltonian."""
    if isinstance(h, SingleQubitHamiltonian):
        u = single_qubit_unitary(h, t)
    elif isinstance(h, ExchangeHamiltonian):
        u = exchange_unitary(h, t)
    else:
        raise TypeError(f"unsupported Hamiltonian type {type(h).__name__}")
    return unitary_channel(u, (h, t))


def identity_channel(n_qubits: int = 1) -> Channel:
    return Channel("unitary", (np.eye(2**n_qubits, dtype=complex),), None)


def relaxation_factors(p: RelaxationParams, t: float):
    """(gamma, lambda): amplitude-damping strength and residual dephasing factor.

    Amplitude damping alone shrinks coherences by sqrt(1 - gamma) =
    exp(-t/(2 T1)); the extra dephasing factor lambda brings the total to
    exp(-t/T2).
    """
    if t < 0:
        raise ParameterError("relaxation time t must be non-negative")
    gamma = -math.expm1(-t / p.T1)
    lam = math.exp(-t / p.T2 + t / (2 * p.T1))
    if lam > 1 + 1e-12:
        raise ParameterError(f"unphysical dephasing: T2={p.T2} > 2*T1={2 * p.T1}")
    return gamma, min(lam, 1.0)


def relaxation_kraus(p: RelaxationParams, t: float):
    """Generalised amplitude damping toward a_inf followed by pure dephasing."""
    gamma, lam = relaxation_factors(p, t)
    a = p.a_inf
    sg, sk = math.sqrt(gamma), math.sqrt(1 - gamma)
    gad = [
        math.sqrt(a) * np.array([[1, 0], [0, sk]], dtype=complex),
        math.sqrt(a) * np.array([[0, sg], [0, 0]], dtype=complex),
        math.sqrt(1 - a) * np.array([[sk, 0], [0, 1]], dtype=complex),
        math.sqrt(1 - a) * np.array([[0, 0], [sg, 0]], dtype=complex),
    ]
    deph = [math.sqrt((1 + lam) / 2) * PAULIS[0], math.sqrt((1 - lam) / 2) * PAULIS[3]]
    return [d @ g for g in gad for d in deph]


def relaxation_channel(p: RelaxationParams, t: float) -> Channel:
    return Channel("relaxation", tuple(relaxation_kraus(p, t)), (p, t))


def relaxation_apply(rho, p: RelaxationParams, t: float, target: int = 0) -> np.ndarray:
    """Relax qubit ``target`` of ``rho`` for time ``t``; other qubits untouched."""
    rho = qcore.check_density_matrix(rho)
    n = int(round(math.log2(rho.shape[0])))
    if 2**n != rho.shape[0] or not 0 <= target < n:
        raise ValueError(f"target {target} invalid for a {rho.shape[0]}-dimensional state")
    return relaxation_channel(p, t).apply_to(rho, [target], n)


def relaxation_chi_diagonal(p: RelaxationParams, t: float) -> np.ndarray:
    """Closed-form (chi_00, chi_11, chi_22, chi_33) with decaying exponentials."""
    e1, e2 = math.exp(-t / p.T1), math.exp(-t / p.T2)
    return np.array([(1 + e1 + 2 * e2) / 4, (1 - e1) / 4, (1 - e1) / 4, (1 + e1 - 2 * e2) / 4])


@lru_cache(maxsize=None)
def _chi_design(n_qubits: int) -> np.ndarray:
    # column (m, n) holds vec(sigma_m X sigma_n^dag) as a map on row-major vec(X)
    basis = PauliBasis(n_qubits)
    ops = basis.operators
    cols = [np.kron(ops[m], np.conj(ops[n])).ravel() for m in range(len(ops)) for n in range(len(ops))]
    return np.array(cols).T


def process_oracle(channel: Channel, basis: PauliBasis | None = None) -> ChiMatrix:
    """Reconstruct chi by pushing every matrix unit |i><j| through the channel.

    The resulting superoperator S (row-major vectorisation) is matched to
    sum_mn chi_mn sigma_m (x) conj(sigma_n) by a dense linear solve. This path
    never touches Pauli expansions of Kraus operators, so it is an independent
    check on every closed-form chi used elsewhere.
    """
    if basis is None:
        basis = PauliBasis(channel.n_qubits)
    d = basis.dim
    if channel.dim != d:
        raise ValueError(f"channel dimension {channel.dim} does not match basis dimension {d}")
    s = np.zeros((d * d, d * d), dtype=complex)
    for i in range(d):
        for j in range(d):
            unit = np.zeros((d, d), dtype=complex)
            unit[i, j] = 1
            s[:, i * d + j] = channel.apply(unit).ravel()
    design = _chi_design(basis.n_qubits)
    try:
        x = np.linalg.solve(design, s.ravel())
    except np.linalg.LinAlgError as exc:  # pragma: no cover - design is unitary up to scale
        raise RuntimeError("process oracle design matrix is singular") from exc
    return ChiMatrix(basis, x.reshape(len(basis), len(basis)))
