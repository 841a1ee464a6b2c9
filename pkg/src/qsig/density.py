"""Mixed-state oracle built from explicit matrices.

Nothing here touches the strided kernels in :mod:`qsig.qcore`; gates are
embedded as full ``2^n x 2^n`` Kronecker products so this path can serve as
an independent check on the state-vector simulator.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import reduce
from typing import Sequence

import numpy as np

from .errors import InvariantViolation
from .outcomes import OutcomeDistribution, mixture, product  # noqa: F401  (re-exported)
from .qcore import BasisKind, GateKind, StateVector

MAX_DENSITY_QUBITS = 12
HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
EIG_TOL = -1e-10
ZERO_PROB = 1e-14

_I2 = np.eye(2, dtype=complex)
_PROJ = {
    BasisKind.COMPUTATIONAL: (
        np.array([[1, 0], [0, 0]], dtype=complex),
        np.array([[0, 0], [0, 1]], dtype=complex),
    ),
    BasisKind.HADAMARD: (
        np.full((2, 2), 0.5, dtype=complex),
        np.array([[0.5, -0.5], [-0.5, 0.5]], dtype=complex),
    ),
}


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    entries: np.ndarray

    def __post_init__(self):
        rho = np.array(self.entries, dtype=np.complex128)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise ValueError(f"density matrix must be square, got {rho.shape}")
        dim = rho.shape[0]
        if dim < 2 or dim & (dim - 1):
            raise ValueError(f"dimension {dim} is not a power of two >= 2")
        if dim.bit_length() - 1 > MAX_DENSITY_QUBITS:
            raise ValueError(f"density path is capped at {MAX_DENSITY_QUBITS} qubits")
        herm = np.max(np.abs(rho - rho.conj().T))
        if herm > HERMITIAN_TOL:
            raise InvariantViolation("hermitian", f"max |rho - rho^dag| = {herm:.3e}")
        tr = np.trace(rho).real
        if abs(tr - 1.0) > TRACE_TOL:
            raise InvariantViolation("trace", f"trace = {tr!r}")
        lo = np.linalg.eigvalsh(rho).min()
        if lo < EIG_TOL:
            raise InvariantViolation("positive", f"min eigenvalue {lo:.3e}")
        rho.flags.writeable = False
        object.__setattr__(self, "entries", rho)

    @property
    def num_qubits(self) -> int:
        return self.entries.shape[0].bit_length() - 1

    @classmethod
    def pure(cls, state: StateVector) -> "DensityMatrix":
        a = state.amplitudes
        return cls(np.outer(a, a.conj()))

    @classmethod
    def maximally_mixed(cls, n: int) -> "DensityMatrix":
        d = 1 << n
        return cls(np.eye(d, dtype=complex) / d)

    def max_abs_diff(self, other: "DensityMatrix") -> float:
        return float(np.max(np.abs(self.entries - other.entries)))


@dataclass(frozen=True)
class Ensemble:
    members: tuple[tuple[float, StateVector], ...]

    def __post_init__(self):
        members = tuple((float(p), s) for p, s in self.members)
        if not members:
            raise ValueError("empty ensemble")
        if any(p < 0 for p, _ in members):
            raise ValueError("negative ensemble weight")
        if abs(sum(p for p, _ in members) - 1.0) > 1e-12:
            raise ValueError("ensemble weights must sum to 1")
        if len({s.dim for _, s in members}) != 1:
            raise ValueError("ensemble states differ in dimension")
        object.__setattr__(self, "members", members)


def from_ensemble(e: Ensemble) -> DensityMatrix:
    rho = sum(p * np.outer(s.amplitudes, s.amplitudes.conj()) for p, s in e.members)
    return DensityMatrix(rho)


def partial_trace(rho: DensityMatrix, keep: Sequence[int]) -> DensityMatrix:
    """Trace out every wire not in ``keep``; kept wires stay in ascending order."""
    n = rho.num_qubits
    keep = list(keep)
    if not keep or len(set(keep)) != len(keep) or any(not 0 <= w < n for w in keep):
        raise ValueError(f"invalid wires to keep: {keep}")
    keep = sorted(keep)
    t = rho.entries.reshape([2] * (2 * n))
    letters = "abcdefghijklmnopqrstuvwxyz"
    row = list(letters[:n])
    col = list(letters[n:2 * n])
    for w in range(n):
        if w not in keep:
            col[w] = row[w]
    out = "".join(row[w] for w in keep) + "".join(col[w] for w in keep)
    reduced = np.einsum("".join(row) + "".join(col) + "->" + out, t)
    d = 1 << len(keep)
    return DensityMatrix(reduced.reshape(d, d))


def embed(ops: dict[int, np.ndarray], n: int) -> np.ndarray:
    """Kronecker product placing single-wire operators, identity elsewhere."""
    return reduce(np.kron, [ops.get(w, _I2) for w in range(n)])


def gate_unitary(kind: GateKind, wire: int, n: int) -> np.ndarray:
    if not 0 <= wire < n:
        raise IndexError(f"wire {wire} out of range for {n} qubits")
    return embed({wire: kind.matrix}, n)


def cnot_unitary(control: int, target: int, n: int) -> np.ndarray:
    if control == target or not (0 <= control < n and 0 <= target < n):
        raise ValueError(f"bad CNOT wires ({control}, {target}) for {n} qubits")
    p0, p1 = _PROJ[BasisKind.COMPUTATIONAL]
    return embed({control: p0}, n) + embed({control: p1, target: GateKind.X.matrix}, n)


def evolve_unitary(rho: DensityMatrix, u: np.ndarray) -> DensityMatrix:
    u = np.asarray(u, dtype=complex)
    if u.shape != rho.entries.shape:
        raise ValueError(f"unitary shape {u.shape} incompatible with {rho.entries.shape}")
    return DensityMatrix(u @ rho.entries @ u.conj().T)


def measure_channel(rho: DensityMatrix, wires: Sequence[int], basis: BasisKind):
    """Projective measurement of ``wires``.

    Returns the outcome distribution and a map from each outcome with
    probability >= 1e-14 to its normalized post-measurement state.
    """
    n = rho.num_qubits
    wires = list(wires)
    if not wires or len(set(wires)) != len(wires) or any(not 0 <= w < n for w in wires):
        raise ValueError(f"invalid wires: {wires}")
    probs = {}
    posts = {}
    for bits in itertools.product((0, 1), repeat=len(wires)):
        label = tuple(basis.labels[b] for b in bits)
        proj = embed({w: _PROJ[basis][b] for w, b in zip(wires, bits)}, n)
        unnorm = proj @ rho.entries @ proj
        p = float(np.trace(unnorm).real)
        probs[label] = max(p, 0.0)
        if p >= ZERO_PROB:
            m = unnorm / p
            posts[label] = DensityMatrix((m + m.conj().T) / 2)
    return OutcomeDistribution(probs), posts


def tv_distance(p, q) -> float:
    """Total variation distance; labels absent from one side count as 0."""
    keys = set(p) | set(q)
    return min(1.0, 0.5 * sum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys))
