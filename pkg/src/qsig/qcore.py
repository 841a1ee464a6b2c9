"""Dense state-vector registers, gate kernels and projective measurement.

Wire 0 is the top wire of a circuit diagram and the most significant bit of
the basis-state index, so ``|q0 q1 ... q(n-1)>`` maps to ``int("q0q1...", 2)``.
"""
from __future__ import annotations

import enum
from functools import lru_cache
from dataclasses import dataclass
from math import sqrt
from typing import Sequence

import numpy as np

from .errors import InvariantViolation
from .outcomes import OutcomeDistribution

MAX_QUBITS = 24
NORM_GUARD = 1e-10
SQRT1_2 = 1.0 / sqrt(2.0)


class GateKind(enum.Enum):
    H = "H"
    X = "X"
    Z = "Z"
    I = "I"  # noqa: E741

    @property
    def matrix(self) -> np.ndarray:
        return _GATE_MATRICES[self].copy()


_GATE_MATRICES = {
    GateKind.H: np.array([[1, 1], [1, -1]], dtype=complex) * SQRT1_2,
    GateKind.X: np.array([[0, 1], [1, 0]], dtype=complex),
    GateKind.Z: np.array([[1, 0], [0, -1]], dtype=complex),
    GateKind.I: np.eye(2, dtype=complex),
}


class BasisKind(enum.Enum):
    COMPUTATIONAL = "COMP"
    HADAMARD = "HAD"

    @property
    def labels(self) -> tuple[str, str]:
        return ("0", "1") if self is BasisKind.COMPUTATIONAL else ("+", "-")


class NamedState(enum.Enum):
    KET0 = "0"
    KET1 = "1"
    KET_PLUS = "+"
    KET_MINUS = "-"
    PHI_PLUS = "phi+"
    PHI_MINUS = "phi-"
    PSI_PLUS = "psi+"


@dataclass(frozen=True, eq=False)
class StateVector:
    """An n-qubit pure state. The amplitude buffer is read-only."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=np.complex128).reshape(-1)
        dim = amps.size
        if dim < 2 or dim & (dim - 1):
            raise ValueError(f"amplitude count {dim} is not a power of two >= 2")
        n = dim.bit_length() - 1
        if n > MAX_QUBITS:
            raise ValueError(f"{n} qubits exceeds the register cap of {MAX_QUBITS}")
        if not np.all(np.isfinite(amps)):
            raise InvariantViolation("finite_amplitudes", "non-finite amplitude")
        drift = abs(np.vdot(amps, amps).real - 1.0)
        if drift > NORM_GUARD:
            raise InvariantViolation("norm", f"|norm^2 - 1| = {drift:.3e}")
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)

    @property
    def num_qubits(self) -> int:
        return self.amplitudes.size.bit_length() - 1

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def norm(self) -> float:
        return float(np.sqrt(np.vdot(self.amplitudes, self.amplitudes).real))

    def __repr__(self):
        return f"StateVector(n={self.num_qubits}, {format_ket(self)})"


def basis_state(n: int, bits: str) -> StateVector:
    if n < 1:
        raise ValueError("need at least one qubit")
    if len(bits) != n or any(b not in "01" for b in bits):
        raise ValueError(f"bits {bits!r} is not a {n}-character binary string")
    amps = np.zeros(1 << n, dtype=complex)
    amps[int(bits, 2)] = 1.0
    return StateVector(amps)


@lru_cache(maxsize=None)
def named_state(which: NamedState) -> StateVector:
    s = SQRT1_2
    vectors = {
        NamedState.KET0: [1, 0],
        NamedState.KET1: [0, 1],
        NamedState.KET_PLUS: [s, s],
        NamedState.KET_MINUS: [s, -s],
        NamedState.PHI_PLUS: [s, 0, 0, s],
        NamedState.PHI_MINUS: [s, 0, 0, -s],
        NamedState.PSI_PLUS: [0, s, s, 0],
    }
    return StateVector(np.array(vectors[which], dtype=complex))


def tensor(a: StateVector, b: StateVector) -> StateVector:
    """Kronecker product; ``a`` occupies the higher-order (upper) wires."""
    return StateVector(np.kron(a.amplitudes, b.amplitudes))


def _check_wire(n: int, wire: int) -> None:
    if not 0 <= wire < n:
        raise IndexError(f"wire {wire} out of range for {n} qubits")


def _split(amps: np.ndarray, n: int, wire: int) -> np.ndarray:
    # view as (high, bit, low); axis 1 is the addressed wire
    return amps.reshape(1 << wire, 2, 1 << (n - wire - 1))


def apply_single(state: StateVector, gate: GateKind, wire: int) -> StateVector:
    n = state.num_qubits
    _check_wire(n, wire)
    v = _split(state.amplitudes, n, wire)
    a0, a1 = v[:, 0, :], v[:, 1, :]
    out = np.empty_like(v)
    if gate is GateKind.H:
        np.add(a0, a1, out=out[:, 0, :])
        np.subtract(a0, a1, out=out[:, 1, :])
        out *= SQRT1_2
    elif gate is GateKind.X:
        out[:, 0, :] = a1
        out[:, 1, :] = a0
    elif gate is GateKind.Z:
        out[:, 0, :] = a0
        np.negative(a1, out=out[:, 1, :])
    elif gate is GateKind.I:
        out[...] = v
    else:
        raise ValueError(f"unsupported gate {gate!r}")
    return StateVector(out.reshape(-1))


def apply_cnot(state: StateVector, control: int, target: int) -> StateVector:
    n = state.num_qubits
    _check_wire(n, control)
    _check_wire(n, target)
    if control == target:
        raise ValueError("control and target must differ")
    out = state.amplitudes.copy().reshape([2] * n)
    sel = [slice(None)] * n
    sel[control] = 1
    sub = out[tuple(sel)]
    # target axis index shifts down once the control axis is fixed
    t_axis = target - (1 if target > control else 0)
    out[tuple(sel)] = np.flip(sub, axis=t_axis).copy()
    return StateVector(out.reshape(-1))


def apply_hadamards(state: StateVector, wires: Sequence[int]) -> StateVector:
    for w in wires:
        state = apply_single(state, GateKind.H, w)
    return state


def inner_product(a: StateVector, b: StateVector) -> complex:
    """<a|b>, conjugate-linear in ``a``."""
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def equal_up_to_phase(a: StateVector, b: StateVector, atol: float = 1e-12) -> bool:
    if a.dim != b.dim:
        return False
    ip = inner_product(a, b)
    if abs(ip) < 0.5:
        return False
    phase = ip / abs(ip)
    return bool(np.allclose(a.amplitudes * phase, b.amplitudes, rtol=0, atol=atol))


def _wire_probabilities(amps: np.ndarray, n: int, wires: Sequence[int]) -> np.ndarray:
    """Joint computational-basis probabilities of ``wires`` as a flat array.

    Index ``j`` of the result encodes the outcome bits of ``wires`` in the
    given order, first wire most significant.
    """
    probs = (amps.real ** 2 + amps.imag ** 2).reshape([2] * n)
    others = tuple(i for i in range(n) if i not in wires)
    marg = probs.sum(axis=others) if others else probs
    # remaining axes are in ascending wire order; reorder to requested order
    order = sorted(wires)
    marg = np.transpose(marg, [order.index(w) for w in wires])
    return marg.reshape(-1)


def _validate_wires(n: int, wires: Sequence[int]) -> list[int]:
    wires = list(wires)
    if not wires:
        raise ValueError("no wires to measure")
    if len(set(wires)) != len(wires):
        raise ValueError(f"duplicate wires in {wires}")
    for w in wires:
        _check_wire(n, w)
    return wires


def _labels_for(index: int, k: int, basis: BasisKind) -> tuple[str, ...]:
    lab = basis.labels
    return tuple(lab[(index >> (k - 1 - i)) & 1] for i in range(k))


def exact_distribution(state: StateVector, wires: Sequence[int], basis: BasisKind):
    """Born-rule distribution of a joint measurement of ``wires``."""
    n = state.num_qubits
    wires = _validate_wires(n, wires)
    if basis is BasisKind.HADAMARD:
        state = apply_hadamards(state, wires)
    p = _wire_probabilities(state.amplitudes, n, wires)
    k = len(wires)
    return OutcomeDistribution(
        {_labels_for(i, k, basis): float(p[i]) for i in range(p.size) if p[i] > 0.0}
    )


def project(state: StateVector, wires: Sequence[int], basis: BasisKind,
            labels: Sequence[str]) -> tuple[float, StateVector | None]:
    """Probability of ``labels`` on ``wires`` and the renormalized post-state.

    Returns ``(p, None)`` when the outcome has zero probability.
    """
    n = state.num_qubits
    wires = _validate_wires(n, wires)
    lab = basis.labels
    bits = [lab.index(x) for x in labels]
    if basis is BasisKind.HADAMARD:
        state = apply_hadamards(state, wires)
    amps = state.amplitudes.copy().reshape([2] * n)
    keep = np.zeros_like(amps)
    sel = [slice(None)] * n
    for w, b in zip(wires, bits):
        sel[w] = b
    keep[tuple(sel)] = amps[tuple(sel)]
    keep = keep.reshape(-1)
    # condition on the actual squared norm so deterministic outcomes give exactly 1
    p = float(np.vdot(keep, keep).real / np.vdot(amps, amps).real)
    if p <= 0.0:
        return 0.0, None
    post = StateVector(keep / np.linalg.norm(keep))
    if basis is BasisKind.HADAMARD:
        post = apply_hadamards(post, wires)
    return p, post


def sample_measurement(state: StateVector, wires: Sequence[int], basis: BasisKind,
                       rng: np.random.Generator) -> tuple[tuple[str, ...], StateVector]:
    """Draw one joint outcome and return it with the collapsed state."""
    n = state.num_qubits
    wires = _validate_wires(n, wires)
    rotated = apply_hadamards(state, wires) if basis is BasisKind.HADAMARD else state
    p = _wire_probabilities(rotated.amplitudes, n, wires)
    idx = int(np.searchsorted(np.cumsum(p), rng.random() * p.sum(), side="right"))
    idx = min(idx, p.size - 1)
    while p[idx] <= 0.0:  # guard against landing on a zero-width bin
        idx -= 1
    labels = _labels_for(idx, len(wires), basis)
    _, post = project(state, wires, basis, labels)
    return labels, post


def reduced_density(state: StateVector, keep: Sequence[int]) -> np.ndarray:
    """Reduced density matrix of ``keep`` (in the given wire order)."""
    n = state.num_qubits
    keep = _validate_wires(n, keep)
    others = [i for i in range(n) if i not in keep]
    psi = state.amplitudes.reshape([2] * n).transpose(list(keep) + others)
    psi = psi.reshape(1 << len(keep), -1)
    return psi @ psi.conj().T


def format_ket(state: StateVector, atol: float = 1e-12, digits: int = 6) -> str:
    """Render as a sum of basis kets, e.g. ``0.707107|00> - 0.707107|11>``.

    A single basis state with unit amplitude prints bare, ``|11000>``.
    """
    n = state.num_qubits
    terms = []
    for i in np.flatnonzero(np.abs(state.amplitudes) > atol):
        a = complex(state.amplitudes[i])
        terms.append((format(int(i), f"0{n}b"), a))
    if len(terms) == 1 and abs(abs(terms[0][1]) - 1.0) < atol:
        bits, a = terms[0]
        if abs(a - 1) < atol:
            return f"|{bits}⟩"
        if abs(a + 1) < atol:
            return f"-|{bits}⟩"
    out = []
    for bits, a in terms:
        if abs(a.imag) < atol:
            coef = f"{abs(a.real):.{digits}f}"
            sign = "-" if a.real < 0 else "+"
        else:
            coef = f"({a.real:.{digits}f}{a.imag:+.{digits}f}j)"
            sign = "+"
        out.append((sign, f"{coef}|{bits}⟩"))
    s = " ".join(f"{sg} {t}" for sg, t in out)
    return s[2:] if s.startswith("+ ") else "-" + s[2:]
