"""Circuit IR, the two decoder circuits, and exact/sampled execution.

The drawn decoder circuits put H boxes in front of their meters while the
accompanying text says the meters are in the Hadamard basis. Each
:class:`Convention` is one self-consistent reading of that:

* ``GH``   every drawn gate is applied and every meter is Hadamard-basis.
* ``GC``   every drawn gate is applied and every meter is computational.
* ``XPAR`` H boxes on data wires are dropped (read as basis annotations);
  H boxes preparing measured control ancillas are kept. Decoder 2 meters
  are Hadamard-basis, decoder 1 meters computational. Decoder 2 then
  measures the X⊗X parity of its data pair by phase kickback.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterator, Sequence, Union

import numpy as np

from . import density as dm
from .outcomes import OutcomeDistribution
from .qcore import (
    BasisKind,
    GateKind,
    StateVector,
    apply_cnot,
    apply_single,
    basis_state,
    named_state,
    NamedState,
    project,
    sample_measurement,
    tensor,
)

ZERO_PROB = 1e-14


class Convention(enum.Enum):
    GH = "GH"
    GC = "GC"
    XPAR = "XPAR"


class BranchState(enum.Enum):
    PSI1 = "psi1"
    PSI2 = "psi2"
    PSI3 = "psi3"
    PSI4 = "psi4"

    def state(self) -> StateVector:
        return named_state(_BRANCH_KETS[self])


_BRANCH_KETS = {
    BranchState.PSI1: NamedState.KET0,
    BranchState.PSI2: NamedState.KET1,
    BranchState.PSI3: NamedState.KET_PLUS,
    BranchState.PSI4: NamedState.KET_MINUS,
}


@dataclass(frozen=True)
class Gate:
    kind: GateKind
    wire: int

    def wires(self):
        return (self.wire,)

    def to_text(self):
        return f"{self.kind.value} {self.wire}"


@dataclass(frozen=True)
class Cnot:
    control: int
    target: int

    def wires(self):
        return (self.control, self.target)

    def to_text(self):
        return f"CNOT {self.control} {self.target}"


@dataclass(frozen=True)
class Meter:
    wire: int
    basis: BasisKind
    label: str

    def wires(self):
        return (self.wire,)

    def to_text(self):
        return f"METER {self.wire} {self.basis.value} {self.label}"


CircuitOp = Union[Gate, Cnot, Meter]


@dataclass(frozen=True)
class Circuit:
    width: int
    ops: tuple
    convention: Convention | None = None
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "ops", tuple(self.ops))
        if self.width < 1:
            raise ValueError("circuit needs at least one wire")
        retired: set[int] = set()
        labels: set[str] = set()
        for i, op in enumerate(self.ops):
            for w in op.wires():
                if not 0 <= w < self.width:
                    raise ValueError(f"op {i} ({op.to_text()}) touches wire {w} outside width {self.width}")
                if w in retired:
                    raise ValueError(f"op {i} ({op.to_text()}) acts on already-measured wire {w}")
            if isinstance(op, Cnot) and op.control == op.target:
                raise ValueError(f"op {i}: CNOT control equals target")
            if isinstance(op, Meter):
                if op.label in labels:
                    raise ValueError(f"duplicate meter label {op.label!r}")
                labels.add(op.label)
                retired.add(op.wire)

    @property
    def meters(self) -> list[Meter]:
        return [op for op in self.ops if isinstance(op, Meter)]

    @property
    def meter_labels(self) -> list[str]:
        return [m.label for m in self.meters]

    def prefix(self, count: int) -> "Circuit":
        return Circuit(self.width, self.ops[:count], self.convention, self.name)

    def to_text(self) -> str:
        head = f"# circuit={self.name or '-'} convention={self.convention.value if self.convention else '-'} width={self.width}"
        return "\n".join([head] + [op.to_text() for op in self.ops]) + "\n"


def parse_circuit(text: str) -> Circuit:
    """Inverse of :meth:`Circuit.to_text`; comment lines other than the header are ignored."""
    ops: list = []
    meta: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            for tok in line[1:].split():
                if "=" in tok:
                    k, v = tok.split("=", 1)
                    meta[k] = v
            continue
        parts = line.split()
        head = parts[0].upper()
        try:
            if head == "CNOT" and len(parts) == 3:
                ops.append(Cnot(int(parts[1]), int(parts[2])))
            elif head in ("H", "X", "Z", "I") and len(parts) == 2:
                ops.append(Gate(GateKind(head), int(parts[1])))
            elif head == "METER" and len(parts) == 4:
                ops.append(Meter(int(parts[1]), BasisKind(parts[2].upper()), parts[3]))
            else:
                raise ValueError
        except ValueError:
            raise ValueError(f"line {lineno}: cannot parse {raw!r}") from None
    if "width" in meta:
        width = int(meta["width"])
    else:
        width = 1 + max((w for op in ops for w in op.wires()), default=0)
    conv = meta.get("convention", "-")
    name = meta.get("circuit", "-")
    return Circuit(width, ops, None if conv == "-" else Convention(conv), "" if name == "-" else name)


def build_decoder1(convention: Convention) -> Circuit:
    """Two-wire decoder: wire 0 is Bob's qubit, wire 1 an ancilla in |0>."""
    h = GateKind.H
    if convention is Convention.XPAR:
        comp = BasisKind.COMPUTATIONAL
        ops = [Cnot(0, 1), Meter(0, comp, "m_a"), Meter(1, comp, "m_b")]
    else:
        basis = BasisKind.HADAMARD if convention is Convention.GH else BasisKind.COMPUTATIONAL
        ops = [Cnot(0, 1), Gate(h, 0), Gate(h, 1), Meter(0, basis, "m_a"), Meter(1, basis, "m_b")]
    return Circuit(2, ops, convention, "decoder1")


def build_decoder2(convention: Convention) -> Circuit:
    """Five-wire decoder: wire 0 is Bob's qubit, wires 1-4 ancillas in |0>.

    Wires 2 and 4 are the measured kickback controls (labels ``m1``, ``m2``).
    """
    h = GateKind.H
    data_h = convention is not Convention.XPAR
    basis = BasisKind.COMPUTATIONAL if convention is Convention.GC else BasisKind.HADAMARD

    ops: list = [Cnot(0, 1)]
    if data_h:
        ops += [Gate(h, 0), Gate(h, 1)]
    ops += [Gate(h, 2), Cnot(2, 0), Cnot(2, 1), Meter(2, basis, "m1")]
    if data_h:
        ops += [Gate(h, 0), Gate(h, 1)]
    ops += [Cnot(0, 1), Gate(GateKind.Z, 0), Cnot(0, 3)]
    if data_h:
        ops += [Gate(h, 0), Gate(h, 3)]
    ops += [Gate(h, 4), Cnot(4, 0), Cnot(4, 3), Meter(4, basis, "m2")]
    return Circuit(5, ops, convention, "decoder2")


BUILDERS = {"decoder1": build_decoder1, "decoder2": build_decoder2}


def build(circuit_id: str, convention: Convention) -> Circuit:
    try:
        return BUILDERS[circuit_id](convention)
    except KeyError:
        raise ValueError(f"unknown circuit {circuit_id!r}") from None


def branch_input(branch: BranchState, width: int) -> StateVector:
    if width < 1:
        raise ValueError("width must be >= 1")
    s = branch.state()
    if width == 1:
        return s
    return tensor(s, basis_state(width - 1, "0" * (width - 1)))


def _apply(state: StateVector, op) -> StateVector:
    if isinstance(op, Gate):
        return apply_single(state, op.kind, op.wire)
    return apply_cnot(state, op.control, op.target)


@dataclass
class Path:
    """One measurement history: meter label -> outcome, its probability, and the state."""

    outcomes: dict
    probability: float
    state: object


@dataclass
class BranchTreeResult:
    circuit: Circuit
    paths: list = field(default_factory=list)

    def distribution(self) -> OutcomeDistribution:
        labels = self.circuit.meter_labels
        out: dict = {}
        for p in self.paths:
            key = tuple(p.outcomes[lb] for lb in labels)
            out[key] = out.get(key, 0.0) + p.probability
        return OutcomeDistribution(out)

    def __iter__(self) -> Iterator[Path]:
        return iter(self.paths)


def step_exact(paths: list, op, zero: float = ZERO_PROB) -> list:
    """Advance every path by one op, forking at meters."""
    if not isinstance(op, Meter):
        return [Path(p.outcomes, p.probability, _apply(p.state, op)) for p in paths]
    forked = []
    for p in paths:
        for lab in op.basis.labels:
            q, post = project(p.state, [op.wire], op.basis, [lab])
            if q * p.probability < zero or post is None:
                continue
            forked.append(Path({**p.outcomes, op.label: lab}, p.probability * q, post))
    return forked


def run_exact(circuit: Circuit, state: StateVector) -> BranchTreeResult:
    """Execute with every measurement forked into its exact outcome branches."""
    if state.num_qubits != circuit.width:
        raise ValueError(f"input has {state.num_qubits} qubits, circuit width is {circuit.width}")
    paths = [Path({}, 1.0, state)]
    for op in circuit.ops:
        paths = step_exact(paths, op)
    return BranchTreeResult(circuit, paths)


def run_sampled(circuit: Circuit, state: StateVector, rng: np.random.Generator) -> dict:
    """One shot: meter label -> observed outcome."""
    if state.num_qubits != circuit.width:
        raise ValueError(f"input has {state.num_qubits} qubits, circuit width is {circuit.width}")
    outcomes = {}
    for op in circuit.ops:
        if isinstance(op, Meter):
            (lab,), state = sample_measurement(state, [op.wire], op.basis, rng)
            outcomes[op.label] = lab
        else:
            state = _apply(state, op)
    return outcomes


def op_unitary(op, width: int) -> np.ndarray:
    """Full-matrix form of a gate op (density path only)."""
    if isinstance(op, Gate):
        return dm.gate_unitary(op.kind, op.wire, width)
    return dm.cnot_unitary(op.control, op.target, width)


def run_density(circuit: Circuit, rho: dm.DensityMatrix) -> BranchTreeResult:
    """Density-matrix execution; path states are :class:`DensityMatrix`."""
    if rho.num_qubits != circuit.width:
        raise ValueError(f"input has {rho.num_qubits} qubits, circuit width is {circuit.width}")
    paths = [Path({}, 1.0, rho)]
    for op in circuit.ops:
        if isinstance(op, Meter):
            forked = []
            for p in paths:
                dist, posts = dm.measure_channel(p.state, [op.wire], op.basis)
                for (lab,), post in posts.items():
                    q = dist[(lab,)]
                    if q * p.probability < ZERO_PROB:
                        continue
                    forked.append(Path({**p.outcomes, op.label: lab}, p.probability * q, post))
            paths = forked
        else:
            u = op_unitary(op, circuit.width)
            paths = [Path(p.outcomes, p.probability, dm.evolve_unitary(p.state, u)) for p in paths]
    return BranchTreeResult(circuit, paths)


def unitary_segment(circuit: Circuit) -> np.ndarray:
    """Product of the gate ops before the first meter."""
    u = np.eye(1 << circuit.width, dtype=complex)
    for op in circuit.ops:
        if isinstance(op, Meter):
            break
        u = op_unitary(op, circuit.width) @ u
    return u


def disentangle_index(circuit: Circuit) -> int:
    """Index just past the CNOT(0,1) that follows the first meter (decoder 2)."""
    seen_meter = False
    for i, op in enumerate(circuit.ops):
        if isinstance(op, Meter):
            seen_meter = True
        elif seen_meter and isinstance(op, Cnot) and (op.control, op.target) == (0, 1):
            return i + 1
    raise ValueError(f"{circuit.name} has no restoring CNOT(0,1) after a meter")


def all_circuits(conventions: Sequence[Convention] = tuple(Convention)):
    for cid in BUILDERS:
        for conv in conventions:
            yield cid, conv, build(cid, conv)
