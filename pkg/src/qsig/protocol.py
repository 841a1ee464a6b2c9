"""End-to-end sessions: Alice's encoding measurement and Bob's decoders.

Two modes are kept strictly apart:

* ``PHYSICAL`` simulates Alice's measurement on a shared Phi+ pair and runs
  Bob's circuit on the collapsed branch.
* ``CLAIMS_FAITHFUL`` never simulates anything. It draws Bob's meter
  outcomes from the claimed outcome table, so the claimed decoding
  performance can be reproduced as stated and compared with physics.
"""
from __future__ import annotations

import enum
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from math import sqrt
from typing import Sequence

import numpy as np

from . import density as dm
from .circuits import (
    BranchState,
    Circuit,
    Convention,
    branch_input,
    build,
    run_density,
    run_exact,
    run_sampled,
)
from .errors import InvariantViolation
from .outcomes import OutcomeDistribution, product
from .qcore import (
    BasisKind,
    GateKind,
    NamedState,
    apply_single,
    named_state,
    reduced_density,
    sample_measurement,
)
from .rng import Purpose, keyed_rng

PROVENANCE = "paper-claimed"

# bit -> the two branches Alice's outcomes "0" and "1" collapse Bob onto
BIT_BRANCHES = {
    0: (BranchState.PSI1, BranchState.PSI2),
    1: (BranchState.PSI3, BranchState.PSI4),
}

_EQUAL = (("+", "+"), ("-", "-"))
_OPPOSITE = (("+", "-"), ("-", "+"))

DECODER_IDS = {1: "decoder1", 2: "decoder2"}


class Mode(enum.Enum):
    PHYSICAL = "physical"
    CLAIMS_FAITHFUL = "claims-faithful"


@dataclass(frozen=True)
class ClaimTable:
    """Claimed meter outcomes per circuit and branch, in Hadamard labels.

    Each row is the set of outcome tuples the claim allows. The decoder 2
    psi4 row leaves the second outcome unconstrained.
    """

    rows: dict
    provenance: str = PROVENANCE
    notes: tuple = ()

    def allowed(self, circuit_id: str, branch: BranchState,
                basis: BasisKind = BasisKind.HADAMARD) -> tuple:
        row = self.rows[circuit_id][branch]
        if basis is BasisKind.HADAMARD:
            return row
        return tuple(tuple(_TO_COMP[x] for x in o) for o in row)

    def to_dict(self) -> dict:
        return {
            "provenance": self.provenance,
            "labels": "hadamard; computational meters read + as 0 and - as 1",
            "notes": list(self.notes),
            "rows": {
                cid: {b.value: [list(o) for o in outs] for b, outs in rows.items()}
                for cid, rows in self.rows.items()
            },
        }


_TO_COMP = {"+": "0", "-": "1"}

CLAIMS = ClaimTable(
    rows={
        "decoder1": {
            BranchState.PSI1: _EQUAL,
            BranchState.PSI2: _EQUAL,
            BranchState.PSI3: _EQUAL,
            BranchState.PSI4: _OPPOSITE,
        },
        "decoder2": {
            BranchState.PSI1: (("+", "+"),),
            BranchState.PSI2: (("+", "+"),),
            BranchState.PSI3: (("+", "-"),),
            BranchState.PSI4: (("-", "+"), ("-", "-")),
        },
    },
    notes=("decoder2 psi4: m2 unconstrained; either value accepted",),
)


def meter_basis(circuit: Circuit) -> BasisKind:
    bases = {m.basis for m in circuit.meters}
    if len(bases) != 1:
        raise ValueError(f"{circuit.name} mixes meter bases")
    return bases.pop()


@dataclass(frozen=True)
class EncodeResult:
    alice_outcome: str
    bob_branch: BranchState


def encode_bit(bit: int, rng: np.random.Generator) -> EncodeResult:
    """Alice measures her half of a fresh Phi+ pair.

    Bit 0 is a computational-basis measurement; bit 1 applies H first.
    """
    if bit not in (0, 1):
        raise ValueError(f"bit must be 0 or 1, got {bit!r}")
    pair = named_state(NamedState.PHI_PLUS)
    if bit == 1:
        pair = apply_single(pair, GateKind.H, 0)
    (outcome,), post = sample_measurement(pair, [0], BasisKind.COMPUTATIONAL, rng)
    bob = reduced_density(post, [1])
    branch = max(
        BranchState,
        key=lambda b: np.vdot(b.state().amplitudes, bob @ b.state().amplitudes).real,
    )
    if branch not in BIT_BRANCHES[bit]:
        raise InvariantViolation("branch_legality", f"bit {bit} collapsed Bob to {branch.value}")
    return EncodeResult(outcome, branch)


def _basis_of(labels) -> str:
    s = set(labels)
    if s <= {"+", "-"}:
        return "had"
    if s <= {"0", "1"}:
        return "comp"
    raise ValueError(f"labels {sorted(s)} mix bases or are not meter labels")


def decode1(outcomes: Sequence[Sequence[str]]) -> int:
    """1 if any of the k meter pairs disagree, else 0."""
    if not outcomes:
        raise ValueError("need at least one outcome pair")
    _basis_of([x for pair in outcomes for x in pair])
    return int(any(a != b for a, b in outcomes))


def decode2(m1: str, m2: str) -> int:
    _basis_of([m1, m2])
    if m1 in ("-", "1"):
        return 1
    return int(m2 in ("-", "1"))


def error_bound(k: int) -> float:
    """Probability that all k pairs of a sent 1 land on psi3: 2^-k."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return 2.0 ** -k


@dataclass(frozen=True)
class SessionConfig:
    k: int = 1
    convention: Convention = Convention.GH
    mode: Mode = Mode.PHYSICAL
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")

    def to_dict(self) -> dict:
        # threads is excluded: it must not influence any output
        return {"k": self.k, "convention": self.convention.value,
                "mode": self.mode.value, "seed": self.seed}


@dataclass
class PairRecord:
    alice: str | None
    branch: str
    outcomes: dict


@dataclass
class BitRecord:
    index: int
    sent: int
    pairs: list
    decoded: int


@dataclass
class Transcript:
    config: SessionConfig
    decoder: int
    records: list = field(default_factory=list)

    @property
    def sent(self) -> list[int]:
        return [r.sent for r in self.records]

    @property
    def decoded(self) -> list[int]:
        return [r.decoded for r in self.records]

    def to_dict(self) -> dict:
        return {
            "config": {**self.config.to_dict(), "decoder": self.decoder},
            "sent": "".join(map(str, self.sent)),
            "decoded": "".join(map(str, self.decoded)),
            "errors": sum(s != d for s, d in zip(self.sent, self.decoded)),
            "bits": [asdict(r) for r in self.records],
        }


def _decode(decoder: int, circuit: Circuit, outcome_maps: list[dict]) -> int:
    labels = circuit.meter_labels
    if decoder == 1:
        return decode1([tuple(o[lb] for lb in labels) for o in outcome_maps])
    return decode2(*(outcome_maps[0][lb] for lb in labels))


def _session_bit(config: SessionConfig, decoder: int, circuit: Circuit,
                 index: int, bit: int) -> BitRecord:
    pairs = config.k if decoder == 1 else 1
    basis = meter_basis(circuit)
    records = []
    for j in range(pairs):
        if config.mode is Mode.PHYSICAL:
            enc = encode_bit(bit, keyed_rng(config.seed, Purpose.ENCODE, index, j))
            state = branch_input(enc.bob_branch, circuit.width)
            outcomes = run_sampled(circuit, state, keyed_rng(config.seed, Purpose.DECODE, index, j))
            records.append(PairRecord(enc.alice_outcome, enc.bob_branch.value, outcomes))
        else:
            rng = keyed_rng(config.seed, Purpose.CLAIMS, index, j)
            a = int(rng.random() >= 0.5)
            branch = BIT_BRANCHES[bit][a]
            allowed = CLAIMS.allowed(circuit.name, branch, basis)
            pick = allowed[int(rng.integers(len(allowed)))]
            records.append(PairRecord(str(a), branch.value, dict(zip(circuit.meter_labels, pick))))
    decoded = _decode(decoder, circuit, [r.outcomes for r in records])
    return BitRecord(index, bit, records, decoded)


def run_session(config: SessionConfig, bits: Sequence[int], decoder: int) -> Transcript:
    if decoder not in DECODER_IDS:
        raise ValueError(f"decoder must be 1 or 2, got {decoder!r}")
    bits = [int(b) for b in bits]
    if any(b not in (0, 1) for b in bits):
        raise ValueError("bits must be 0 or 1")
    circuit = build(DECODER_IDS[decoder], config.convention)

    def work(item):
        i, b = item
        return _session_bit(config, decoder, circuit, i, b)

    if config.threads == 1:
        records = [work(x) for x in enumerate(bits)]
    else:
        with ThreadPoolExecutor(config.threads) as pool:
            records = list(pool.map(work, enumerate(bits)))
    return Transcript(config, decoder, records)


# --- vectorized sampling over per-branch outcome tables -----------------------

@dataclass(frozen=True)
class OutcomeTables:
    """Per-branch categorical distributions over a shared outcome list."""

    outcomes: tuple
    probs: np.ndarray  # shape (4, len(outcomes)), rows in BranchState order

    @classmethod
    def from_distributions(cls, dists: dict) -> "OutcomeTables":
        outcomes = tuple(sorted({o for d in dists.values() for o in d}))
        probs = np.array([[dists[b][o] for o in outcomes] for b in BranchState])
        return cls(outcomes, probs)

    def decoded_bits(self, decoder: int) -> np.ndarray:
        """Per-outcome contribution: anti-correlation flag (1) or decoded bit (2)."""
        if decoder == 1:
            return np.array([int(o[0] != o[1]) for o in self.outcomes])
        return np.array([decode2(*o) for o in self.outcomes])


def physical_tables(decoder: int, convention: Convention) -> OutcomeTables:
    circuit = build(DECODER_IDS[decoder], convention)
    return OutcomeTables.from_distributions(
        {b: run_exact(circuit, branch_input(b, circuit.width)).distribution() for b in BranchState}
    )


def claims_tables(decoder: int, convention: Convention) -> OutcomeTables:
    circuit = build(DECODER_IDS[decoder], convention)
    basis = meter_basis(circuit)
    dists = {}
    for b in BranchState:
        allowed = CLAIMS.allowed(circuit.name, b, basis)
        dists[b] = OutcomeDistribution({o: 1.0 / len(allowed) for o in allowed})
    return OutcomeTables.from_distributions(dists)


def sample_outcomes(tables: OutcomeTables, sent: int, shots: int, pairs: int,
                    rng: np.random.Generator) -> np.ndarray:
    """Outcome indices of shape ``(shots, pairs)`` for a given sent bit."""
    branch = 2 * sent + (rng.random((shots, pairs)) >= 0.5)
    cdf = np.cumsum(tables.probs, axis=1)
    cdf[:, -1] = np.inf
    u = rng.random((shots, pairs))
    return (u[..., None] >= cdf[branch]).sum(axis=-1)


CHUNK = 1 << 16


def sample_chunked(tables: OutcomeTables, sent: int, shots: int, pairs: int,
                   seed: int, purpose: Purpose, tag: int = 0, threads: int = 1) -> np.ndarray:
    """Like :func:`sample_outcomes`, split into independently keyed chunks."""
    sizes = [min(CHUNK, shots - s) for s in range(0, shots, CHUNK)]

    def work(i):
        return sample_outcomes(tables, sent, sizes[i], pairs, keyed_rng(seed, purpose, tag, sent, i))

    if threads == 1 or len(sizes) <= 1:
        parts = [work(i) for i in range(len(sizes))]
    else:
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(work, range(len(sizes))))
    return np.concatenate(parts) if parts else np.zeros((0, pairs), dtype=int)


@dataclass(frozen=True)
class ErrorEstimate:
    trials: int
    errors: int

    @property
    def rate(self) -> float:
        return self.errors / self.trials if self.trials else 0.0

    def sigma(self, p: float) -> float:
        """Binomial standard deviation of the rate at true probability ``p``."""
        return sqrt(p * (1 - p) / self.trials) if self.trials else 0.0


def estimate_error_rate(config: SessionConfig, decoder: int, sent: int, trials: int) -> ErrorEstimate:
    """Monte Carlo decoding error rate for ``trials`` independent sends of one bit."""
    tables = (claims_tables if config.mode is Mode.CLAIMS_FAITHFUL else physical_tables)(
        decoder, config.convention)
    pairs = config.k if decoder == 1 else 1
    idx = sample_chunked(tables, sent, trials, pairs, config.seed, Purpose.TRIALS,
                         tag=decoder, threads=config.threads)
    flags = tables.decoded_bits(decoder)[idx]
    decoded = flags.max(axis=1) if trials else flags
    return ErrorEstimate(trials, int(np.count_nonzero(decoded != sent)))


# --- exact decoded-bit distribution via the density oracle --------------------

def bob_reduced_state(sent: int) -> dm.DensityMatrix:
    """Bob's marginal after Alice's encoding measurement, averaged over her outcomes."""
    rho = dm.DensityMatrix.pure(named_state(NamedState.PHI_PLUS))
    if sent == 1:
        rho = dm.evolve_unitary(rho, dm.gate_unitary(GateKind.H, 0, 2))
    dist, posts = dm.measure_channel(rho, [0], BasisKind.COMPUTATIONAL)
    mixed = sum(dist[o] * posts[o].entries for o in posts)
    return dm.partial_trace(dm.DensityMatrix(mixed), [1])


def exact_meter_distribution(decoder: int, convention: Convention, sent: int,
                             k: int = 1) -> OutcomeDistribution:
    """Joint meter outcomes over all pairs for one bit, from Bob's mixed state."""
    circuit = build(DECODER_IDS[decoder], convention)
    anc = np.zeros((1 << (circuit.width - 1),) * 2, dtype=complex)
    anc[0, 0] = 1.0
    rho_in = dm.DensityMatrix(np.kron(bob_reduced_state(sent).entries, anc))
    per_pair = run_density(circuit, rho_in).distribution()
    return product([per_pair] * (k if decoder == 1 else 1))


def exact_decoded_distribution(decoder: int, convention: Convention, sent: int,
                               k: int = 1) -> OutcomeDistribution:
    joint = exact_meter_distribution(decoder, convention, sent, k)
    out = {("0",): 0.0, ("1",): 0.0}
    for o, p in joint.items():
        pairs = [o[i:i + 2] for i in range(0, len(o), 2)]
        bit = decode1(pairs) if decoder == 1 else decode2(*pairs[0])
        out[(str(bit),)] += p
    return OutcomeDistribution(out)
