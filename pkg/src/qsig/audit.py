"""Verification layer: branch tables, claim verdicts and signaling metrics.

Claimed outcomes are treated as data to compare against, never as results.
Every verdict and every exact metric here is derived from exact
distributions, so none of them depend on a seed.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import log2, pi, sqrt
from typing import Sequence

import numpy as np

from . import __version__
from . import density as dm
from .circuits import BranchState, Convention, branch_input, build, run_density, run_exact
from .outcomes import OutcomeDistribution, mixture, product
from .protocol import (
    BIT_BRANCHES,
    CLAIMS,
    DECODER_IDS,
    ClaimTable,
    OutcomeTables,
    decode1,
    decode2,
    exact_meter_distribution,
    meter_basis,
    sample_chunked,
)
from .qcore import NamedState, StateVector, inner_product, named_state
from .rng import Purpose

MATCH_TOL = 1e-12
GRAM_TOL = 1e-10
K_MAX = 4


@dataclass(frozen=True)
class BranchTable:
    circuit_id: str
    convention: Convention
    rows: dict  # BranchState -> OutcomeDistribution

    def to_dict(self) -> dict:
        return {b.value: self.rows[b].to_dict() for b in BranchState}


def branch_table(circuit_id: str, convention: Convention) -> BranchTable:
    c = build(circuit_id, convention)
    rows = {b: run_exact(c, branch_input(b, c.width)).distribution() for b in BranchState}
    return BranchTable(circuit_id, convention, rows)


def branch_table_density(circuit_id: str, convention: Convention) -> BranchTable:
    """Same table through the density-matrix oracle."""
    c = build(circuit_id, convention)
    rows = {
        b: run_density(c, dm.DensityMatrix.pure(branch_input(b, c.width))).distribution()
        for b in BranchState
    }
    return BranchTable(circuit_id, convention, rows)


@dataclass(frozen=True)
class BranchVerdict:
    branch: BranchState
    match: bool
    claimed: tuple
    simulated: OutcomeDistribution
    claimed_mass: float
    max_outside: float

    @property
    def verdict(self) -> str:
        return "Match" if self.match else "Mismatch"


@dataclass(frozen=True)
class MatchReport:
    circuit_id: str
    convention: Convention
    rows: dict  # BranchState -> BranchVerdict

    @property
    def all_match(self) -> bool:
        return all(v.match for v in self.rows.values())

    def verdicts(self) -> dict:
        return {b: v.verdict for b, v in self.rows.items()}

    def to_dict(self) -> dict:
        return {
            "circuit": self.circuit_id,
            "convention": self.convention.value,
            "all_match": self.all_match,
            "rows": [
                {
                    "branch": b.value,
                    "verdict": v.verdict,
                    "claimed": [list(o) for o in v.claimed],
                    "simulated": v.simulated.to_dict(),
                    "claimed_mass": v.claimed_mass,
                    "max_outside": v.max_outside,
                }
                for b, v in self.rows.items()
            ],
        }


def compare_claims(table: BranchTable, claims: ClaimTable = CLAIMS) -> MatchReport:
    if table.circuit_id not in claims.rows:
        raise ValueError(f"no claims recorded for {table.circuit_id!r}")
    basis = meter_basis(build(table.circuit_id, table.convention))
    rows = {}
    for b in BranchState:
        allowed = claims.allowed(table.circuit_id, b, basis)
        dist = table.rows[b]
        inside = dist.mass(allowed)
        outside = [p for o, p in dist.items() if o not in set(allowed)]
        rows[b] = BranchVerdict(b, inside >= 1 - MATCH_TOL, allowed, dist, inside,
                                max(outside, default=0.0))
    return MatchReport(table.circuit_id, table.convention, rows)


def mutual_information(joint: dict) -> float:
    """I(X;Y) in bits from ``{(x, y): p}``, with 0 log 0 := 0."""
    px: dict = {}
    py: dict = {}
    for (x, y), p in joint.items():
        px[x] = px.get(x, 0.0) + p
        py[y] = py.get(y, 0.0) + p
    mi = 0.0
    for (x, y), p in joint.items():
        if p > 0:
            mi += float(p) * log2(p / (px[x] * py[y]))
    return max(mi, 0.0)


def _decoded_bit(decoder: int, outcome: tuple) -> int:
    pairs = [outcome[i:i + 2] for i in range(0, len(outcome), 2)]
    return decode1(pairs) if decoder == 1 else decode2(*pairs[0])


def bit_distributions(table: BranchTable, k: int) -> dict[int, OutcomeDistribution]:
    """Bob's joint meter distribution over ``k`` pairs for each sent bit.

    Each pair is an even mixture of the two branches the bit can produce.
    """
    out = {}
    for bit, (a, b) in BIT_BRANCHES.items():
        per_pair = mixture([(0.5, table.rows[a]), (0.5, table.rows[b])])
        out[bit] = product([per_pair] * k)
    return out


def decoded_joint(decoder: int, dists: dict) -> dict:
    """``{(sent, decoded): p}`` under a uniform prior on the sent bit."""
    joint = {(s, d): 0.0 for s in (0, 1) for d in (0, 1)}
    for sent, dist in dists.items():
        for o, p in dist.items():
            joint[(sent, _decoded_bit(decoder, o))] += 0.5 * p
    return joint


@dataclass(frozen=True)
class Empirical:
    shots: int
    tv: float
    tv_sigma: float
    tv_bound: float
    mi: float
    support: int

    def to_dict(self) -> dict:
        return {"shots": self.shots, "tv": self.tv, "tv_sigma": self.tv_sigma,
                "tv_bound": self.tv_bound, "mi": self.mi, "support": self.support}


@dataclass(frozen=True)
class SignalingReport:
    circuit_id: str
    convention: Convention
    decoder: int
    k: int
    tv_exact: float
    mi_exact: float
    tv_exact_density: float
    meter_exact: dict  # sent -> OutcomeDistribution
    decoded_exact: dict  # sent -> {decoded: p}
    empirical: Empirical | None

    def to_dict(self) -> dict:
        return {
            "circuit": self.circuit_id,
            "convention": self.convention.value,
            "decoder": self.decoder,
            "k": self.k,
            "tv_exact": self.tv_exact,
            "mi_exact": self.mi_exact,
            "tv_exact_density": self.tv_exact_density,
            "decoded_exact": {
                f"sent{s}": {str(d): p for d, p in v.items()} for s, v in self.decoded_exact.items()
            },
            "empirical": self.empirical.to_dict() if self.empirical else None,
        }


def _empirical(decoder: int, convention: Convention, k: int, table: BranchTable,
               exact: dict, shots: int, seed: int, threads: int) -> Empirical:
    tables = OutcomeTables.from_distributions(table.rows)
    m = len(tables.outcomes)
    weights = m ** np.arange(k)[::-1]
    tag = 100 * decoder + 10 * list(Convention).index(convention) + k
    counts = {}
    decoded = {}
    for sent in (0, 1):
        idx = sample_chunked(tables, sent, shots, k, seed, Purpose.AUDIT, tag=tag, threads=threads)
        codes, n = np.unique(idx @ weights, return_counts=True)
        counts[sent] = dict(zip(codes.tolist(), (n / shots).tolist()))
        flags = tables.decoded_bits(decoder)[idx].max(axis=1)
        decoded[sent] = np.bincount(flags, minlength=2) / shots
    tv = dm.tv_distance(counts[0], counts[1])
    support = len(set(exact[0].support()) | set(exact[1].support()))
    joint = {(s, d): 0.5 * decoded[s][d] for s in (0, 1) for d in (0, 1)}
    return Empirical(shots, tv, sqrt(support / (pi * shots)), 3 * sqrt(support / shots),
                     float(mutual_information(joint)), support)


def signaling_report(decoder: int, convention: Convention, k: int = 1, shots: int = 0,
                     seed: int = 0, threads: int = 1, table: BranchTable | None = None) -> SignalingReport:
    """Does Alice's choice change anything Bob can see?

    Exact distributions mix branch-table rows with Alice's 1/2-1/2 outcome
    probabilities. A second exact TV comes from the density oracle fed with
    Bob's reduced state, as an independent cross-check.
    """
    if decoder not in DECODER_IDS:
        raise ValueError(f"decoder must be 1 or 2, got {decoder!r}")
    if k < 1:
        raise ValueError("k must be >= 1")
    pairs = k if decoder == 1 else 1
    cid = DECODER_IDS[decoder]
    table = table or branch_table(cid, convention)
    exact = bit_distributions(table, pairs)
    tv = dm.tv_distance(exact[0], exact[1])
    joint = decoded_joint(decoder, exact)
    dens = {s: exact_meter_distribution(decoder, convention, s, pairs) for s in (0, 1)}
    emp = _empirical(decoder, convention, pairs, table, exact, shots, seed, threads) if shots > 0 else None
    return SignalingReport(
        cid, convention, decoder, pairs, tv, mutual_information(joint),
        dm.tv_distance(dens[0], dens[1]), exact,
        {s: {d: 2 * joint[(s, d)] for d in (0, 1)} for s in (0, 1)}, emp,
    )


@dataclass(frozen=True)
class ReducedStateReport:
    rho_s1: dm.DensityMatrix
    rho_s2: dm.DensityMatrix
    max_abs_diff: float

    def to_dict(self) -> dict:
        def mat(m):
            return {"re": m.entries.real.tolist(), "im": m.entries.imag.tolist()}

        return {"rho_s1": mat(self.rho_s1), "rho_s2": mat(self.rho_s2),
                "max_abs_diff": self.max_abs_diff}


def reduced_state_report() -> ReducedStateReport:
    """Bob's density matrix for the computational and Hadamard collapse sets."""
    s1 = dm.Ensemble(((0.5, named_state(NamedState.KET0)), (0.5, named_state(NamedState.KET1))))
    s2 = dm.Ensemble(((0.5, named_state(NamedState.KET_PLUS)), (0.5, named_state(NamedState.KET_MINUS))))
    r1, r2 = dm.from_ensemble(s1), dm.from_ensemble(s2)
    return ReducedStateReport(r1, r2, r1.max_abs_diff(r2))


def idp_failure_probability(a: StateVector, b: StateVector) -> float:
    """Optimal inconclusive probability for unambiguously telling ``a`` from ``b``."""
    return abs(inner_product(a, b))


def linearly_independent(states: Sequence[StateVector]) -> bool:
    if not states:
        raise ValueError("need at least one state")
    if len({s.dim for s in states}) != 1:
        raise ValueError("states differ in dimension")
    m = np.array([s.amplitudes for s in states])
    gram = m.conj() @ m.T
    return bool(abs(np.linalg.det(gram)) > GRAM_TOL)


AUDIT_KEYS = ("version", "config", "claims", "branch_tables", "match_reports",
              "signaling", "reduced_states")


def full_audit(shots: int = 0, seed: int = 0, threads: int = 1, k_max: int = K_MAX) -> dict:
    """Everything, for every circuit and convention, as a JSON-ready dict."""
    if shots < 0:
        raise ValueError("shots must be >= 0")
    tables, matches, signaling = [], [], []
    for decoder, cid in DECODER_IDS.items():
        for conv in Convention:
            table = branch_table(cid, conv)
            oracle = branch_table_density(cid, conv)
            diff = max(table.rows[b].max_abs_diff(oracle.rows[b]) for b in BranchState)
            tables.append({"circuit": cid, "convention": conv.value,
                           "density_max_abs_diff": diff, "branches": table.to_dict()})
            matches.append(compare_claims(table).to_dict())
            for k in range(1, (k_max if decoder == 1 else 1) + 1):
                signaling.append(signaling_report(decoder, conv, k, shots, seed, threads, table).to_dict())
    return {
        "version": __version__,
        "config": {"shots": shots, "seed": seed, "k_max": k_max},
        "claims": CLAIMS.to_dict(),
        "branch_tables": tables,
        "match_reports": matches,
        "signaling": signaling,
        "reduced_states": reduced_state_report().to_dict(),
    }
