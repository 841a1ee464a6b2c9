from __future__ import annotations

from collections.abc import Mapping
from math import isfinite

Outcome = tuple  # tuple of str labels, one per measured wire or meter

SUM_TOL = 1e-12


class OutcomeDistribution(Mapping):
    """Probabilities over outcome label tuples.

    Labels missing from the mapping have probability 0.
    """

    def __init__(self, probs: Mapping[Outcome, float]):
        clean = {}
        for key, p in probs.items():
            p = float(p)
            if not isfinite(p) or p < -SUM_TOL:
                raise ValueError(f"invalid probability {p!r} for {key!r}")
            clean[tuple(key)] = max(p, 0.0)
        total = sum(clean.values())
        if abs(total - 1.0) > SUM_TOL:
            raise ValueError(f"probabilities sum to {total!r}, not 1")
        self._probs = dict(sorted(clean.items()))

    def __getitem__(self, key):
        return self._probs.get(tuple(key), 0.0)

    def __iter__(self):
        return iter(self._probs)

    def __len__(self):
        return len(self._probs)

    def __contains__(self, key):
        return tuple(key) in self._probs

    def support(self, tol: float = 0.0) -> list[Outcome]:
        return [k for k, p in self._probs.items() if p > tol]

    def mass(self, outcomes) -> float:
        return sum(self[o] for o in set(map(tuple, outcomes)))

    def relabel(self, mapping: Mapping[str, str]) -> "OutcomeDistribution":
        out: dict = {}
        for key, p in self._probs.items():
            nk = tuple(mapping.get(x, x) for x in key)
            out[nk] = out.get(nk, 0.0) + p
        return OutcomeDistribution(out)

    def max_abs_diff(self, other: "OutcomeDistribution") -> float:
        keys = set(self) | set(other)
        return max((abs(self[k] - other[k]) for k in keys), default=0.0)

    def to_dict(self) -> dict[str, float]:
        return {",".join(k): p for k, p in self._probs.items()}

    def __repr__(self):
        body = ", ".join(f"{','.join(k)}: {p:.6g}" for k, p in self._probs.items())
        return f"OutcomeDistribution({{{body}}})"


def mixture(weighted) -> OutcomeDistribution:
    """Convex combination of ``(weight, OutcomeDistribution)`` pairs."""
    out: dict = {}
    for w, dist in weighted:
        for k, p in dist.items():
            out[k] = out.get(k, 0.0) + w * p
    return OutcomeDistribution(out)


def product(dists) -> OutcomeDistribution:
    """Joint distribution of independent outcomes; keys are concatenated."""
    out = {(): 1.0}
    for dist in dists:
        out = {a + b: pa * pb for a, pa in out.items() for b, pb in dist.items()}
    return OutcomeDistribution(out)
