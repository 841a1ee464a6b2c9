"""Hand-derived branch tables, frozen.

Derivations (wire 0 = Bob's qubit):
  decoder1 GH:   CNOT maps psi1..psi4 to |00>, |11>, Phi+, Phi-; H(x)H gives
                 |++>, |-->, Phi+, Psi+; Hadamard meters read |++> and |-->
                 deterministically; Phi+ = (|++>+|-->)/sqrt2 and
                 Psi+ = (|++>-|-->)/sqrt2 give correlated signs 1/2 each.
  decoder1 GC:   the same states read computationally.
  decoder1 XPAR: |00>, |11>, Phi+, Phi- read computationally.
  decoder2 GH:   each block measures the Z(x)Z parity of its data pair by
                 kickback; |00>, |11>, Phi+-, and the restored-then-phase-
                 flipped copies all have Z(x)Z = +1.
  decoder2 GC:   the kickback control is read computationally while it is in
                 |+> or |->, so each meter is a fair coin.
  decoder2 XPAR: each block measures X(x)X. |00>, |11> are not eigenstates
                 (fair coin, collapsing to Phi+/-); the restore + Z then
                 flips the eigenvalue for the second block. Phi+ -> (+,-),
                 Phi- -> (-, then |+> after restore and Z -> Phi+ -> +).
"""
Q = 0.25
H = 0.5

UNIFORM_COMP = {("0", "0"): Q, ("0", "1"): Q, ("1", "0"): Q, ("1", "1"): Q}

EXPECTED = {
    ("decoder1", "GH"): {
        "psi1": {("+", "+"): 1.0},
        "psi2": {("-", "-"): 1.0},
        "psi3": {("+", "+"): H, ("-", "-"): H},
        "psi4": {("+", "+"): H, ("-", "-"): H},
    },
    ("decoder1", "GC"): {
        "psi1": UNIFORM_COMP,
        "psi2": UNIFORM_COMP,
        "psi3": {("0", "0"): H, ("1", "1"): H},
        "psi4": {("0", "1"): H, ("1", "0"): H},
    },
    ("decoder1", "XPAR"): {
        "psi1": {("0", "0"): 1.0},
        "psi2": {("1", "1"): 1.0},
        "psi3": {("0", "0"): H, ("1", "1"): H},
        "psi4": {("0", "0"): H, ("1", "1"): H},
    },
    ("decoder2", "GH"): {b: {("+", "+"): 1.0} for b in ("psi1", "psi2", "psi3", "psi4")},
    ("decoder2", "GC"): {b: UNIFORM_COMP for b in ("psi1", "psi2", "psi3", "psi4")},
    ("decoder2", "XPAR"): {
        "psi1": {("+", "-"): H, ("-", "+"): H},
        "psi2": {("+", "-"): H, ("-", "+"): H},
        "psi3": {("+", "-"): 1.0},
        "psi4": {("-", "+"): 1.0},
    },
}
