from pathlib import Path as FsPath

import numpy as np
import pytest

from qsig import density as dm
from qsig.circuits import (
    BranchState,
    Circuit,
    Cnot,
    Convention,
    Gate,
    Meter,
    branch_input,
    build,
    build_decoder1,
    build_decoder2,
    disentangle_index,
    parse_circuit,
    run_density,
    run_exact,
    run_sampled,
)
from qsig.qcore import BasisKind, GateKind, NamedState, apply_single, named_state, reduced_density

from conftest import S2, assert_dist
from expected_tables import EXPECTED

HAD = BasisKind.HADAMARD
COMP = BasisKind.COMPUTATIONAL
H = GateKind.H
GOLDEN = FsPath(__file__).parent / "golden"


def test_decoder1_builders():
    assert build_decoder1(Convention.GH).ops == (
        Cnot(0, 1), Gate(H, 0), Gate(H, 1), Meter(0, HAD, "m_a"), Meter(1, HAD, "m_b"))
    assert build_decoder1(Convention.GC).ops == (
        Cnot(0, 1), Gate(H, 0), Gate(H, 1), Meter(0, COMP, "m_a"), Meter(1, COMP, "m_b"))
    assert build_decoder1(Convention.XPAR).ops == (Cnot(0, 1), Meter(0, COMP, "m_a"), Meter(1, COMP, "m_b"))
    assert all(build_decoder1(c).width == 2 for c in Convention)


def test_decoder2_drawn_sequence():
    c = build_decoder2(Convention.GH)
    assert c.width == 5
    assert c.ops == (
        Cnot(0, 1), Gate(H, 0), Gate(H, 1), Gate(H, 2), Cnot(2, 0), Cnot(2, 1), Meter(2, HAD, "m1"),
        Gate(H, 0), Gate(H, 1), Cnot(0, 1), Gate(GateKind.Z, 0), Cnot(0, 3),
        Gate(H, 0), Gate(H, 3), Gate(H, 4), Cnot(4, 0), Cnot(4, 3), Meter(4, HAD, "m2"),
    )
    assert len(c.ops) == 18
    gc = build_decoder2(Convention.GC)
    assert [type(o) for o in gc.ops] == [type(o) for o in c.ops]
    assert all(m.basis is COMP for m in gc.meters)


def test_decoder2_xpar():
    assert build_decoder2(Convention.XPAR).ops == (
        Cnot(0, 1), Gate(H, 2), Cnot(2, 0), Cnot(2, 1), Meter(2, HAD, "m1"),
        Cnot(0, 1), Gate(GateKind.Z, 0), Cnot(0, 3),
        Gate(H, 4), Cnot(4, 0), Cnot(4, 3), Meter(4, HAD, "m2"),
    )


def test_z_follows_disentangling_cnot():
    for conv in Convention:
        c = build_decoder2(conv)
        i = disentangle_index(c)
        assert c.ops[i - 1] == Cnot(0, 1)
        assert c.ops[i] == Gate(GateKind.Z, 0)


def test_circuit_validation():
    with pytest.raises(ValueError, match="already-measured"):
        Circuit(2, [Meter(0, COMP, "a"), Gate(H, 0)])
    with pytest.raises(ValueError, match="duplicate"):
        Circuit(2, [Meter(0, COMP, "a"), Meter(1, COMP, "a")])
    with pytest.raises(ValueError, match="outside width"):
        Circuit(2, [Cnot(0, 2)])


def test_branch_input_examples():
    np.testing.assert_allclose(branch_input(BranchState.PSI4, 2).amplitudes, [S2, 0, -S2, 0], atol=1e-15)
    s = branch_input(BranchState.PSI1, 5)
    assert s.dim == 32 and s.amplitudes[0] == 1
    np.testing.assert_allclose(branch_input(BranchState.PSI3, 2).amplitudes, [S2, 0, S2, 0], atol=1e-15)


def test_run_exact_examples():
    d = run_exact(build_decoder1(Convention.GH), branch_input(BranchState.PSI1, 2)).distribution()
    assert_dist(d, {("+", "+"): 1.0})
    d = run_exact(build_decoder1(Convention.GC), branch_input(BranchState.PSI1, 2)).distribution()
    assert_dist(d, EXPECTED[("decoder1", "GC")]["psi1"])
    d = run_exact(build_decoder2(Convention.GH), branch_input(BranchState.PSI4, 5)).distribution()
    assert_dist(d, {("+", "+"): 1.0})


@pytest.mark.parametrize("cid", ["decoder1", "decoder2"])
@pytest.mark.parametrize("conv", list(Convention))
@pytest.mark.parametrize("branch", list(BranchState))
def test_branch_distributions(cid, conv, branch):
    c = build(cid, conv)
    sv = run_exact(c, branch_input(branch, c.width)).distribution()
    assert abs(sum(sv.values()) - 1) < 1e-12
    assert_dist(sv, EXPECTED[(cid, conv.value)][branch.value])
    dens = run_density(c, dm.DensityMatrix.pure(branch_input(branch, c.width))).distribution()
    assert sv.max_abs_diff(dens) < 1e-12


def test_run_exact_width_mismatch():
    with pytest.raises(ValueError):
        run_exact(build_decoder1(Convention.GH), branch_input(BranchState.PSI1, 3))


@pytest.mark.parametrize("seed", range(10))
def test_run_sampled_deterministic_examples(seed):
    r = np.random.default_rng(seed)
    assert run_sampled(build_decoder1(Convention.GH), branch_input(BranchState.PSI2, 2), r) == {"m_a": "-", "m_b": "-"}
    assert run_sampled(build_decoder2(Convention.XPAR), branch_input(BranchState.PSI3, 5), r) == {"m1": "+", "m2": "-"}
    assert run_sampled(build_decoder2(Convention.XPAR), branch_input(BranchState.PSI4, 5), r) == {"m1": "-", "m2": "+"}


@pytest.mark.parametrize("cid,conv,branch", [
    ("decoder1", Convention.GC, BranchState.PSI1),
    ("decoder1", Convention.GH, BranchState.PSI3),
    ("decoder2", Convention.XPAR, BranchState.PSI2),
    ("decoder2", Convention.GC, BranchState.PSI4),
])
def test_run_sampled_matches_exact(cid, conv, branch):
    c = build(cid, conv)
    state = branch_input(branch, c.width)
    exact = run_exact(c, state).distribution()
    shots = 100_000 if cid == "decoder1" else 20_000
    r = np.random.default_rng(99)
    counts = {}
    for _ in range(shots):
        o = run_sampled(c, state, r)
        key = tuple(o[lb] for lb in c.meter_labels)
        counts[key] = counts.get(key, 0) + 1
    for k in set(exact) | set(counts):
        p = exact[k]
        sigma = np.sqrt(max(p * (1 - p), 1e-12) / shots)
        assert abs(counts.get(k, 0) / shots - p) <= 5 * sigma + 1e-12


@pytest.mark.parametrize("branch", [BranchState.PSI1, BranchState.PSI2, BranchState.PSI3])
def test_restoration_under_gh(branch):
    c = build_decoder2(Convention.GH)
    upto = disentangle_index(c)
    paths = run_exact(c.prefix(upto), branch_input(branch, 5)).paths
    assert paths and all(p.probability > 0 for p in paths)
    ref = branch.state().amplitudes
    for p in paths:
        rho0 = reduced_density(p.state, [0])
        np.testing.assert_allclose(rho0, np.outer(ref, ref.conj()), rtol=0, atol=1e-12)


def test_z_turns_restored_psi3_into_psi4():
    out = apply_single(BranchState.PSI3.state(), GateKind.Z, 0)
    np.testing.assert_array_equal(out.amplitudes, BranchState.PSI4.state().amplitudes)


@pytest.mark.parametrize("branch", list(BranchState))
def test_decoder1_gh_equals_xpar_under_relabel(branch):
    """H boxes followed by Hadamard meters undo each other."""
    gh = run_exact(build_decoder1(Convention.GH), branch_input(branch, 2)).distribution()
    xp = run_exact(build_decoder1(Convention.XPAR), branch_input(branch, 2)).distribution()
    assert gh.max_abs_diff(xp.relabel({"0": "+", "1": "-"})) < 1e-12


def test_decoder1_gc_differs_from_xpar():
    gc = run_exact(build_decoder1(Convention.GC), branch_input(BranchState.PSI1, 2)).distribution()
    xp = run_exact(build_decoder1(Convention.XPAR), branch_input(BranchState.PSI1, 2)).distribution()
    assert gc.max_abs_diff(xp) > 0.5


@pytest.mark.parametrize("branch", list(BranchState))
def test_xpar_first_meter_reads_xx_parity(branch):
    c = build_decoder2(Convention.XPAR)
    state = branch_input(branch, 5)
    s = run_exact(c.prefix(1), state).paths[0].state
    rho = reduced_density(s, [0, 1])
    x = GateKind.X.matrix
    xx = float(np.trace(rho @ np.kron(x, x)).real)
    d = run_exact(c, state).distribution()
    p_minus = sum(p for o, p in d.items() if o[0] == "-")
    assert abs(p_minus - (1 - xx) / 2) < 1e-12


def test_bell_state_helpers_consistent_with_named_states():
    s = run_exact(build_decoder1(Convention.GH).prefix(1), branch_input(BranchState.PSI4, 2)).paths[0].state
    np.testing.assert_allclose(s.amplitudes, named_state(NamedState.PHI_MINUS).amplitudes, atol=1e-15)


@pytest.mark.parametrize("cid", ["decoder1", "decoder2"])
@pytest.mark.parametrize("conv", list(Convention))
def test_text_roundtrip(cid, conv):
    c = build(cid, conv)
    back = parse_circuit(c.to_text())
    assert back == c


@pytest.mark.parametrize("cid,conv", [("decoder1", "GH"), ("decoder2", "GH"), ("decoder2", "XPAR")])
def test_text_golden(cid, conv):
    expected = (GOLDEN / f"{cid}_{conv.lower()}.txt").read_text()
    assert build(cid, Convention(conv)).to_text() == expected


def test_parse_without_header_infers_width():
    c = parse_circuit("CNOT 0 1\nH 2\nMETER 2 HAD m1\n")
    assert c.width == 3 and c.convention is None
    assert c.ops[-1] == Meter(2, HAD, "m1")


@pytest.mark.parametrize("line", ["CNOT 0", "FOO 1", "METER 0 XYZ a", "H x"])
def test_parse_errors(line):
    with pytest.raises(ValueError, match="line 1"):
        parse_circuit(line)
