"""
Property-based tests for patterns, protocols and stabilizer fidelity.
"""

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from oneway.cluster import (
    ORDERINGS,
    GraphSpec,
    build_cluster,
    stabilizer_fidelity,
    stabilizer_group,
    to_lab,
)
from oneway.mbqc import lab_pattern, run_pattern
from oneway.protocols import (
    CnotJob,
    CphaseJob,
    Oracle,
    RotationJob,
    computational_rotation_pattern,
    run_cnot,
    run_cphase,
    run_rotation,
)
from oneway.sim.statevec import DensityMatrix, fidelity_dm

CHAIN = GraphSpec.chain(4)

angle_strategy = st.floats(min_value=-np.pi, max_value=np.pi, allow_nan=False)
ordering_strategy = st.sampled_from(sorted(ORDERINGS))


@settings(max_examples=50, deadline=None)
@given(alpha=angle_strategy, beta=angle_strategy, ordering=st.sampled_from(["a", "b"]))
def test_rotation_is_deterministic_after_correction(alpha, beta, ordering):
    """
    Property: with feed-forward every rotation branch yields the target.
    """
    report = run_rotation(RotationJob(alpha, beta, ordering))
    assert abs(sum(b.probability for b in report.branches) - 1) < 1e-10
    for branch in report.branches:
        assert abs(branch.fidelity_corrected - 1) < 1e-10
        assert abs(branch.fidelity_branch - 1) < 1e-10


@settings(max_examples=30, deadline=None)
@given(alpha=angle_strategy, oracle=st.sampled_from(list(Oracle)), compensate=st.booleans())
def test_cnot_branches_match_closed_form(alpha, oracle, compensate):
    """
    Property: every C-NOT branch matches its own closed form.
    """
    report = run_cnot(CnotJob(alpha, oracle, compensate))
    for branch in report.branches:
        assert abs(branch.fidelity - 1) < 1e-10


@settings(max_examples=30, deadline=None)
@given(alpha=angle_strategy, beta=angle_strategy)
def test_cphase_conditional_targets(alpha, beta):
    """
    Property: the corrected C-Phase target depends on the control as expected.
    """
    report = run_cphase(CphaseJob(alpha, beta))
    for branch in report.branches:
        assert abs(branch.conditional["+"] - 1) < 1e-10
        assert abs(branch.conditional["-"] - 1) < 1e-10


@settings(max_examples=30, deadline=None)
@given(alpha=angle_strategy, beta=angle_strategy, ordering=st.sampled_from(["a", "b"]))
def test_lab_rewrite_preserves_statistics(alpha, beta, ordering):
    """
    Property: a pattern and its lab rewrite give the same branch probabilities.
    """
    chain = build_cluster(CHAIN)
    pattern = computational_rotation_pattern(alpha, beta)
    rewritten = lab_pattern(pattern, ORDERINGS[ordering])
    computational = run_pattern(chain, pattern)
    lab = run_pattern(to_lab(chain, ORDERINGS[ordering]), rewritten)
    for c, l in zip(computational, lab):
        assert c.bits == l.bits
        assert abs(c.probability - l.probability) < 1e-10


@settings(max_examples=200, deadline=None)
@given(seed=st.integers(min_value=0, max_value=2**32 - 1), ordering=ordering_strategy)
def test_stabilizer_fidelity_equals_direct_fidelity(seed, ordering):
    """
    Property: the stabilizer average equals <C|rho|C> for any four-qubit rho.
    """
    rng = np.random.default_rng(seed)
    g = rng.normal(size=(16, 16)) + 1j * rng.normal(size=(16, 16))
    m = g @ g.conj().T
    m = (m + m.conj().T) / 2
    rho = DensityMatrix(m / np.trace(m).real)
    target = to_lab(build_cluster(CHAIN), ORDERINGS[ordering])
    group = stabilizer_group(CHAIN, local=ORDERINGS[ordering])
    assert abs(stabilizer_fidelity(rho, group) - fidelity_dm(rho, target)) < 1e-10
