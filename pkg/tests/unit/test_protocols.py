"""
Unit tests for the rotation, C-NOT and C-Phase protocols.
"""

import math

import numpy as np
import pytest

from oneway.cluster import ClusterError
from oneway.mbqc import Force, Plane
from oneway.protocols import (
    CnotJob,
    CphaseJob,
    Oracle,
    RotationJob,
    cnot_pattern,
    conditional_targets,
    control_label,
    cphase_circuit_state,
    cphase_output_state,
    cphase_pattern,
    rotation_pattern,
    rotation_reference,
    run_cnot,
    run_cphase,
    run_rotation,
)
from oneway.sim.gates import PLUS, H, X, Z, rx, rz
from oneway.sim.statevec import Ket

GRID_12 = [2 * math.pi * i / 12 for i in range(12)]
GRID_8 = [2 * math.pi * i / 8 for i in range(8)]


class TestRotationJob:
    """Tests for RotationJob construction."""

    def test_only_orderings_a_and_b(self):
        """Test that rotation jobs reject ordering c."""
        with pytest.raises(ClusterError):
            RotationJob(0.0, 0.0, ordering="c")

    def test_dict_form(self):
        """Test the dict form of a rotation job."""
        job = RotationJob(0.5, 0.25, "b", False, True, (0, 1, 0))
        data = job.to_dict()
        assert data["branch_filter"] == [0, 1, 0]
        assert RotationJob.from_dict(data) == job


class TestRotation:
    """Tests for the single-qubit rotation."""

    @pytest.mark.parametrize("ordering", ["a", "b"])
    def test_feed_forward_is_deterministic(self, ordering):
        """Test that every corrected branch reaches fidelity 1."""
        for alpha in GRID_12:
            for beta in GRID_12:
                report = run_rotation(RotationJob(alpha, beta, ordering))
                assert len(report.branches) == 8
                for branch in report.branches:
                    assert abs(branch.fidelity_corrected - 1) < 1e-10
                    assert abs(branch.fidelity_branch - 1) < 1e-10

    def test_branches_are_equally_likely(self):
        """Test that all eight branches have probability 1/8."""
        report = run_rotation(RotationJob(0.3, 1.4))
        for branch in report.branches:
            assert branch.probability == pytest.approx(1 / 8)

    def test_reference_carries_branch_byproduct(self):
        """Test that a branch reference is the ideal output with X^s2 Z^s3 applied."""
        ideal = H @ rx(0.4) @ rz(0.8) @ PLUS
        reference = rotation_reference(0.8, 0.4, 0, 1, 1, "a")
        assert reference.same_state(Ket(X @ Z @ ideal))
        assert not reference.same_state(Ket(ideal))

    def test_ordering_b_reference_has_extra_z(self):
        """Test that ordering b adds a Z to the reference."""
        plain = rotation_reference(0.4, 0.8, 0, 0, 0, "a")
        extra = rotation_reference(0.4, 0.8, 0, 0, 0, "b")
        expected = Ket(H @ rx(0.8) @ rz(0.4) @ PLUS)
        assert plain.same_state(expected)
        assert not extra.same_state(expected)

    def test_ff_off_bit_flip_branch(self):
        """Test that an uncorrected X branch has fidelity 0."""
        report = run_rotation(RotationJob(0.0, 0.0, "a", ff_enabled=False))
        # Ordering a: s2 drives X, s3 drives Z on the output.
        flipped = [b for b in report.branches if b.outcomes[2] == 1 and b.outcomes[3] == 0]
        assert flipped
        for branch in flipped:
            assert branch.fidelity_uncorrected < 1e-10
            assert report.fidelity(branch) < 1e-10

    def test_ff_off_average_is_lower(self):
        """Test that FF off lowers the average fidelity."""
        report = run_rotation(RotationJob(0.7, 1.1, ff_enabled=False))
        assert report.average(corrected=False) < report.average(corrected=True)
        assert report.average() == report.average(corrected=False)

    def test_adaptivity_is_needed(self):
        """Test that fixed angles miss the target on some branches."""
        report = run_rotation(RotationJob(math.pi / 4, math.pi / 2, "a", adaptive=False))
        assert min(b.fidelity_corrected for b in report.branches) < 0.999

    def test_branch_filter(self):
        """Test that a branch filter keeps one branch."""
        report = run_rotation(RotationJob(0.2, 0.3, branch_filter=(1, 0, 1)))
        assert len(report.branches) == 1
        assert report.branches[0].outcomes == {1: 1, 2: 0, 3: 1}

    def test_lab_bases(self):
        """Test that lab steps stay equatorial."""
        pattern = rotation_pattern(RotationJob(math.pi / 4, 0.0, "b"))
        assert pattern.steps[0].plane is Plane.EQUATORIAL


class TestCnot:
    """Tests for the C-NOT protocol."""

    @pytest.mark.parametrize("oracle", [Oracle.HADAMARD, Oracle.IDENTITY])
    @pytest.mark.parametrize("alpha", [math.pi / 2, math.pi / 4])
    def test_every_branch_matches_closed_form(self, oracle, alpha):
        """Test that each branch matches its closed form."""
        report = run_cnot(CnotJob(alpha, oracle))
        assert len(report.branches) == 4
        for branch in report.branches:
            assert abs(branch.fidelity - 1) < 1e-10
            assert abs(branch.fidelity_corrected - 1) < 1e-10
            for readout in branch.readouts:
                assert abs(readout.target_fidelity - 1) < 1e-10

    def test_all_sixteen_branches_ideal(self):
        """Test that every (oracle, alpha, s1, s4) branch reaches fidelity 1."""
        seen = set()
        for oracle in (Oracle.HADAMARD, Oracle.IDENTITY):
            for alpha in (math.pi / 2, math.pi / 4):
                for branch in run_cnot(CnotJob(alpha, oracle)).branches:
                    seen.add((oracle, alpha, branch.outcomes[1], branch.outcomes[4]))
                    assert branch.fidelity == pytest.approx(1.0, abs=1e-10)
        assert len(seen) == 16

    def test_uncompensated_target_carries_hadamard(self):
        """Test the uncompensated target against its Hadamard reference."""
        report = run_cnot(CnotJob(math.pi / 4, Oracle.HADAMARD, compensate_ht=False))
        for branch in report.branches:
            assert abs(branch.fidelity - 1) < 1e-10

    def test_hadamard_oracle_control_readout(self):
        """Test the control readout for oracle H."""
        report = run_cnot(CnotJob(math.pi / 2, Oracle.HADAMARD))
        for branch in report.branches:
            assert len(branch.readouts) == 1
            readout = branch.readouts[0]
            # s1 = 0 reads |1>_c, s1 = 1 reads |0>_c.
            assert readout.bit == 1 - branch.outcomes[1]
            assert readout.probability == pytest.approx(1.0)
            assert branch.control_purity == pytest.approx(1.0)

    def test_identity_oracle_splits_control(self):
        """Test that the identity oracle splits the control."""
        report = run_cnot(CnotJob(math.pi / 2, Oracle.IDENTITY))
        for branch in report.branches:
            assert [r.bit for r in branch.readouts] == [0, 1]
            assert [r.label for r in branch.readouts] == ["|0>_c=|l>_kB", "|1>_c=|r>_kB"]
            for readout in branch.readouts:
                assert readout.probability == pytest.approx(0.5)
            assert branch.control_purity < 0.999

    def test_control_label(self):
        """Test the control readout labels."""
        assert control_label(0) == "|0>_c=|l>_kB"
        assert control_label(1) == "|1>_c=|r>_kB"

    def test_pattern_is_lab_frame(self):
        """Test the lab-frame C-NOT pattern qubits."""
        pattern = cnot_pattern(CnotJob(0.3))
        assert pattern.measured == (1, 4)
        assert pattern.outputs == (2, 3)

    def test_job_dict_form(self):
        """Test the dict form of a C-NOT job."""
        assert CnotJob(0.5, "id").to_dict() == {
            "alpha": 0.5,
            "o_choice": "id",
            "compensate_ht": True,
            "branch_filter": None,
        }

    def test_forced_branch(self):
        """Test that a forced C-NOT branch is returned alone."""
        report = run_cnot(CnotJob(math.pi / 4, branch_filter=(0, 1)))
        assert len(report.branches) == 1
        assert report.branches[0].outcomes == {1: 0, 4: 1}


class TestCphase:
    """Tests for the C-Phase protocol."""

    def test_output_state_matches_circuit(self):
        """Test that the pattern output matches the circuit."""
        rng = np.random.default_rng(17)
        for alpha, beta in rng.uniform(-math.pi, math.pi, size=(20, 2)):
            assert cphase_output_state(alpha, beta).same_state(cphase_circuit_state(alpha, beta))

    def test_grid_matches_closed_form(self):
        """Test every grid branch against the closed form."""
        for alpha in GRID_8:
            for beta in GRID_8:
                report = run_cphase(CphaseJob(alpha, beta))
                assert len(report.branches) == 4
                for branch in report.branches:
                    assert abs(branch.fidelity - 1) < 1e-10
                    assert abs(branch.fidelity_corrected - 1) < 1e-10
                    assert abs(branch.conditional["+"] - 1) < 1e-10
                    assert abs(branch.conditional["-"] - 1) < 1e-10

    def test_conditional_average(self):
        """Test the conditional averages."""
        report = run_cphase(CphaseJob(0.6, -1.3))
        assert report.average_conditional("+") == pytest.approx(1.0)
        assert report.average_conditional("-") == pytest.approx(1.0)

    def test_control_probabilities(self):
        """Test that control probabilities sum to 1."""
        report = run_cphase(CphaseJob(0.6, -1.3))
        for branch in report.branches:
            total = branch.control_probability["+"] + branch.control_probability["-"]
            assert total == pytest.approx(1.0)

    def test_conditional_targets_differ(self):
        """Test that the two conditional targets differ."""
        targets = conditional_targets(0.4, 0.9)
        assert not targets["+"].same_state(targets["-"])

    def test_pattern_outputs(self):
        """Test the C-Phase pattern outputs and labels."""
        pattern = cphase_pattern(CphaseJob(0.0, 0.0))
        assert pattern.outputs == (3, 4)
        assert [step.label for step in pattern.steps] == ["pi_A", "pi_B"]

    def test_forced_branch(self):
        """Test a forced C-Phase branch."""
        report = run_cphase(CphaseJob(0.2, 0.4), mode=Force((1, 1)))
        assert len(report.branches) == 1
        assert abs(report.branches[0].fidelity - 1) < 1e-10
