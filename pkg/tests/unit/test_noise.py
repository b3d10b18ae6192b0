"""
Unit tests for noise channels and density-matrix pattern runs.
"""

import numpy as np
import pytest

from oneway.cluster import GraphSpec, build_cluster
from oneway.mbqc import Enumerate, Force, ImpossibleBranchError, PatternError, Sample, run_pattern
from oneway.noise import (
    NoiseError,
    NoiseSpec,
    apply_frame_dm,
    apply_white_noise,
    depolarize,
    run_pattern_dm,
)
from oneway.protocols import RotationJob, computational_rotation_pattern, run_rotation
from oneway.sim.gates import PLUS, ZERO
from oneway.sim.statevec import Ket, fidelity_dm, purity

CHAIN = build_cluster(GraphSpec.chain(4))


class TestChannels:
    """Tests for the white-noise and depolarizing channels."""

    def test_white_noise_fidelity(self):
        """Test that white noise gives fidelity p + (1 - p)/16."""
        for p in (0.0, 0.5, 0.872, 1.0):
            rho = apply_white_noise(CHAIN, p)
            assert fidelity_dm(rho, CHAIN) == pytest.approx(p + (1 - p) / 16)

    def test_white_noise_range(self):
        """Test that a weight outside [0, 1] names white_p."""
        with pytest.raises(NoiseError) as exc_info:
            apply_white_noise(CHAIN, 1.5)
        assert exc_info.value.parameter == "white_p"

    def test_depolarize_to_maximally_mixed(self):
        """Test that full depolarizing leaves the maximally mixed state."""
        rho = depolarize(Ket(ZERO).to_density(), 1, 0.75)
        assert np.allclose(rho.matrix, np.eye(2) / 2)

    def test_depolarize_fidelity(self):
        """Test depolarized fidelity 1 - 2 lambda / 3."""
        lam = 0.1
        rho = depolarize(Ket(PLUS).to_density(), 1, lam)
        assert fidelity_dm(rho, Ket(PLUS)) == pytest.approx(1 - 2 * lam / 3)

    def test_depolarize_zero_is_identity(self):
        """Test that zero strength returns the input unchanged."""
        rho = Ket(PLUS).to_density()
        assert depolarize(rho, 1, 0.0) is rho

    def test_depolarize_range(self):
        """Test that a strength outside [0, 1] is rejected."""
        with pytest.raises(NoiseError):
            depolarize(Ket(PLUS).to_density(), 1, -0.1)


class TestNoiseSpec:
    """Tests for NoiseSpec."""

    def test_default_is_ideal(self):
        """Test which noise specs count as ideal."""
        assert NoiseSpec().is_ideal
        assert NoiseSpec(1.0, (0.0, 0.0, 0.0, 0.0)).is_ideal
        assert not NoiseSpec(0.9).is_ideal
        assert not NoiseSpec(1.0, (0.1, 0.0, 0.0, 0.0)).is_ideal

    def test_depolarizing_length_checked(self):
        """Test that depolarizing strengths need one value per qubit."""
        with pytest.raises(NoiseError, match="depolarizing strengths"):
            NoiseSpec(1.0, (0.1, 0.1)).apply(CHAIN)

    def test_depolarizing_range_checked(self):
        """Test that depolarizing strengths are range-checked."""
        with pytest.raises(NoiseError):
            NoiseSpec(1.0, (0.1, 2.0, 0.0, 0.0))

    def test_apply_stays_physical(self):
        """Test that applied noise keeps unit trace and lowers purity."""
        rho = NoiseSpec(0.9, (0.05, 0.1, 0.0, 0.2)).apply(CHAIN)
        assert np.trace(rho.matrix).real == pytest.approx(1.0)
        assert purity(rho) < 1

    def test_dict_form(self):
        """Test the dict form of a noise spec."""
        spec = NoiseSpec(0.8, (0.1, 0.0, 0.0, 0.0))
        assert NoiseSpec.from_dict(spec.to_dict()) == spec
        assert NoiseSpec.from_dict({}) == NoiseSpec()

    def test_from_dict_rejects_non_mapping(self):
        """Test that from_dict rejects a non-mapping."""
        with pytest.raises(NoiseError):
            NoiseSpec.from_dict([0.9])


class TestRunPatternDm:
    """Tests for the density-matrix runner."""

    def test_pure_input_matches_state_vector_run(self):
        """Test that a pure density run matches the ket run branch by branch."""
        pattern = computational_rotation_pattern(0.4, -1.0)
        pure = run_pattern(CHAIN, pattern)
        mixed = run_pattern_dm(CHAIN.to_density(), pattern)
        assert len(pure) == len(mixed) == 8
        for a, b in zip(pure, mixed):
            assert a.outcomes == b.outcomes
            assert b.probability == pytest.approx(a.probability)
            assert fidelity_dm(b.output_state, a.output_state) == pytest.approx(1.0)
            assert a.frame == b.frame

    def test_probabilities_sum_to_one(self):
        """Test that mixed-state branch probabilities sum to 1."""
        rho = NoiseSpec(0.7, (0.1, 0.2, 0.0, 0.05)).apply(CHAIN)
        branches = run_pattern_dm(rho, computational_rotation_pattern(1.2, 0.3))
        assert sum(b.probability for b in branches) == pytest.approx(1.0)

    def test_sample_mode_rejected(self):
        """Test that density runs reject sample mode."""
        with pytest.raises(PatternError, match="enumerate and force"):
            run_pattern_dm(CHAIN.to_density(), computational_rotation_pattern(0, 0), Sample())

    def test_forced_branch(self):
        """Test that force mode returns the one requested branch."""
        branches = run_pattern_dm(
            CHAIN.to_density(), computational_rotation_pattern(0, 0), Force((0, 1, 0))
        )
        assert len(branches) == 1
        assert branches[0].outcomes == {1: 0, 2: 1, 3: 0}

    def test_forced_impossible_branch(self):
        """Test that forcing an impossible branch raises."""
        rho = Ket.product(PLUS, PLUS, PLUS, PLUS).to_density()
        # Qubit 2 of an unentangled |+> never reads the minus outcome at angle 0.
        with pytest.raises(ImpossibleBranchError):
            run_pattern_dm(rho, computational_rotation_pattern(0.0, 0.0), Force((0, 1, 0)))

    def test_enumerate_is_default(self):
        """Test that enumerate is the default mode."""
        pattern = computational_rotation_pattern(0.1, 0.2)
        rho = CHAIN.to_density()
        assert len(run_pattern_dm(rho, pattern)) == len(run_pattern_dm(rho, pattern, Enumerate()))

    def test_frame_on_density_matches_pure(self):
        """Test that a frame applied to a pure density keeps it pure."""
        branch = run_pattern(CHAIN, computational_rotation_pattern(0.5, 0.9), Force((1, 1, 1)))[0]
        corrected = apply_frame_dm(branch.output_state.to_density(), branch.frame)
        assert purity(corrected) == pytest.approx(1.0)


class TestNoisyProtocols:
    """Tests for protocols run under noise."""

    def test_white_noise_rotation_fidelity(self):
        """Test rotation fidelity p + (1 - p)/2 under white noise."""
        p = 0.872
        report = run_rotation(RotationJob(0.6, 1.3), NoiseSpec(p))
        for branch in report.branches:
            assert branch.fidelity_corrected == pytest.approx(p + (1 - p) / 2)

    def test_ff_off_never_beats_ff_on(self):
        """Test that FF off never beats FF on under noise."""
        noise = NoiseSpec(0.9)
        for alpha, beta in ((0.3, 0.4), (1.2, -0.7), (2.5, 2.0)):
            report = run_rotation(RotationJob(alpha, beta, ff_enabled=False), noise)
            assert report.average(corrected=False) <= report.average(corrected=True) + 1e-12

    def test_sampling_rejected_under_noise(self):
        """Test that noisy protocols reject sample mode."""
        with pytest.raises(PatternError):
            run_rotation(RotationJob(0.1, 0.2), NoiseSpec(0.9), mode=Sample())
