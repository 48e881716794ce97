"""Cross-validation of the sector-basis dynamics against the site-basis route."""

import math

import numpy as np
import pytest

from spinswap.lindblad import Rates, assemble, evolve
from spinswap.oracle import (
    MAX_TOTAL_SITES,
    FullState,
    compare_trajectories,
    embed_symmetric,
    full_space_evolve,
    oracle_test_state,
    project_to_symmetric,
    species_basis,
)
from spinswap.sector_basis import DoubledIndex, SymmetricDensity, trace


class TestSpeciesBasis:
    def test_four_site_shapes(self):
        shapes = {two_j: v.shape for two_j, v in species_basis(4).items()}
        assert shapes == {0: (1, 2, 16), 2: (3, 3, 16), 4: (5, 1, 16)}

    @pytest.mark.parametrize("n", [1, 2, 3, 4])
    def test_orthonormal_and_complete(self, n):
        rows = []
        for v in species_basis(n).values():
            rows.append(v.reshape(-1, 2**n))
        stacked = np.vstack(rows)
        assert stacked.shape[0] == 2**n
        np.testing.assert_allclose(stacked @ stacked.T, np.eye(2**n), atol=1e-12)

    def test_levels_count_excitations(self):
        # the top sector of two sites holds |down down>, the triplet pair,
        # and |up up> at levels 0, 1, 2
        top = species_basis(2)[2][:, 0, :]
        np.testing.assert_allclose(top[0], [1, 0, 0, 0], atol=1e-12)
        np.testing.assert_allclose(np.abs(top[1]), [0, 1, 1, 0] / np.sqrt(2), atol=1e-12)
        np.testing.assert_allclose(np.abs(top[2]), [0, 0, 0, 1], atol=1e-12)


class TestFullState:
    def test_shape_checked(self):
        with pytest.raises(ValueError, match="does not match"):
            FullState(np.zeros((4, 4)), 1, 2)

    def test_valid_shape(self):
        state = FullState(np.zeros((8, 8)), 1, 2)
        assert state.n_a == 1 and state.n_b == 2


class TestFullSpaceEvolve:
    def test_no_generator_is_constant(self):
        initial = embed_symmetric(oracle_test_state(2), 2, 2)
        states = full_space_evolve(initial, Rates(gamma_int=0.0), [0.0, 0.4, 1.0])
        for state in states:
            np.testing.assert_allclose(state.matrix, initial.matrix, atol=1e-12)

    def test_single_pair_rabi_oscillation(self):
        # one site per species: |up_A down_B> and |down_A up_B> exchange
        # population as sin^2(gamma t)
        matrix = np.zeros((4, 4))
        matrix[2, 2] = 1.0
        times = np.linspace(0.0, math.pi / 2, 7)
        states = full_space_evolve(FullState(matrix, 1, 1), Rates(gamma_int=1.0), times)
        for t, state in zip(times, states):
            assert state.matrix[1, 1].real == pytest.approx(math.sin(t) ** 2, abs=1e-8)
        np.testing.assert_allclose(states[-1].matrix[1, 1], 1.0, atol=1e-8)

    def test_site_cap_enforced(self):
        sites = MAX_TOTAL_SITES + 1
        oversized = FullState(np.zeros((2**sites, 2**sites)), sites - 1, 1)
        with pytest.raises(ValueError, match="dense-route cap"):
            full_space_evolve(oversized, Rates(), [0.0, 1.0])

    def test_register_size_mismatch_rejected(self):
        initial = embed_symmetric(oracle_test_state(2), 2, 2)
        with pytest.raises(ValueError, match="does not match the register"):
            full_space_evolve(initial, Rates(kappa_minus=0.1, n_a=4), [0.0, 0.1])


class TestProjection:
    def test_polarized_product(self):
        matrix = np.zeros((16, 16))
        matrix[0, 0] = 1.0
        projected, residual = project_to_symmetric(FullState(matrix, 2, 2))
        assert residual == pytest.approx(0.0, abs=1e-12)
        assert projected.entries == {DoubledIndex(2, 2, 0, 0, 0): pytest.approx(1.0)}

    def test_singlet_lives_in_zero_sector(self):
        psi = np.zeros(16)
        psi[8] = 1 / math.sqrt(2)
        psi[4] = -1 / math.sqrt(2)
        projected, residual = project_to_symmetric(FullState(np.outer(psi, psi), 2, 2))
        assert residual == pytest.approx(0.0, abs=1e-12)
        assert set(projected.entries) == {DoubledIndex(0, 2, 0, 0, 0)}
        assert projected.entries[DoubledIndex(0, 2, 0, 0, 0)] == pytest.approx(1.0)

    @pytest.mark.parametrize("n", [2, 3])
    def test_embed_project_roundtrip(self, n):
        rho = oracle_test_state(n)
        projected, residual = project_to_symmetric(embed_symmetric(rho, n, n))
        assert residual <= 1e-12
        for idx, value in rho.entries.items():
            assert projected.entries[idx] == pytest.approx(value, abs=1e-12)

    def test_embedding_preserves_trace(self):
        rho = oracle_test_state(2)
        embedded = embed_symmetric(rho, 2, 2)
        assert np.trace(embedded.matrix) == pytest.approx(trace(rho), abs=1e-12)


class TestCompareTrajectories:
    def test_identical_sequences(self):
        states = [oracle_test_state(2), oracle_test_state(3)]
        assert compare_trajectories(states, states) == 0.0

    def test_deviation_is_largest_entry(self):
        lhs = SymmetricDensity({DoubledIndex(2, 2, 0, 0, 0): 1.0})
        rhs = SymmetricDensity({DoubledIndex(2, 2, 0, 0, 0): 0.75})
        assert compare_trajectories([lhs], [rhs]) == pytest.approx(0.25)

    def test_length_mismatch_rejected(self):
        states = [oracle_test_state(2)]
        with pytest.raises(ValueError, match="sample counts"):
            compare_trajectories(states, states * 2)


class TestOracleLock:
    """Reduced propagation against brute force over identical registers."""

    def run_both_routes(self, rates, times):
        seed = oracle_test_state(2)
        reduced = evolve(seed, assemble(seed, rates), times[-1], sample_times=times)
        full_states = full_space_evolve(embed_symmetric(seed, 2, 2), rates, times)
        projected = []
        worst_residual = 0.0
        for state in full_states:
            rho, residual = project_to_symmetric(state)
            projected.append(rho)
            worst_residual = max(worst_residual, residual)
        return compare_trajectories(reduced.states, projected), worst_residual, full_states

    def test_coherent_agreement(self):
        times = np.array([0.0, 0.3, 0.7])
        deviation, residual, _ = self.run_both_routes(Rates(gamma_int=1.0), times)
        assert deviation <= 1e-8
        assert residual <= 1e-9

    def test_all_channels_agreement(self):
        rates = Rates(
            gamma_int=1.0,
            gamma_m=0.03,
            gamma_j=-0.01,
            gamma_z=0.1,
            gamma_minus=0.1,
            kappa_z=0.1,
            kappa_minus=0.1,
            n_a=2,
        )
        times = np.array([0.0, 0.2, 0.5])
        deviation, residual, full_states = self.run_both_routes(rates, times)
        assert deviation <= 1e-8
        assert residual <= 1e-9
        # dissipative evolution must keep the dense state physical
        final = full_states[-1].matrix
        np.testing.assert_allclose(final, final.conj().T, atol=1e-9)
        assert np.linalg.eigvalsh(final).min() >= -1e-9


class TestOracleTestState:
    def test_unit_trace_with_coherences(self):
        rho = oracle_test_state(2)
        assert trace(rho) == pytest.approx(1.0)
        assert any(not idx.is_diagonal for idx in rho.entries)

    def test_too_few_sites_rejected(self):
        with pytest.raises(ValueError, match="two sites"):
            oracle_test_state(1)
