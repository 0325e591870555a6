"""Dispersion, winding, edge states, gap tracking, adiabaticity."""

import numpy as np
import pytest

import topopump as tp
from topopump.errors import NearDegeneracyError, TrackingError
from topopump.protocol import DriveSchedule


class TestDispersion:
    def test_gap_closes_at_transition(self):
        lo, hi = tp.dispersion(np.pi, tp.CouplingPoint(1.0, 1.0))
        assert lo == pytest.approx(0.0, abs=1e-15) and hi == pytest.approx(0.0, abs=1e-15)

    def test_band_edge_at_zone_center(self):
        lo, hi = tp.dispersion(0.0, tp.CouplingPoint(1.0, 0.6))
        assert (lo, hi) == (pytest.approx(-1.6), pytest.approx(1.6))

    def test_staggered_onsite_opens_gap(self):
        lo, hi = tp.dispersion(np.pi, tp.CouplingPoint(1.0, 0.6, va=0.5, vb=-0.5))
        assert hi == pytest.approx(np.sqrt(0.41))
        assert lo == pytest.approx(-np.sqrt(0.41))

    def test_requires_staggered_convention(self):
        with pytest.raises(ValueError):
            tp.dispersion(0.0, tp.CouplingPoint(1.0, 0.6, va=0.5, vb=0.1))


class TestWinding:
    @pytest.mark.parametrize("j1,j2,expected", [(1.0, 0.6, 0), (0.6, 1.0, 1), (0.0, 1.0, 1)])
    def test_phases(self, j1, j2, expected):
        w, raw = tp.winding_number(tp.CouplingPoint(j1, j2))
        assert w == expected
        assert abs(raw - expected) < 1e-6

    def test_transition_point_rejected(self):
        with pytest.raises(ValueError, match="origin"):
            tp.winding_number(tp.CouplingPoint(1.0, 1.0))

    def test_requires_chiral_symmetry(self):
        with pytest.raises(ValueError):
            tp.winding_number(tp.CouplingPoint(1.0, 0.6, va=0.2, vb=-0.2))

    def test_quantization_over_parameter_scan(self):
        for j1 in (0.1, 0.45, 0.8, 1.3, 1.9):
            w, raw = tp.winding_number(tp.CouplingPoint(j1, 1.0), n_k=2048)
            assert w == (0 if j1 > 1.0 else 1)
            assert abs(raw - w) < 1e-6


class TestEigendecompose:
    def test_bloch_pair(self):
        snap = tp.eigendecompose(tp.build_bloch_hamiltonian(np.pi, tp.CouplingPoint(1.0, 0.6)))
        assert np.allclose(snap.eigenvalues, [-0.4, 0.4])

    def test_odd_zero_mode_matches_analytic(self):
        spec = tp.odd_chain(20)
        snap = tp.eigendecompose(tp.build_ssh_hamiltonian(spec, tp.CouplingPoint(0.6, 1.0)))
        idx = int(np.argmin(np.abs(snap.eigenvalues)))
        assert abs(snap.eigenvalues[idx]) < 1e-10
        overlap = abs(np.vdot(snap.eigenvectors[:, idx], tp.analytic_gap_state(spec, 0.6, 1.0)))
        assert overlap > 0.9999

    def test_trivial_phase_has_empty_gap(self):
        snap = tp.eigendecompose(tp.build_ssh_hamiltonian(tp.even_chain(20), tp.CouplingPoint(2.0, 1.0)))
        inside = np.abs(snap.eigenvalues) < 0.9
        assert not inside.any()

    def test_orthonormal_and_residual(self):
        spec = tp.interface_chain(10)
        h = tp.build_hamiltonian(spec, tp.CouplingPoint(0.7, 1.0, 0.4, -0.4))
        snap = tp.eigendecompose(h)
        v = snap.eigenvectors
        assert np.abs(v.conj().T @ v - np.eye(spec.n_sites)).max() < 1e-10
        resid = h.matrix @ v - v * snap.eigenvalues[None, :]
        assert np.linalg.norm(resid, axis=0).max() < 1e-9

    def test_reconstruction(self):
        h = tp.build_hamiltonian(tp.interface_chain(6), tp.CouplingPoint(0.3, 0.9, 0.2, -0.2))
        snap = tp.eigendecompose(h)
        v = snap.eigenvectors
        back = (v * snap.eigenvalues[None, :]) @ v.conj().T
        assert np.abs(back - h.matrix).max() < 1e-9

    def test_chiral_pairing_without_onsite(self):
        snap = tp.eigendecompose(tp.build_ssh_hamiltonian(tp.even_chain(10), tp.CouplingPoint(0.7, 1.0)))
        vals = np.sort(snap.eigenvalues)
        assert np.allclose(vals, -vals[::-1], atol=1e-10)

    def test_lossy_matrix_sorted_by_real_part(self):
        spec = tp.interface_chain(4)
        h = tp.build_hamiltonian(spec, tp.CouplingPoint(0.5, 1.0), loss=tp.uniform_loss(spec, 1e-3))
        snap = tp.eigendecompose(h)
        assert np.all(np.diff(snap.eigenvalues.real) >= -1e-12)
        assert np.allclose(snap.eigenvalues.imag, -1e-3, atol=1e-12)

    def test_dimension_cap(self):
        with pytest.raises(ValueError, match="cap"):
            tp.eigendecompose(np.eye(8), max_dim=4)

    def test_gauge_fixing_deterministic(self):
        h = tp.build_hamiltonian(tp.interface_chain(6), tp.CouplingPoint(0.5, 1.0, 0.1, -0.1))
        a = tp.eigendecompose(h).eigenvectors
        b = tp.eigendecompose(h).eigenvectors
        assert np.array_equal(a, b)
        pivots = a[np.argmax(np.abs(a), axis=0), np.arange(a.shape[1])]
        assert np.all(pivots.real > 0)
        assert np.abs(pivots.imag).max() < 1e-12


class TestEdgeStates:
    def test_sublattice_support_and_norm(self):
        pair = tp.analytic_edge_states(8, 0.5, 1.0)
        assert np.all(pair.left[1::2] == 0.0)
        assert np.all(pair.right[0::2] == 0.0)
        assert np.linalg.norm(pair.left) == pytest.approx(1.0)
        assert np.linalg.norm(pair.right) == pytest.approx(1.0)

    def test_hybrid_energy_small_chain(self):
        # frozen from a dense eigensolve cross-check of the projected pair
        pair = tp.analytic_edge_states(3, 0.6, 1.0)
        assert pair.hybrid_energy == pytest.approx(0.1450053705692803, rel=1e-12)

    def test_projected_pair_energy_matches_formula(self):
        # numerical <L|H|R> against the closed form, for a range of sizes
        for n in range(2, 11):
            for ratio in (0.1, 0.3, 0.5, 0.7, 0.9):
                pair = tp.analytic_edge_states(n, ratio, 1.0)
                h = tp.build_ssh_hamiltonian(tp.even_chain(n), tp.CouplingPoint(ratio, 1.0)).matrix
                coupling = abs(pair.left @ h @ pair.right)
                assert coupling == pytest.approx(pair.hybrid_energy, rel=1e-12)

    def test_fully_dimerized_limit(self):
        pair = tp.analytic_edge_states(6, 0.0, 1.0)
        assert pair.hybrid_energy == 0.0
        assert pair.left[0] == 1.0 and np.all(pair.left[1:] == 0.0)

    def test_decay_with_size(self):
        energies = [tp.analytic_edge_states(n, 0.6, 1.0).hybrid_energy for n in (5, 10, 20)]
        assert energies[0] > energies[1] > energies[2]
        assert energies[2] / energies[1] == pytest.approx(0.6**10, rel=1e-2)

    def test_trivial_phase_rejected(self):
        with pytest.raises(ValueError):
            tp.analytic_edge_states(5, 1.2, 1.0)


class TestGapState:
    def test_interface_limits(self):
        spec = tp.interface_chain(20)
        g = tp.analytic_gap_state(spec, 1.0, 0.0)
        assert abs(g[spec.hub_index]) == pytest.approx(1.0)
        g = tp.analytic_gap_state(spec, 0.0, 1.0)
        assert g[0] == pytest.approx(1 / np.sqrt(2))
        assert g[-1] == pytest.approx(1 / np.sqrt(2))
        assert np.abs(g[1:-1]).max() == 0.0

    def test_router_limits(self):
        spec = tp.router(4, 10)
        g = tp.analytic_gap_state(spec, 0.0, 1.0)
        ends = list(spec.output_sites)
        assert np.allclose(g[ends], 0.5)

    def test_large_contrast_does_not_overflow(self):
        spec = tp.interface_chain(20)
        g = tp.analytic_gap_state(spec, 1.0, 1e-200)
        assert np.isfinite(g).all()
        assert abs(g[spec.hub_index]) == pytest.approx(1.0)


class TestGapTracking:
    def test_energy_follows_onsite_stream(self):
        spec = tp.interface_chain(10)
        for kind, alpha in (("cosine", None), ("exponential", 3.2)):
            s = DriveSchedule(kind, 1.0, alpha=alpha)
            t_grid = np.linspace(0.0, 1.0, 101)
            track = tp.gap_tracking(spec, s, t_grid)
            va = np.array([s.couplings(t).va for t in t_grid])
            assert np.abs(track.energies - va).max() < 1e-9

    def test_initial_state_is_hub(self):
        spec = tp.interface_chain(10)
        s = DriveSchedule("exponential", 1.0, alpha=3.2)
        track = tp.gap_tracking(spec, s, np.array([0.0, 0.01]))
        assert abs(track.states[0][spec.hub_index]) > 1 - 1e-12

    def test_min_gap_grows_with_sharpness(self):
        spec = tp.interface_chain(10)
        t_grid = np.linspace(0.0, 1.0, 201)
        gaps = [
            tp.gap_tracking(spec, DriveSchedule("exponential", 1.0, alpha=a), t_grid).min_gap
            for a in (2.0, 10.0)
        ]
        assert gaps[1] > gaps[0]

    def test_coarse_grid_reported(self):
        spec = tp.interface_chain(10)
        s = DriveSchedule("cosine", 1.0)
        with pytest.raises(TrackingError):
            tp.gap_tracking(spec, s, np.array([0.0, 0.5, 1.0]))


class TestAdiabaticity:
    def test_frozen_drive_gives_zero(self):
        spec = tp.interface_chain(10)
        s = DriveSchedule("three_step", 100.0, t_op=20.0, j1_0=1.0, j2_0=0.1)
        assert tp.adiabaticity_metric(spec, s, 50.0) == pytest.approx(0.0, abs=1e-12)

    def test_small_along_successful_transfer(self):
        spec = tp.interface_chain(10)
        s = DriveSchedule("exponential", 100.0, alpha=3.2)
        values = [tp.adiabaticity_metric(spec, s, t) for t in np.linspace(1.0, 99.0, 21)]
        assert max(values) < 0.5

    def test_scales_inversely_with_total_time(self):
        spec = tp.interface_chain(10)
        s1 = DriveSchedule("exponential", 100.0, alpha=3.2)
        s2 = DriveSchedule("exponential", 200.0, alpha=3.2)
        for frac in (0.2, 0.5, 0.8):
            a = tp.adiabaticity_metric(spec, s1, frac * 100.0)
            b = tp.adiabaticity_metric(spec, s2, frac * 200.0)
            assert a / b == pytest.approx(2.0, rel=1e-9)

    def test_unbounded_derivative_reported(self):
        spec = tp.interface_chain(10)
        s = DriveSchedule("exponential", 100.0, alpha=3.2)
        with pytest.raises(ValueError, match="unbounded"):
            tp.adiabaticity_metric(spec, s, 0.0)
