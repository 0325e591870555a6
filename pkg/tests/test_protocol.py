"""Drive schedules: endpoints, symmetry, derivatives, sampling."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

import topopump as tp
from topopump.lattice import DisorderKind, DisorderSymmetry
from topopump.protocol import DriveSchedule, derive_seed


class TestCosine:
    def test_endpoints(self):
        c = tp.cosine_schedule(0.0, 1.0, 100.0)
        assert (c.j1, c.j2, c.vb) == (1.0, 0.0, 0.0)
        c = tp.cosine_schedule(50.0, 1.0, 100.0)
        assert c.j1 == pytest.approx(0.5) and c.j2 == pytest.approx(0.5)
        assert c.vb == pytest.approx(1.0)
        c = tp.cosine_schedule(100.0, 1.0, 100.0)
        assert c.j1 == pytest.approx(0.0, abs=1e-15) and c.j2 == pytest.approx(1.0)
        assert c.vb == pytest.approx(0.0, abs=1e-12)

    def test_outside_window_rejected(self):
        with pytest.raises(ValueError):
            tp.cosine_schedule(-1.0, 1.0, 100.0)
        with pytest.raises(ValueError):
            tp.cosine_schedule(101.0, 1.0, 100.0)


class TestExponential:
    def test_endpoints(self):
        c = tp.exponential_schedule(0.0, 1.0, 100.0, 3.2)
        assert (c.j1, c.j2, c.vb) == (1.0, 0.0, 0.0)
        c = tp.exponential_schedule(100.0, 1.0, 100.0, 3.2)
        assert c.j1 == pytest.approx(0.0, abs=1e-15)
        assert c.j2 == pytest.approx(1.0)
        # onsite ramp evaluated at doubled argument saturates above the amplitude
        expected = np.sqrt((1 - np.exp(-6.4)) / (1 - np.exp(-3.2)))
        assert c.vb == pytest.approx(expected, rel=1e-12)
        assert expected == pytest.approx(1.0201775355193654, rel=1e-12)
        assert c.va == -c.vb

    def test_small_alpha_tends_to_linear_ramp(self):
        c = tp.exponential_schedule(50.0, 1.0, 100.0, 1e-9)
        assert c.j1 == pytest.approx(0.5, rel=1e-6)
        assert c.j2 == pytest.approx(0.5, rel=1e-6)

    def test_monotone_streams(self):
        s = DriveSchedule("exponential", 100.0, alpha=3.2)
        t = np.linspace(0.5, 99.5, 500)
        j1, j2, _, _ = s.values(t)
        assert np.all(np.diff(j1) < 0)
        assert np.all(np.diff(j2) > 0)

    def test_symmetric_variant_returns_to_zero(self):
        s = DriveSchedule("exponential", 100.0, alpha=3.2, vb_symmetric=True)
        *_, vb_end = s.values(100.0)
        assert vb_end == pytest.approx(0.0, abs=1e-12)
        *_, vb_mid = s.values(50.0)
        assert vb_mid == pytest.approx(1.0)

    def test_alpha_required(self):
        with pytest.raises(ValueError):
            DriveSchedule("exponential", 100.0)


class TestThreeStep:
    def test_piecewise_values(self):
        s = DriveSchedule("three_step", 100.0, t_op=20.0, j1_0=1.0, j2_0=0.2)
        j1, j2, va, vb = s.values(0.0)
        assert (j1, j2, va, vb) == (1.0, 0.2, 0.0, 0.0)
        j1, j2, _, _ = s.values(50.0)  # plateau
        assert (j1, j2) == (1.0, 1.0)
        j1, j2, _, _ = s.values(100.0)
        assert j1 == pytest.approx(0.0, abs=1e-15) and j2 == 1.0

    def test_window_validation(self):
        with pytest.raises(ValueError):
            DriveSchedule("three_step", 100.0, t_op=60.0, j1_0=1.0, j2_0=0.0)
        with pytest.raises(ValueError):
            DriveSchedule("three_step", 100.0, t_op=10.0, j1_0=0.5, j2_0=0.5)


@pytest.mark.parametrize("kind,kwargs", [
    ("cosine", {}),
    ("exponential", {"alpha": 3.2}),
    ("exponential", {"alpha": 8.0}),
])
def test_boundary_conditions(kind, kwargs):
    s = DriveSchedule(kind, 80.0, **kwargs)
    j1_0, j2_0, _, _ = s.values(0.0)
    j1_T, j2_T, _, _ = s.values(80.0)
    assert j2_0 == 0.0 and j1_T == pytest.approx(0.0, abs=1e-15)
    assert j1_0 == pytest.approx(1.0) and j2_T == pytest.approx(1.0)


@pytest.mark.parametrize("kind,kwargs", [("cosine", {}), ("exponential", {"alpha": 3.2})])
def test_time_mirror_symmetry(kind, kwargs):
    s = DriveSchedule(kind, 123.0, **kwargs)
    t = np.linspace(0.0, 123.0, 77)
    j1, j2, _, _ = s.values(t)
    j1m, j2m, _, _ = s.values(123.0 - t)
    assert np.allclose(j1, j2m, atol=1e-12)
    assert np.allclose(j2, j1m, atol=1e-12)


@settings(max_examples=100, deadline=None)
@given(
    frac=st.floats(1e-3, 1.0 - 1e-3),
    kind=st.sampled_from(["cosine", "exponential"]),
    alpha=st.floats(0.5, 10.0),
)
def test_derivatives_match_finite_differences(frac, kind, alpha):
    t_star = 90.0
    s = DriveSchedule(kind, t_star, alpha=alpha if kind == "exponential" else None)
    t = frac * t_star
    h = t_star * 1e-6
    if t - h < 0 or t + h > t_star:
        return
    got = np.array(s.derivatives(t))
    lo = np.array(s.values(t - h))
    hi = np.array(s.values(t + h))
    fd = (hi - lo) / (2 * h)
    # floor at the FD cancellation noise (eps * |f| / h ~ 1e-12 for O(1) streams)
    scale = np.maximum(np.abs(fd), 1e-6)
    assert np.all(np.abs(got - fd) / scale < 1e-5)


def test_three_step_derivatives_match_fd_inside_pieces():
    s = DriveSchedule("three_step", 100.0, t_op=20.0, j1_0=1.0, j2_0=0.1)
    for t in (5.0, 50.0, 90.0):
        got = np.array(s.derivatives(t))
        h = 1e-6
        fd = (np.array(s.values(t + h)) - np.array(s.values(t - h))) / (2 * h)
        assert np.allclose(got, fd, atol=1e-6)


class TestSampling:
    def test_seed_derivation_is_pure_and_spread(self):
        a = derive_seed(42, 7)
        assert a == derive_seed(42, 7)
        seeds = {derive_seed(42, i) for i in range(1000)}
        assert len(seeds) == 1000

    def test_uniformity_of_offsets(self):
        # free offsets across realizations should be uniform on [-w, w]
        spec = tp.interface_chain(10)
        w = 0.4
        deltas = []
        for i in range(100):
            r = tp.sample_disorder(
                spec, DisorderKind.DIAGONAL, DisorderSymmetry.MIRROR, w,
                derive_seed(2024, i), granularity="per_element",
            )
            free = r.site_factors[: spec.hub_index + 1] - 1.0
            deltas.extend(free)
        result = stats.kstest(np.array(deltas), stats.uniform(loc=-w, scale=2 * w).cdf)
        assert result.pvalue > 0.01

    def test_router_mirror_replicates_branches(self):
        spec = tp.router(4, 10)
        r = tp.sample_disorder(
            spec, DisorderKind.OFF_DIAGONAL, DisorderSymmetry.MIRROR, 0.3, 77,
            granularity="per_element",
        )
        per_branch = spec.n_cells
        first = r.bond_factors[:per_branch]
        for b in range(1, 4):
            assert np.array_equal(r.bond_factors[b * per_branch : (b + 1) * per_branch], first)
