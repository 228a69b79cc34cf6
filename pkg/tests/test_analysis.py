import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lockspring.analysis import (
    IDLE,
    LOADING,
    LOCK_DROP,
    RELEASED_RETURN,
    AnalysisConfig,
    efficiency,
    estimate_stiffness,
    integrate_work,
    locking_force_summary,
    mass_energy_density,
    segment_trace,
)
from lockspring.clutch_model import CapstanGeometry, SolenoidSpec
from lockspring.errors import UndefinedEfficiencyError, ValidationError
from lockspring.spring_mechanism import MassBudget, SpringSpec
from lockspring.workloop import WorkLoopTrace

from synthetic import K, polyline, triangle_fixture


class TestIntegrateWork:
    def test_ramp_exact(self):
        x = np.linspace(0, 90, 9001)
        assert integrate_work(x, K * x) == pytest.approx(59.94, rel=1e-13)

    def test_constant_deflection(self):
        assert integrate_work([5.0, 5.0, 5.0], [1.0, 100.0, 3.0]) == 0.0

    def test_triangle_drop(self):
        x = np.linspace(50, 47, 31)
        f = np.linspace(740, 0, 31)
        assert integrate_work(x, f) == pytest.approx(-1.11, rel=1e-13)

    def test_too_few(self):
        with pytest.raises(ValidationError):
            integrate_work([1.0], [1.0])

    def test_shape_mismatch(self):
        with pytest.raises(ValidationError):
            integrate_work([1.0, 2.0], [1.0])


class TestSegmentation:
    def test_prototype_protocol_counts(self, default_trace):
        segs = segment_trace(default_trace)
        kinds = [s.kind for s in segs]
        assert kinds.count(LOCK_DROP) == 5
        assert kinds.count(RELEASED_RETURN) == 1
        assert kinds.count(LOADING) == 5

    def test_ideal_lock_no_drops(self, ideal_trace):
        assert all(s.kind != LOCK_DROP for s in segment_trace(ideal_trace))

    def test_partition(self, default_trace):
        segs = segment_trace(default_trace)
        assert segs[0].start == 0
        assert segs[-1].stop == len(default_trace) - 1
        assert all(a.stop == b.start for a, b in zip(segs, segs[1:]))
        assert all(a.kind != b.kind for a, b in zip(segs, segs[1:]))

    def test_net_work_consistency(self, default_trace):
        segs = segment_trace(default_trace)
        net = integrate_work(default_trace.deflection_mm, default_trace.force_N)
        assert sum(s.work_J for s in segs) == pytest.approx(net, abs=1e-12)
        gross = sum(abs(s.work_J) for s in segs)
        led = default_trace.ledger
        assert abs(net - (led.work_in_J - led.drop_work_J - led.returned_J)) < 1e-3 * gross

    def test_single_injected_triangle(self):
        trace, area = triangle_fixture([50.0], [3.0])
        drops = [s for s in segment_trace(trace) if s.kind == LOCK_DROP]
        assert len(drops) == 1
        assert -drops[0].work_J == pytest.approx(area, rel=0.01)
        assert area == pytest.approx(1.11)

    def test_shallow_decline_is_return(self):
        trace = polyline([(0, 0), (40, K * 40), (0, 0)])
        kinds = {s.kind for s in segment_trace(trace)}
        assert kinds == {LOADING, RELEASED_RETURN}

    def test_idle(self):
        trace = polyline([(0, 0), (20, K * 20), (20, K * 20), (0, 0)])
        assert [s.kind for s in segment_trace(trace)] == [LOADING, IDLE, RELEASED_RETURN]

    def test_threshold_configurable(self):
        trace, _ = triangle_fixture([50.0], [3.0])
        # drop slope is 740/3 = 16.7 k, so a 20 k threshold reclassifies it
        segs = segment_trace(trace, AnalysisConfig(slope_threshold_multiple=20.0))
        assert all(s.kind != LOCK_DROP for s in segs)

    def test_empty_and_short(self):
        empty = WorkLoopTrace([], [], [], [])
        with pytest.raises(ValidationError, match="no samples"):
            segment_trace(empty)
        with pytest.raises(ValidationError, match="too short"):
            segment_trace(WorkLoopTrace([0.0], [0.0], [0.0], [True]))

    def test_stiffness_estimate(self, default_trace):
        assert estimate_stiffness(default_trace) == pytest.approx(K)


class TestEfficiency:
    def test_prototype_protocol(self, default_trace):
        rep = efficiency(default_trace)
        assert 0.74 <= rep.eta <= 0.84
        assert len(rep.events) == 5
        assert rep.events[-1].retained_force_N >= 1000
        assert rep.e_spring_J > 50
        assert rep.eta == 1 - rep.e_loss_J / rep.e_spring_J

    def test_frozen_default_values(self, default_trace):
        # regression values of the committed calibration
        rep = efficiency(default_trace)
        assert rep.eta == pytest.approx(0.79999, abs=5e-5)
        assert rep.e_spring_J == pytest.approx(75.2, abs=0.1)
        assert rep.events[-1].retained_force_N == pytest.approx(1180.40, abs=0.01)

    def test_events_cumulative(self, default_trace):
        rep = efficiency(default_trace)
        cum = rep.cumulative_stored_J
        assert all(b > a for a, b in zip(cum, cum[1:]))
        assert rep.events[-1].cumulative_eta == pytest.approx(rep.eta)
        assert sum(e.loading_work_J for e in rep.events) == pytest.approx(rep.e_spring_J)

    def test_single_event(self):
        trace, _ = triangle_fixture([50.0], [3.0])
        rep = efficiency(trace)
        assert rep.e_spring_J == pytest.approx(18.5, rel=1e-12)
        assert rep.e_loss_J == pytest.approx(1.11, rel=1e-3)
        assert rep.eta == pytest.approx(0.94, abs=1e-4)
        assert rep.events[0].event_eta == pytest.approx(0.94, abs=1e-4)

    def test_lossless(self):
        assert efficiency(polyline([(0, 0), (60, K * 60), (0, 0)])).eta == 1.0

    def test_no_storage(self):
        with pytest.raises(UndefinedEfficiencyError):
            efficiency(polyline([(10, K * 10), (0, 0)]))

    def test_time_rescale_invariance(self, default_trace):
        base = efficiency(default_trace).eta
        for c in (1e-3, 0.37, 2.0, 1e4):
            assert abs(efficiency(default_trace.with_time_scaled(c)).eta - base) <= 1e-12

    def test_idle_append_invariance(self, default_trace):
        n = 50
        t = np.concatenate([default_trace.time_s, default_trace.time_s[-1] + 0.01 * np.arange(1, n + 1)])
        x = np.concatenate([default_trace.deflection_mm, np.full(n, default_trace.deflection_mm[-1])])
        f = np.concatenate([default_trace.force_N, np.full(n, default_trace.force_N[-1])])
        e = np.concatenate([default_trace.clutch_engaged, np.zeros(n, dtype=bool)])
        padded = WorkLoopTrace(t, x, f, e, dict(default_trace.metadata))
        assert efficiency(padded).eta == efficiency(default_trace).eta

    def test_downsample_segment_works(self, default_trace):
        # the one-sample re-contact idle may vanish on subsampling
        full = [s for s in segment_trace(default_trace) if s.kind != IDLE]
        half = [s for s in segment_trace(default_trace.subsample(2)) if s.kind != IDLE]
        assert [s.kind for s in full] == [s.kind for s in half]
        for a, b in zip(full, half):
            assert b.work_J == pytest.approx(a.work_J, rel=0.01)

    def test_nominal_stiffness_from_config(self, default_trace):
        rep = efficiency(default_trace, AnalysisConfig(nominal_stiffness_N_per_mm=14.8))
        assert rep.nominal_stiffness_N_per_mm == 14.8
        assert rep.eta == efficiency(default_trace).eta


@settings(max_examples=100, deadline=None)
@given(
    # drop fraction below 1/3 keeps every drop steeper than the 3k threshold
    st.lists(st.tuples(st.floats(5, 15), st.floats(0.02, 0.3)), min_size=1, max_size=5),
    st.booleans(),
)
def test_triangle_fixtures(legs, release):
    locks, drops, x = [], [], 0.0
    for gain, frac in legs:
        L = x + gain
        b = frac * L
        if L > 90:
            break
        locks.append(L)
        drops.append(b)
        x = L - b
    trace, expected_loss = triangle_fixture(locks, drops, release=release)
    rep = efficiency(trace)
    e_spring = sum(0.5 * K * (L * L - (p - q) ** 2) / 1000
                   for L, p, q in zip(locks, [0.0] + locks[:-1], [0.0] + drops[:-1]))
    assert rep.e_spring_J == pytest.approx(e_spring, rel=1e-9)
    assert rep.e_loss_J == pytest.approx(expected_loss, rel=0.01)
    assert abs(rep.eta - (1 - expected_loss / e_spring)) < 0.005
    assert len(rep.events) == len(locks)


class TestMassEnergyDensity:
    def test_capstan(self):
        assert mass_energy_density(MassBudget(1.32, 0.62)) == pytest.approx(0.68, abs=0.005)

    def test_reference(self):
        assert mass_energy_density(MassBudget(0.098, 0.057)) == pytest.approx(0.632, abs=5e-4)

    def test_zero_lock_rejected(self):
        with pytest.raises(ValidationError):
            MassBudget(1.32, 0.0)

    @settings(max_examples=200, deadline=None)
    @given(st.floats(1e-3, 1e3), st.floats(1e-3, 1e3), st.floats(1e-3, 1e3))
    def test_scale_invariant(self, s, l, c):
        a = mass_energy_density(MassBudget(s, l))
        assert 0 < a < 1
        assert mass_energy_density(MassBudget(c * s, c * l)) == pytest.approx(a, rel=1e-12)


def test_locking_force_summary():
    out = locking_force_summary(CapstanGeometry(), SolenoidSpec(), SpringSpec())
    assert out["max_spring_force_N"] == pytest.approx(1332.0)
    assert out["control_force_ratio"] == pytest.approx(0.65 / 1332)
    assert out["meets_lambda_F_target"] is True
