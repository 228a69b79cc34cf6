import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lockspring.analysis import integrate_work
from lockspring.clutch_model import CapstanGeometry
from lockspring.errors import CableFailureError, RangeError, ValidationError
from lockspring.spring_mechanism import (
    CableSpec,
    SpringSpec,
    TensionerSpec,
    baseline_cable_tension,
    cable_stretch,
    pulley_angle,
    spring_force,
    stored_energy,
)


def test_full_compression(spring):
    assert spring_force(spring, 90.0) == pytest.approx(1332.0)
    assert stored_energy(spring, 90.0) == pytest.approx(59.94)


def test_midpoints(spring):
    assert spring_force(spring, 50.0) == pytest.approx(740.0)
    assert stored_energy(spring, 50.0) == pytest.approx(18.5)
    assert stored_energy(spring, 0.0) == 0.0


@pytest.mark.parametrize("x", [-0.1, 90.0001, math.inf])
def test_out_of_range(spring, x):
    with pytest.raises(RangeError):
        spring_force(spring, x)
    with pytest.raises(RangeError):
        stored_energy(spring, x)


def test_spec_validation():
    with pytest.raises(ValidationError) as exc:
        SpringSpec(stiffness_N_per_mm=0)
    assert exc.value.field == "stiffness_N_per_mm"
    with pytest.raises(ValidationError):
        SpringSpec(max_deflection_mm=400)
    with pytest.raises(ValidationError):
        CableSpec(elongation_fraction_at_break=0.5)
    with pytest.raises(ValidationError):
        CableSpec(safety_factor=0.5)
    with pytest.raises(ValidationError):
        TensionerSpec(torque_mNm=-1)


@settings(max_examples=200, deadline=None)
@given(st.floats(0.1, 100), st.floats(0, 90))
def test_energy_is_integral_of_force(k, x):
    spec = SpringSpec(stiffness_N_per_mm=k)
    xs = np.linspace(0, x, 7)
    forces = [spring_force(spec, v) for v in xs]
    if x > 0:
        assert integrate_work(xs, forces) == pytest.approx(stored_energy(spec, x), rel=1e-12)


class TestCable:
    def test_stretch_at_1000N(self, cable):
        assert cable_stretch(cable, 1000.0) == pytest.approx(5.925925925925926, rel=1e-14)

    def test_stretch_at_break(self, cable):
        assert cable_stretch(cable, 2700.0) == pytest.approx(16.0)

    def test_zero(self, cable):
        assert cable_stretch(cable, 0.0) == 0.0

    def test_failure(self, cable):
        with pytest.raises(CableFailureError):
            cable_stretch(cable, 2700.5)

    def test_negative(self, cable):
        with pytest.raises(RangeError):
            cable_stretch(cable, -1.0)

    @settings(max_examples=200, deadline=None)
    @given(st.floats(0, 1350), st.floats(0, 1350))
    def test_linear(self, a, b):
        c = CableSpec()
        assert cable_stretch(c, a + b) == pytest.approx(cable_stretch(c, a) + cable_stretch(c, b), abs=1e-12)


class TestKinematics:
    def test_tensioner(self, prototype_geometry):
        assert baseline_cable_tension(TensionerSpec(), prototype_geometry) == pytest.approx(145 / 12)

    def test_pulley_angle(self, prototype_geometry):
        assert pulley_angle(90.0, prototype_geometry) == pytest.approx(7.5)
        assert pulley_angle(0.0, prototype_geometry) == 0.0
        with pytest.raises(RangeError):
            pulley_angle(-1.0, prototype_geometry)

    @settings(max_examples=200, deadline=None)
    @given(st.floats(0, 100), st.floats(0, 100), st.floats(1, 50))
    def test_pulley_angle_additive(self, a, b, r):
        g = CapstanGeometry(pulley_radius_mm=r)
        assert pulley_angle(a + b, g) == pytest.approx(pulley_angle(a, g) + pulley_angle(b, g), abs=1e-12)
