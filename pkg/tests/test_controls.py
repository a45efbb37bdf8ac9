import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from occubound.bounds import CoefficientBox
from occubound.controls import (
    ADVERSARIAL_PRESETS,
    FeedbackControl,
    MollificationParams,
    make_extremal_control,
    preset_control,
    signum,
    validate_admissible,
)
from occubound.errors import DomainError

boxes = st.tuples(
    st.floats(0.2, 2.0), st.floats(0.0, 2.0), st.floats(0.0, 3.0)
).map(lambda t: CoefficientBox(t[0], t[0] + t[1], t[2]))


def test_signum_convention():
    assert signum(0.0) == -1.0
    assert signum(-3.0) == -1.0
    assert signum(1e-300) == 1.0
    np.testing.assert_array_equal(signum(np.array([-1.0, 0.0, 2.0])),
                                  [-1.0, -1.0, 1.0])


def test_mollification_requires_positive_m():
    with pytest.raises(DomainError):
        MollificationParams(0)


class TestExtremalControl:
    box = CoefficientBox(1.0, 2.0, 1.5)
    y = 0.3
    m = MollificationParams(10)

    def ctrl(self):
        return make_extremal_control(self.box, self.y, self.m)

    def test_sigma_plateaus(self):
        c = self.ctrl()
        assert c.diffusion(0.0, self.y) == self.box.a
        assert c.diffusion(0.0, self.y + 0.05) == self.box.a      # inside 1/M
        assert c.diffusion(0.0, self.y + 0.2) == self.box.b       # beyond 2/M
        assert c.diffusion(0.0, self.y - 5.0) == self.box.b

    def test_sigma_ramp_midpoint(self):
        c = self.ctrl()
        mid = self.y + 1.5 / self.m.M
        assert c.diffusion(0.0, mid) == pytest.approx(
            0.5 * (self.box.a + self.box.b))

    def test_drift_magnitude_on_outer_plateau(self):
        c = self.ctrl()
        k, b = self.box.k, self.box.b
        assert c.drift(0.0, self.y + 1.0) == pytest.approx(-k * b * b)
        assert c.drift(0.0, self.y - 1.0) == pytest.approx(+k * b * b)

    def test_drift_at_level_uses_sign_convention(self):
        # signum(0) = -1 so the drift at the level pushes upward at k a^2
        c = self.ctrl()
        assert c.drift(0.0, self.y) == pytest.approx(
            self.box.k * self.box.a ** 2)

    def test_admissible_by_construction(self):
        rep = validate_admissible(self.box, self.ctrl(), [0.0, 1.0],
                                  np.linspace(-4, 4, 1601))
        assert rep.ok
        assert rep.worst_sigma_violation == 0.0
        assert rep.worst_drift_violation <= 1e-15

    @settings(max_examples=40)
    @given(boxes, st.integers(1, 200), st.floats(-3, 3))
    def test_admissible_for_any_box(self, box, M, y):
        c = make_extremal_control(box, y, MollificationParams(M))
        rep = validate_admissible(box, c, [0.0], np.linspace(y - 3, y + 3, 301))
        assert rep.ok


class TestValidateAdmissible:
    box = CoefficientBox(1.0, 2.0, 1.0)

    def test_reports_constructed_breach(self):
        cap = self.box.k * self.box.b ** 2
        breach = FeedbackControl(
            drift=lambda t, x: np.full_like(np.asarray(x, float), cap + 0.1),
            diffusion=lambda t, x: np.full_like(np.asarray(x, float), self.box.b),
            label="breach")
        rep = validate_admissible(self.box, breach, [0.0], np.linspace(-1, 1, 21))
        assert not rep.ok
        assert rep.worst_drift_violation == pytest.approx(0.1, abs=1e-12)
        assert rep.violations

    def test_quiet_control_passes(self):
        quiet = FeedbackControl(
            drift=lambda t, x: np.zeros_like(np.asarray(x, float)),
            diffusion=lambda t, x: np.full_like(np.asarray(x, float), self.box.a),
            label="quiet")
        assert validate_admissible(self.box, quiet, [0.0],
                                   np.linspace(-1, 1, 21)).ok

    def test_empty_grid_rejected(self):
        quiet = preset_control("brownian", self.box)
        with pytest.raises(DomainError):
            validate_admissible(self.box, quiet, [], [0.0])


@pytest.mark.parametrize("name", ADVERSARIAL_PRESETS + ("extremal",))
def test_presets_are_admissible(name):
    box = CoefficientBox(0.8, 1.7, 2.0)
    ctrl = preset_control(name, box, level=0.25, m=MollificationParams(20))
    rep = validate_admissible(box, ctrl, np.linspace(0.0, 1.0, 7),
                              np.linspace(-3, 3, 601))
    assert rep.ok, (name, rep.worst_sigma_violation, rep.worst_drift_violation)


def test_unknown_preset_rejected():
    with pytest.raises(DomainError):
        preset_control("nope", CoefficientBox(1, 1, 0))


def test_bang_bang_switches_in_time():
    box = CoefficientBox(1.0, 2.0, 1.0)
    ctrl = preset_control("bang-bang", box)
    early = float(np.asarray(ctrl.drift(0.05, np.array([0.0]))))
    later = float(np.asarray(ctrl.drift(0.15, np.array([0.0]))))
    assert early == -later != 0.0


class TestControlFromTable:
    def test_interpolates_and_extrapolates_flat(self):
        from occubound.controls import control_from_table

        ctrl = control_from_table({
            "label": "vee",
            "sigma": {"x": [-1.0, 0.0, 1.0], "value": [2.0, 1.0, 2.0]},
            "drift": {"x": [-1.0, 1.0], "value": [0.5, -0.5]},
        })
        xs = np.array([-5.0, -0.5, 0.0, 0.5, 5.0])
        np.testing.assert_allclose(ctrl.diffusion(0.0, xs),
                                   [2.0, 1.5, 1.0, 1.5, 2.0])
        np.testing.assert_allclose(ctrl.drift(0.0, xs),
                                   [0.5, 0.25, 0.0, -0.25, -0.5])
        assert ctrl.sigma_max == 2.0
        assert ctrl.label == "vee"

    def test_zero_drift_default(self):
        from occubound.controls import control_from_table

        ctrl = control_from_table({"sigma": {"x": [0.0], "value": [1.0]}})
        assert float(np.asarray(ctrl.drift(0.0, np.array([3.0])))) == 0.0

    def test_malformed_tables_rejected(self):
        from occubound.controls import control_from_table

        with pytest.raises(DomainError):
            control_from_table({"drift": {"x": [0.0], "value": [0.0]}})
        with pytest.raises(DomainError):
            control_from_table({"sigma": {"x": [1.0, 0.0], "value": [1.0, 1.0]}})
        with pytest.raises(DomainError):
            control_from_table({"sigma": {"x": [0.0]}})
