import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from piezobeam.controllers import (
    ControlInput,
    ControllerGains,
    ControlMode,
    bstar_integral,
    compute_controls,
    simpson_slope_rate,
    tip_observations,
)
from piezobeam.core import BeamState, GridSpec, InitialCondition, MaterialParams, ModelTag, make_initial_state
from piezobeam.models import assemble


def state_with(tag, grid, **arrays):
    z = np.zeros(grid.size)
    fields = {n: arrays.get(n, z) for n in tag.fields}
    rates = {n: arrays.get(n + "dot", z) for n in tag.fields}
    return BeamState(tag, 0.0, fields, rates)


def test_slope_rate_trivial():
    g = GridSpec(64)
    x = g.x
    assert simpson_slope_rate(x**2, np.zeros_like(x), g) == 0.0
    assert simpson_slope_rate(x, np.zeros_like(x), g) == 0.0


def test_slope_rate_quadratic():
    errs = []
    for N in (32, 64, 128):
        g = GridSpec(N)
        w = g.x**2
        errs.append(abs(simpson_slope_rate(w, w, g, ghost_left=False) - 8.0 / 3.0))
    assert errs[1] < 2e-3
    # one-sided end slopes are exact on quadratics; remaining error is roundoff or O(dx^2)
    assert errs[2] <= errs[1] + 1e-12


def test_gain_modes():
    g = ControllerGains(c1=2, c2=3, c3=4, c4=5, c5=6, c6=7)
    assert g.channel_gains("EB_NL") == (2, 3, 4)
    assert g.channel_gains("MT_NL") == (5, 6, 7)
    assert ControllerGains(mode="Partial").channel_gains("EB_NL")[0] == 0.0
    assert ControllerGains.uncontrolled().channel_gains("MT_LIN") == (0.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        ControllerGains(c2=-1.0)
    with pytest.raises(ValueError):
        ControllerGains(mode="Sometimes")


@pytest.mark.parametrize("tag", list(ModelTag))
def test_uncontrolled_gives_zero(tag):
    g = GridSpec(16)
    s = make_initial_state(g, InitialCondition(fields=("w", "vdot", "wdot")), tag)
    assert compute_controls(s, ControllerGains.uncontrolled(), g) == ControlInput()


@pytest.mark.parametrize("tag", list(ModelTag))
def test_static_beam_gives_zero(tag):
    g = GridSpec(16)
    s = make_initial_state(g, InitialCondition(fields=("w", "v")), tag)
    c = compute_controls(s, ControllerGains(), g)
    assert (c.V, c.m, c.g) == (0.0, 0.0, 0.0)


def test_voltage_law_example():
    g = GridSpec(16)
    vdot = np.zeros(g.size)
    vdot[g.idx(16)] = 1.0
    s = state_with(ModelTag.EB_NL, g, vdot=vdot)
    assert compute_controls(s, ControllerGains(c1=2.0), g).V == 2.0


def test_integral_term_factor():
    g = GridSpec(32)
    w = 0.1 * g.x**2
    s = state_with(ModelTag.EB_NL, g, w=w, wdot=w)
    full = simpson_slope_rate(w, w, g)
    assert bstar_integral(s, ControllerGains(), g) == pytest.approx(0.5 * full)
    assert bstar_integral(s, ControllerGains(continuous_law=False), g) == pytest.approx(full)
    lin = state_with(ModelTag.EB_LIN, g, w=w, wdot=w)
    assert bstar_integral(lin, ControllerGains(), g) == 0.0


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(list(ModelTag)), st.sampled_from(list(ControlMode)), st.floats(-1e-2, 1e-2), st.floats(0.4, 0.8))
def test_closure_controls_match_feedback_laws(tag, mode, amp, center):
    """Controls produced by the model closure equal the stand-alone laws."""
    g = GridSpec(16)
    gains = ControllerGains(c1=1.3, c2=0.7, c3=0.4, c4=2.0, c5=0.3, c6=0.9, mode=mode)
    system = assemble(tag, MaterialParams.sample(), g, gains=gains)
    ic = InitialCondition(amplitude=amp, center=center, width=0.08, fields=("w", "v", "vdot", "wdot", "psidot", "pdot"))
    s = system.close_state(make_initial_state(g, ic, tag))
    ev = system.evaluate(0.0, system.pack(s))
    expect = compute_controls(ev.state, gains, g)
    # channels can cancel to far below their operands, so round-off is judged against amp / dx
    scale = abs(amp) * g.N
    for ch in ("V", "m", "g"):
        assert getattr(ev.controls, ch) == pytest.approx(getattr(expect, ch), rel=1e-12, abs=1e-13 * scale + 1e-300)


def test_tip_observations_keys():
    g = GridSpec(16)
    assert set(tip_observations(state_with(ModelTag.MT_NL, g), g)) == {"vdot", "wdot", "slope_rate", "psidot"}
    assert "pdot" in tip_observations(state_with(ModelTag.EB_FD_LIN, g), g)
