import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from piezobeam.controllers import ControllerGains
from piezobeam.core import BeamState, Coefficients, GridSpec, InitialCondition, MaterialParams, ModelTag, make_initial_state
from piezobeam.models import (
    EBElectrostatic,
    ForcingFields,
    ModelOptions,
    assemble,
    assemble_eb_electrostatic,
    assemble_eb_fully_dynamic_linear,
    assemble_linearized,
    assemble_mt_electrostatic,
)

PARAMS = MaterialParams.sample()
UNCONTROLLED = ControllerGains.uncontrolled()


def zero_state(tag, grid):
    z = np.zeros(grid.size)
    return BeamState(tag, 0.0, {n: z for n in tag.fields}, {n: z for n in tag.fields})


@pytest.mark.parametrize("tag", list(ModelTag))
@pytest.mark.parametrize("mode", ["Full", "Partial", "Uncontrolled"])
@pytest.mark.parametrize("viscosity", [True, False])
def test_zero_state_is_equilibrium(tag, mode, viscosity):
    g = GridSpec(16)
    system = assemble(tag, PARAMS, g, options=ModelOptions(viscosity=viscosity), gains=ControllerGains(mode=mode))
    assert not system.rhs(0.0, np.zeros(system.size)).any()


def test_eb_mass_is_spd():
    system = assemble_eb_electrostatic(PARAMS, GridSpec(60))
    m = system.mass_matrix()
    np.testing.assert_array_equal(m, m.T)
    assert np.linalg.eigvalsh(m).min() >= 1.0
    assert np.count_nonzero(np.triu(m, 2)) == 0


def test_stretched_bar_is_static():
    """v = a x with the matching tip traction: interior axial acceleration vanishes."""
    g = GridSpec(32)
    a = 1e-4
    forcing = ForcingFields(boundary=lambda t: {"traction": (a, 0.0)})
    system = assemble_linearized(PARAMS, g, "EB", gains=UNCONTROLLED, forcing=forcing)
    s = zero_state(ModelTag.EB_LIN, g).replace(fields={"v": a * g.x, "w": np.zeros(g.size)})
    s = system.close_state(s)
    assert s.fields["v"][g.idx(32)] == pytest.approx(a, rel=1e-12)
    np.testing.assert_allclose(system.accelerations(s)["v"], 0.0, atol=1e-15)


def test_traction_feedback_balances_stretch():
    """With voltage feedback the tip velocity absorbs the traction mismatch: V = -v_x(1)."""
    g = GridSpec(32)
    a = 1e-4
    system = assemble_linearized(PARAMS, g, "EB", gains=ControllerGains(c1=2.0, mode="Full"))
    s = system.close_state(zero_state(ModelTag.EB_LIN, g).replace(fields={"v": a * g.x, "w": np.zeros(g.size)}))
    c = system.controls(s)
    assert c.V == pytest.approx(-a, rel=1e-12)
    assert s.rates["v"][g.idx(32)] == pytest.approx(-a / 2.0, rel=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.floats(-1e-3, 1e-3).filter(lambda v: abs(v) > 1e-9), st.floats(0.3, 0.7))
def test_mt_rotation_operator_is_restoring(amp, center):
    g = GridSpec(32)
    system = assemble_mt_electrostatic(PARAMS, g, gains=UNCONTROLLED)
    psi = InitialCondition(amplitude=amp, center=center, width=0.08).profile(g.x)
    psi[1] = 0.0
    s = system.close_state(zero_state(ModelTag.MT_NL, g).replace(fields={"v": np.zeros(g.size), "w": np.zeros(g.size), "psi": psi}))
    acc = system.accelerations(s)["psi"]
    k = int(np.argmax(np.abs(psi[2 : g.N + 1])))
    assert np.sign(acc[k]) == -np.sign(psi[2 + k])


@pytest.mark.parametrize("family", ["EB", "MT"])
def test_linearized_decoupling(family):
    g = GridSpec(32)
    tag = ModelTag.EB_LIN if family == "EB" else ModelTag.MT_LIN
    system = assemble_linearized(PARAMS, g, family, gains=ControllerGains())
    ic = InitialCondition(fields=("w", "wdot", "psi", "psidot"), width=0.08)
    s = system.close_state(make_initial_state(g, ic, tag))
    assert not system.accelerations(s)["v"].any()


def test_linearized_wave_eigenfunction():
    errs = []
    for N in (32, 64, 128):
        g = GridSpec(N)
        system = assemble_linearized(PARAMS, g, "EB", options=ModelOptions(viscosity=False), gains=UNCONTROLLED)
        v = np.sin(0.5 * np.pi * g.x)
        s = system.close_state(zero_state(ModelTag.EB_LIN, g).replace(fields={"v": v, "w": np.zeros(g.size)}))
        acc = system.accelerations(s)["v"]
        errs.append(np.max(np.abs(acc + (np.pi / 2) ** 2 * v[2 : N + 1])))
    assert errs[0] / errs[1] > 3.5 and errs[1] / errs[2] > 3.5


def test_linearized_rejects_unknown_family():
    with pytest.raises(ValueError):
        assemble_linearized(PARAMS, GridSpec(16), "RN")


def test_fully_dynamic_eigenpair_decouples():
    """Fields along a generalized eigenvector of the 2x2 coupling move as one wave.

    A large magnetic coefficient keeps the two wave speeds comparable; with the
    sample value (~2e-9) the slow mode is only resolved to ~1e-5 in double precision.
    """
    g = GridSpec(32)
    params = MaterialParams.sample(mu=270.0, gamma3=0.5)
    c = Coefficients.from_params(params)
    assert 0.1 < c.magnetic < 1.0
    system = assemble_eb_fully_dynamic_linear(params, g, gains=UNCONTROLLED)
    K = np.array([[c.kappa, -c.couple], [-c.couple, 1.0]])
    M = np.diag([1.0, c.magnetic])
    lam, vecs = np.linalg.eig(np.linalg.solve(M, K))
    f = np.sin(0.5 * np.pi * g.x) * g.x
    for k in range(2):
        e = vecs[:, k] / np.max(np.abs(vecs[:, k]))
        s = zero_state(ModelTag.EB_FD_LIN, g).replace(fields={"v": e[0] * f, "w": np.zeros(g.size), "p": e[1] * f})
        acc = system.accelerations(system.close_state(s))
        # both components equal lam * (discrete f'') along the eigenvector
        np.testing.assert_allclose(acc["v"] * e[1], acc["p"] * e[0], rtol=1e-10, atol=1e-12 * np.max(np.abs(acc["p"] * e[0])))


def test_fully_dynamic_matrices():
    system = assemble_eb_fully_dynamic_linear(PARAMS, GridSpec(16))
    np.testing.assert_allclose(system.mass, system.mass.T)
    np.testing.assert_allclose(system.stiffness, system.stiffness.T, atol=1e-9)
    assert np.linalg.eigvalsh(system.mass).min() > 0
    assert np.linalg.eigvalsh(system.stiffness).min() > -1e-8 * np.abs(system.stiffness).max()
    assert not system.options.viscosity


@pytest.mark.parametrize("tag", list(ModelTag))
def test_closure_is_idempotent(tag):
    g = GridSpec(16)
    system = assemble(tag, PARAMS, g, gains=ControllerGains(c1=0.5, c5=0.5))
    ic = InitialCondition(width=0.08, fields=("w", "v", "vdot", "wdot", "psi", "p"))
    once = system.close_state(make_initial_state(g, ic, tag))
    twice = system.close_state(once)
    for n in tag.fields:
        np.testing.assert_array_equal(once.fields[n], twice.fields[n])
        np.testing.assert_array_equal(once.rates[n], twice.rates[n])


def test_pack_rejects_mismatched_state():
    g = GridSpec(16)
    system = assemble("EB_NL", PARAMS, g)
    with pytest.raises(ValueError):
        system.pack(zero_state(ModelTag.MT_NL, g))
    with pytest.raises(ValueError):
        system.pack(zero_state(ModelTag.EB_NL, GridSpec(18)))


def test_zero_gain_channels_are_algebraic():
    g = GridSpec(16)
    full = assemble("MT_NL", PARAMS, g, gains=ControllerGains())
    part = assemble("MT_NL", PARAMS, g, gains=ControllerGains(mode="Partial"))
    none = assemble("MT_NL", PARAMS, g)  # no gains: uncontrolled
    assert len(full.first_order) == 3 and len(part.first_order) == 2 and len(none.first_order) == 0
    assert isinstance(assemble("EB_LIN", PARAMS, g), EBElectrostatic)


def test_options_validation():
    with pytest.raises(ValueError):
        ModelOptions(viscosity_scaling="cubic")
    assert ModelOptions().wave_filter(0.1) == pytest.approx(0.01)
    assert ModelOptions(viscosity_scaling="as_printed").wave_filter(0.1) == 1.0
    assert ModelOptions(viscosity=False).wave_filter(0.1) == 0.0
