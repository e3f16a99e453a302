import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from timebin_qudits.elements import (
    Attenuator,
    BirefringentDelay,
    PhaseCorrector,
    PolarizationTimeDelay,
    PolarizingSplitter,
    UltrafastSwitch,
    Waveplate,
    apply_element,
    element_from_dict,
    element_to_dict,
    nonlinear_phase,
    switch_efficiency,
    ups_jones,
    waveplate_jones,
)
from timebin_qudits.errors import GridMismatchError, InvalidElementError, InvalidRoutingError
from timebin_qudits.hilbert import ModeLabel, PhotonicState, Polarization, TimeGrid, make_basis_state

H, V = Polarization.H, Polarization.V
GRID = TimeGrid(2.25, 4, (2600, 5600))


def unit(fine, pol, coarse=0):
    return make_basis_state(ModeLabel(fine, coarse, pol), GRID)


def test_half_wave_plate_closed_form():
    for a in np.linspace(-math.pi, math.pi, 17):
        expected = np.array([[math.cos(2 * a), math.sin(2 * a)], [math.sin(2 * a), -math.cos(2 * a)]])
        np.testing.assert_allclose(waveplate_jones("half", a), expected, atol=1e-15)


def test_half_wave_at_22_5_makes_diagonal():
    out = apply_element(unit(0, H), Waveplate("half", math.pi / 8))
    assert abs(out[ModeLabel(0, 0, H)]) ** 2 == pytest.approx(0.5, abs=1e-15)
    assert abs(out[ModeLabel(0, 0, V)]) ** 2 == pytest.approx(0.5, abs=1e-15)


def test_quarter_wave_plate_is_unitary_with_real_hh():
    for a in np.linspace(0, math.pi, 9):
        m = waveplate_jones("quarter", a)
        np.testing.assert_allclose(m.conj().T @ m, np.eye(2), atol=1e-14)
        assert abs(m[0, 0].imag) < 1e-15


def test_unknown_waveplate_kind():
    with pytest.raises(InvalidElementError):
        Waveplate("full", 0.0)


@pytest.mark.parametrize(
    "theta, dphi, expected",
    [(math.pi / 4, math.pi, 1.0), (math.pi / 4, math.pi / 2, 0.5), (0.0, math.pi, 0.0), (math.pi / 8, math.pi, 0.5)],
)
def test_switch_efficiency_examples(theta, dphi, expected):
    assert switch_efficiency(theta, dphi) == pytest.approx(expected, abs=1e-15)
    # the H->V element of the Jones matrix agrees with the closed form
    assert abs(ups_jones(theta, dphi)[1, 0]) ** 2 == pytest.approx(expected, abs=1e-14)


def test_ideal_switch_acts_only_on_targets():
    sw = UltrafastSwitch({0, 2})
    s = (unit(0, V) + unit(1, V)) * (1 / math.sqrt(2))
    out = apply_element(s, sw)
    assert abs(out[ModeLabel(0, 0, H)]) ** 2 == pytest.approx(0.5, abs=1e-15)
    assert out[ModeLabel(0, 0, V)] == pytest.approx(0, abs=1e-15)
    assert out[ModeLabel(1, 0, V)] == pytest.approx(s[ModeLabel(1, 0, V)])


def test_switch_coarse_restriction():
    sw = UltrafastSwitch({0}, coarse_offsets_ps={2600})
    assert apply_element(unit(0, V), sw) == unit(0, V)
    moved = apply_element(unit(0, V, 2600), sw)
    assert abs(moved[ModeLabel(0, 2600, H)]) == pytest.approx(1.0)


def test_extra_phase_is_global_on_target_bin():
    sw = UltrafastSwitch({0}, extra_phase=0.7)
    plain = apply_element(unit(0, V), UltrafastSwitch({0}))
    shifted = apply_element(unit(0, V), sw)
    for label in plain.modes:
        assert shifted[label] == pytest.approx(plain[label] * np.exp(0.7j), abs=1e-15)


@pytest.mark.parametrize("kwargs", [dict(theta=-0.1), dict(theta=2.0), dict(delta_phi=-0.1), dict(delta_phi=2 * math.pi)])
def test_switch_parameter_bounds(kwargs):
    with pytest.raises(InvalidElementError):
        UltrafastSwitch({0}, **kwargs)


def test_switch_target_outside_grid():
    with pytest.raises(InvalidElementError):
        apply_element(unit(0, V), UltrafastSwitch({4}))


def test_birefringent_delay_moves_slow_axis_earlier():
    e = BirefringentDelay(1, V)
    assert e.crystal_length_mm == 5.0
    assert apply_element(unit(1, V), e) == unit(0, V)
    assert apply_element(unit(1, H), e) == unit(1, H)


def test_birefringent_delay_off_grid():
    # bin 0 shifted by 3 lands at -3, outside the routable range for d=4 (>= -3 is allowed, -4 is not)
    s = make_basis_state(ModeLabel(0, 0, V), GRID)
    out = apply_element(s, BirefringentDelay(3, V))
    assert out[ModeLabel(-3, 0, V)] == 1
    with pytest.raises(InvalidRoutingError):
        apply_element(out, BirefringentDelay(1, V))


def test_polarization_time_delay():
    e = PolarizationTimeDelay(2600, V)
    assert e.offset_ns == 2.6
    assert apply_element(unit(2, V), e) == unit(2, V, 2600)
    assert apply_element(unit(2, H), e) == unit(2, H)
    with pytest.raises(InvalidRoutingError):
        apply_element(unit(2, V), PolarizationTimeDelay(1000, V))


def test_splitter_is_projector():
    s = (unit(0, H) + unit(0, V)) * (1 / math.sqrt(2))
    pbs = PolarizingSplitter(H)
    once = apply_element(s, pbs)
    assert once.norm_squared() == pytest.approx(0.5)
    assert apply_element(once, pbs) == once


def test_attenuator_scales_probability():
    out = apply_element(unit(1, H), Attenuator(0.36))
    assert out.norm_squared() == pytest.approx(0.36)
    with pytest.raises(InvalidElementError):
        Attenuator(1.2)


def test_phase_corrector():
    out = apply_element(unit(1, H), PhaseCorrector((0.0, math.pi)))
    assert out[ModeLabel(1, 0, H)] == pytest.approx(-1)
    assert apply_element(unit(3, H), PhaseCorrector((0.0, math.pi))) == unit(3, H)


def test_grid_mismatch():
    other = TimeGrid(2.25, 4, (2600, 5700))
    with pytest.raises(GridMismatchError):
        apply_element(unit(0, H), Waveplate("half", 0.0), other)


def test_order_matters():
    a, b = Waveplate("half", math.pi / 8), PolarizingSplitter(H)
    s = unit(0, V)
    assert apply_element(apply_element(s, a), b) != apply_element(apply_element(s, b), a)


def test_nonlinear_phase_formula():
    phi = nonlinear_phase(3.2e-20, 1.0, 1e12, 720e-9)
    assert phi == pytest.approx(8 * math.pi * 3.2e-20 * 1e12 / (3 * 720e-9))


@pytest.mark.parametrize(
    "e",
    [
        Waveplate("quarter", 0.3),
        PolarizingSplitter("V"),
        BirefringentDelay(2, "H"),
        UltrafastSwitch({0, 2}, 0.7, 2.0, 0.1, {0, 2600}),
        UltrafastSwitch({1}),
        PolarizationTimeDelay(5600),
        Attenuator(0.5),
        PhaseCorrector((0.1, 0.2)),
    ],
)
def test_element_round_trip(e):
    assert element_from_dict(element_to_dict(e)) == e


def test_element_from_dict_unknown_type():
    with pytest.raises(InvalidElementError):
        element_from_dict({"type": "mirror"})


amp = st.builds(complex, st.floats(-1, 1), st.floats(-1, 1))
lossless = st.one_of(
    st.builds(Waveplate, st.sampled_from(["half", "quarter"]), st.floats(-math.pi, math.pi)),
    st.builds(
        UltrafastSwitch,
        st.sets(st.integers(0, 3), min_size=1).map(frozenset),
        st.floats(0, math.pi / 2),
        st.floats(0, 6.28),
        st.floats(-math.pi, math.pi),
    ),
    st.builds(BirefringentDelay, st.integers(1, 3), st.sampled_from([H, V])),
    st.builds(PolarizationTimeDelay, st.sampled_from([2600, 5600]), st.sampled_from([H, V])),
    st.builds(PhaseCorrector, st.lists(st.floats(-math.pi, math.pi), max_size=4).map(tuple)),
)


def _state(amps):
    modes = [ModeLabel(m, 0, p) for m in range(4) for p in (H, V)]
    return PhotonicState.from_vector(GRID, modes, np.array(amps))


@settings(max_examples=300, deadline=None)
@given(lossless, st.lists(amp, min_size=8, max_size=8))
def test_lossless_elements_preserve_norm(e, amps):
    s = _state(amps)
    assert apply_element(s, e).norm() == pytest.approx(s.norm(), abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(lossless, st.lists(amp, min_size=8, max_size=8), st.lists(amp, min_size=8, max_size=8), amp, amp)
def test_elements_are_linear(e, x, y, a, b):
    s, t = _state(x), _state(y)
    lhs = apply_element(s * a + t * b, e)
    rhs = apply_element(s, e) * a + apply_element(t, e) * b
    diff = lhs - rhs
    assert max((abs(v) for v in diff.amplitudes.values()), default=0.0) < 1e-12


@settings(max_examples=300, deadline=None)
@given(st.floats(0, math.pi / 2), st.floats(0, 6.28))
def test_switch_law_matches_jones_matrix(theta, dphi):
    out = apply_element(unit(0, H), UltrafastSwitch({0}, theta, dphi))
    assert abs(out[ModeLabel(0, 0, V)]) ** 2 == pytest.approx(switch_efficiency(theta, dphi), abs=1e-12)
    np.testing.assert_allclose(
        ups_jones(theta, dphi).conj().T @ ups_jones(theta, dphi), np.eye(2), atol=1e-12
    )


@settings(max_examples=100, deadline=None)
@given(st.lists(amp, min_size=8, max_size=8), st.sampled_from([H, V]))
def test_splitter_idempotent(amps, pol):
    s = _state(amps)
    once = apply_element(s, PolarizingSplitter(pol))
    assert apply_element(once, PolarizingSplitter(pol)) == once
