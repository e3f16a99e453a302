import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from timebin_qudits.chain import mub_state
from timebin_qudits.errors import GridMismatchError, InvalidGridError, InvalidModeError
from timebin_qudits.hilbert import (
    ModeLabel,
    PhotonicState,
    Polarization,
    TimeGrid,
    inner_product,
    make_basis_state,
    mode_probability,
    ns_to_ps,
    qudit_state,
)

H, V = Polarization.H, Polarization.V


def test_ns_to_ps_is_exact():
    assert ns_to_ps(2.6) == 2600
    assert ns_to_ps(5.6) == 5600
    assert ns_to_ps(2.6) + ns_to_ps(5.6) == ns_to_ps(8.2)
    with pytest.raises(InvalidGridError):
        ns_to_ps(0.0001)


def test_coarse_offsets_are_subset_sums(grid4):
    assert grid4.coarse_offsets == {0, 2600, 5600, 8200}


def test_mode_label_equality_is_structural():
    assert ModeLabel(1, 2600, "V") == ModeLabel(1, ns_to_ps(2.6), V)
    assert ModeLabel(1, 2600, H) != ModeLabel(1, 2601, H)
    assert len({ModeLabel(0, 0, H), ModeLabel(0, 0, "H")}) == 1


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(fine_pitch_ps=0.0),
        dict(dimension=1),
        dict(coarse_delays_ps=(-5,)),
        dict(coarse_delays_ps=(20,)),  # 4 bins of 2.25 ps would alias into a 20 ps bin
    ],
)
def test_invalid_grids(kwargs):
    with pytest.raises(InvalidGridError):
        TimeGrid(**kwargs)


def test_basis_state(grid4):
    s = make_basis_state(ModeLabel(0, 0, H), grid4)
    assert s[ModeLabel(0, 0, H)] == 1
    assert len(s) == 1
    assert s.norm() == 1


@pytest.mark.parametrize("label", [ModeLabel(-1, 0, H), ModeLabel(4, 0, H), ModeLabel(0, 100, V)])
def test_basis_state_rejects_off_grid(grid4, label):
    with pytest.raises(InvalidModeError):
        make_basis_state(label, grid4)


def test_inner_product_examples(grid4):
    t0 = make_basis_state(ModeLabel(0, 0, V), grid4)
    t1 = make_basis_state(ModeLabel(1, 0, V), grid4)
    phi0 = mub_state(4, 0, grid4)
    assert inner_product(t0, t0) == 1
    assert inner_product(t0, t1) == 0
    assert inner_product(t0, phi0) == pytest.approx(0.5, abs=1e-15)


def test_inner_product_grid_mismatch(grid4):
    other = TimeGrid(2.25, 4, (2600, 5700))
    with pytest.raises(GridMismatchError):
        inner_product(make_basis_state(ModeLabel(0, 0, H), grid4), make_basis_state(ModeLabel(0, 0, H), other))


def test_mode_probability(grid4):
    phi0 = mub_state(4, 0, grid4)
    assert mode_probability(phi0, lambda m: m.fine_bin == 0) == pytest.approx(0.25)
    assert mode_probability(phi0, lambda m: False) == 0
    unit = make_basis_state(ModeLabel(2, 2600, H), grid4)
    assert mode_probability(unit, lambda m: m == ModeLabel(2, 2600, H)) == 1


def test_pruning_is_unobservable(grid4):
    s = PhotonicState(grid4, {ModeLabel(0, 0, H): 1.0, ModeLabel(1, 0, H): 1e-17})
    assert len(s) == 1
    assert s[ModeLabel(1, 0, H)] == 0


def test_vector_round_trip(grid4):
    modes = [ModeLabel(m, 0, V) for m in range(4)]
    vec = np.array([0.5, -0.5j, 0.5, 0.5])
    s = PhotonicState.from_vector(grid4, modes, vec)
    np.testing.assert_array_equal(s.vector(modes), vec)


complex_amps = st.builds(complex, st.floats(-1, 1), st.floats(-1, 1))


@settings(max_examples=200, deadline=None)
@given(st.lists(complex_amps, min_size=4, max_size=4), st.lists(complex_amps, min_size=4, max_size=4))
def test_inner_product_conjugate_symmetry(a, b):
    grid = TimeGrid(2.25, 4, (2600, 5600))
    sa, sb = qudit_state(grid, a), qudit_state(grid, b)
    assert inner_product(sa, sb) == pytest.approx(np.conj(inner_product(sb, sa)), abs=1e-12)
    self_ip = inner_product(sa, sa)
    assert abs(self_ip.imag) < 1e-15
    assert self_ip.real == pytest.approx(sa.norm_squared(), abs=1e-12)
