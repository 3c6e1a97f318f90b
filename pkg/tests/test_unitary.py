import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cbwmeter.unitary import (
    IDENTITY,
    PORT_A,
    PORT_B,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    MziParams,
    beam_splitter,
    cbw_closed_form,
    equal_up_to_global_phase,
    is_unitary,
    mzi_rotation,
    mzi_unitary,
    output_intensities,
    phase_plate,
    rotation_frame,
    unitarity_error,
)

phases = st.floats(-20, 20, allow_nan=False)
orders = st.integers(1, 40)


def test_beam_splitter_entries():
    bs = beam_splitter()
    np.testing.assert_allclose(np.abs(bs), np.full((2, 2), 1 / np.sqrt(2)), atol=1e-15)
    assert is_unitary(bs)


def test_beam_splitter_squared_is_i_sigma_x():
    np.testing.assert_allclose(beam_splitter() @ beam_splitter(), 1j * SIGMA_X, atol=1e-12)


@pytest.mark.parametrize("phi,zeta,expected", [
    (0.0, 0.0, IDENTITY),
    (np.pi, 0.0, np.diag([-1, 1])),
    (np.pi / 2, np.pi / 2, 1j * IDENTITY),
])
def test_phase_plate(phi, zeta, expected):
    np.testing.assert_allclose(phase_plate(MziParams(phi, zeta)), expected, atol=1e-12)


def test_mzi_at_zero_phase_is_i_sigma_x():
    np.testing.assert_allclose(mzi_unitary(MziParams(0.0)), 1j * SIGMA_X, atol=1e-12)


def test_mzi_at_pi_is_bar_state():
    # hand: (1/2)[[e^{i pi} - 1, i(e^{i pi} + 1)], ...] = [[-1, 0], [0, 1]]
    u = mzi_unitary(MziParams(np.pi))
    np.testing.assert_allclose(np.abs(u), IDENTITY.real, atol=1e-12)
    np.testing.assert_allclose(u, np.diag([-1, 1]), atol=1e-12)


def test_mzi_half_pi_cross_power():
    u = mzi_unitary(MziParams(np.pi / 2))
    assert abs(abs(u[0, 1]) ** 2 - 0.5) < 1e-12


@given(phases, phases)
def test_mzi_is_rotation_times_input_swap(phi, zeta):
    p = MziParams(phi, zeta)
    expected = 1j * np.exp(1j * (phi + zeta) / 2) * mzi_rotation(p.phi_prime) @ SIGMA_X
    np.testing.assert_allclose(mzi_unitary(p), expected, atol=1e-12)


@given(phases, phases)
def test_mzi_entry_moduli(phi, zeta):
    u = mzi_unitary(MziParams(phi, zeta))
    half = (phi - zeta) / 2
    np.testing.assert_allclose(np.abs(u), [[abs(np.sin(half)), abs(np.cos(half))],
                                           [abs(np.cos(half)), abs(np.sin(half))]], atol=1e-12)


def test_port_convention_full_output_on_port_a_at_zero_phase():
    out = output_intensities(mzi_unitary(MziParams(0.0)))
    assert out[PORT_A] == pytest.approx(1.0, abs=1e-15)
    assert out[PORT_B] == pytest.approx(0.0, abs=1e-15)


def test_rotation_form_matches_pauli_exponential():
    phi_p = 0.83
    expected = np.cos(phi_p / 2) * IDENTITY + 1j * np.sin(phi_p / 2) * SIGMA_Y
    np.testing.assert_allclose(mzi_rotation(phi_p), expected, atol=1e-15)


def test_closed_form_examples():
    np.testing.assert_allclose(cbw_closed_form(0.0, 7), IDENTITY, atol=1e-15)
    np.testing.assert_allclose(cbw_closed_form(np.pi, 2), -IDENTITY, atol=1e-12)
    assert abs(cbw_closed_form(np.pi / 3, 3)[0, 0]) ** 2 < 1e-30


@pytest.mark.parametrize("M", [0, -1, 1.5])
def test_closed_form_rejects_bad_order(M):
    with pytest.raises(ValueError):
        cbw_closed_form(0.3, M)


def test_closed_form_is_power_of_rotation():
    for M in range(1, 9):
        np.testing.assert_allclose(np.linalg.matrix_power(mzi_rotation(0.41), M),
                                   cbw_closed_form(0.41, M), atol=1e-12)


def test_global_phase_examples():
    rng = np.random.default_rng(3)
    z = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    u, _ = np.linalg.qr(z)
    match = equal_up_to_global_phase(np.exp(1.3j) * u, u, 1e-9)
    assert match.equal and match.phase == pytest.approx(1.3, abs=1e-12)

    match = equal_up_to_global_phase(1j * SIGMA_X, SIGMA_X, 1e-9)
    assert match.equal and match.phase == pytest.approx(np.pi / 2, abs=1e-12)

    assert not equal_up_to_global_phase(SIGMA_X, SIGMA_Z, 1e-9).equal


def test_global_phase_zero_reference_rejected():
    with pytest.raises(ValueError):
        equal_up_to_global_phase(IDENTITY, np.zeros((2, 2)), 1e-9)


def test_non_finite_phase_rejected():
    with pytest.raises(ValueError):
        MziParams(np.nan, 0.0)


@settings(max_examples=300)
@given(phases, phases, orders)
def test_constructors_are_unitary(phi, zeta, M):
    p = MziParams(phi, zeta)
    for u in (beam_splitter(), phase_plate(p), mzi_unitary(p), cbw_closed_form(p.phi_prime, M)):
        assert unitarity_error(u) < 1e-12
        assert abs(abs(np.linalg.det(u)) - 1) < 1e-12


@given(phases, phases, st.complex_numbers(max_magnitude=10), st.complex_numbers(max_magnitude=10))
def test_norm_conservation(phi, zeta, a_u, a_l):
    psi = np.array([a_u, a_l])
    out = mzi_unitary(MziParams(phi, zeta)) @ psi
    assert abs(np.linalg.norm(out) - np.linalg.norm(psi)) < 1e-12 * max(1.0, np.linalg.norm(psi))


@given(phases, orders, orders)
def test_rotation_composition(phi_p, m1, m2):
    np.testing.assert_allclose(cbw_closed_form(phi_p, m1) @ cbw_closed_form(phi_p, m2),
                               cbw_closed_form(phi_p, m1 + m2), atol=1e-12)


@given(phases, orders)
def test_closed_form_intensities(phi_p, M):
    u = cbw_closed_form(phi_p, M)
    cos2 = np.cos(M * phi_p / 2) ** 2
    assert abs(abs(u[0, 0]) ** 2 - cos2) < 1e-12
    assert abs(abs(u[0, 1]) ** 2 - (1 - cos2)) < 1e-12
    assert abs(abs(u[0, 0]) ** 2 + abs(u[0, 1]) ** 2 - 1) < 1e-12


@given(phases)
def test_naive_double_mzi_collapses_to_phase(phi):
    u = mzi_unitary(MziParams(phi))
    np.testing.assert_allclose(u @ u, -np.exp(1j * phi) * IDENTITY, atol=1e-12)


def test_rotation_frame_undoes_input_swap():
    u = mzi_unitary(MziParams(0.9, 0.2))
    assert equal_up_to_global_phase(rotation_frame(u), mzi_rotation(0.7), 1e-12).equal
