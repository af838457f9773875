import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from teleportsim import gates
from teleportsim.bloch import bloch_to_density, density_to_bloch, fidelity
from teleportsim.config import example_state
from teleportsim.decoherence import (
    IntegratorConfig,
    NoiseChannel,
    apply_channel,
    compensate_phase,
    evolve_bloch,
    evolve_closed_form,
    evolve_numerical,
    integrate_lindblad,
    liouvillian,
    rk4,
    t2_from_gamma,
)
from teleportsim.qmath import DensityMatrix, QubitRegister, ket, tensor_product

from conftest import haar_ket, random_bloch, random_density

SQ2 = 1 / math.sqrt(2)
PLUS = QubitRegister([SQ2, SQ2])
EXAMPLE = np.array([1 / math.sqrt(2), 1 / math.sqrt(6), 1 / math.sqrt(3)])

# -ln((e - 2)/e), evaluated once and frozen
T2_UNIT = 1.3308932682040546

rates = st.floats(0, 2, allow_nan=False)
times = st.floats(0, 3, allow_nan=False)


def expm_oracle(rho0: np.ndarray, ch: NoiseChannel) -> np.ndarray:
    """Exact solution of the master equation via the matrix exponential of its generator."""
    return (scipy.linalg.expm(liouvillian(ch) * ch.duration) @ rho0.reshape(-1)).reshape(2, 2)


class TestNoiseChannel:
    def test_rejects_negative_rate(self):
        with pytest.raises(ValueError):
            NoiseChannel(-0.1, 0, 0, 0, 1)

    def test_rejects_negative_duration(self):
        with pytest.raises(ValueError):
            NoiseChannel(0, 0, 0.1, 0, -1)

    def test_rejects_nan(self):
        with pytest.raises(ValueError):
            NoiseChannel(0, 0, float("nan"), 0, 1)

    def test_named_specializations(self):
        assert NoiseChannel.phase_damping(0.3, 2) == NoiseChannel(0, 0, 0.3, 0, 2)
        assert NoiseChannel.yz_damping(0.3, 2) == NoiseChannel(0.3, 0, 0, 0, 2)
        assert NoiseChannel.combined(0.1, 0.3, 2) == NoiseChannel(0.1, 0, 0.3, 0, 2)


class TestClosedForm:
    def test_phase_damping_worked_example(self):
        g, t = 0.37, 1.3
        out = density_to_bloch(evolve_closed_form(example_state(), NoiseChannel.phase_damping(g, t)))
        e = math.exp(-2 * g * t)
        np.testing.assert_allclose(out, [e / math.sqrt(2), e / math.sqrt(6), 1 / math.sqrt(3)], atol=1e-12)

    def test_zero_duration_is_identity(self, rng):
        rho = random_density(rng)
        out = evolve_closed_form(rho, NoiseChannel(1, 2, 3, 4, 0), compensate=False)
        np.testing.assert_array_equal(out.matrix, rho.matrix)

    @settings(max_examples=200, deadline=None)
    @given(rates, rates, times)
    def test_combined_product_identity(self, gx, gz, t):
        ch = NoiseChannel.combined(gx, gz, t)
        ax, ay, az = ch.attenuations()
        assert ay == pytest.approx(ax * az, abs=1e-12)

    def test_general_formula(self, rng):
        for _ in range(50):
            gx, gy, gz, t = rng.random(4) * 2
            r0 = random_bloch(rng)
            out = evolve_bloch(r0, NoiseChannel(gx, gy, gz, 0.0, t))
            want = r0 * np.exp(-2 * t * np.array([gy + gz, gx + gz, gx + gy]))
            np.testing.assert_allclose(out, want, atol=1e-15)

    def test_multi_qubit_rejected(self):
        with pytest.raises(ValueError):
            evolve_closed_form(ket("00"), NoiseChannel.phase_damping(1, 1))

    def test_phase_damping_keeps_z(self, rng):
        for _ in range(50):
            r0 = random_bloch(rng)
            out = evolve_bloch(r0, NoiseChannel(0, 0, rng.random() * 3, rng.random() * 10, rng.random() * 5))
            assert abs(out[2] - r0[2]) <= 1e-12

    def test_yz_damping_keeps_x(self, rng):
        for _ in range(50):
            r0 = random_bloch(rng)
            out = evolve_bloch(r0, NoiseChannel.yz_damping(rng.random() * 3, rng.random() * 5))
            assert abs(out[0] - r0[0]) <= 1e-12

    def test_semigroup(self, rng):
        for _ in range(30):
            rho = random_density(rng)
            gx, gy, gz, om, t1, t2 = rng.random(6) * 2
            ch = NoiseChannel(gx, gy, gz, om, t1)
            two = evolve_closed_form(evolve_closed_form(rho, ch), ch.at(t2))
            one = evolve_closed_form(rho, ch.at(t1 + t2))
            np.testing.assert_allclose(two.matrix, one.matrix, atol=1e-12)

    def test_uncompensated_semigroup(self, rng):
        rho = random_density(rng)
        ch = NoiseChannel(0.3, 0.05, 0.2, 4.0, 0.7)
        two = evolve_closed_form(evolve_closed_form(rho, ch, False), ch.at(1.1), False)
        one = evolve_closed_form(rho, ch.at(1.8), False)
        np.testing.assert_allclose(two.matrix, one.matrix, atol=1e-12)

    @settings(max_examples=100, deadline=None)
    @given(rates, rates, rates, st.floats(0, 20), times, st.integers(0, 2**32 - 1))
    def test_uncompensated_matches_generator_exponential(self, gx, gy, gz, om, t, seed):
        rho = random_density(np.random.default_rng(seed))
        ch = NoiseChannel(gx, gy, gz, om, t)
        got = evolve_closed_form(rho, ch, compensate=False).matrix
        np.testing.assert_allclose(got, expm_oracle(rho.matrix, ch), atol=1e-10)

    def test_compensated_matches_generator_exponential_without_hamiltonian(self, rng):
        for _ in range(30):
            rho = random_density(rng)
            gx, gy, gz, t = rng.random(4) * 2
            ch = NoiseChannel(gx, gy, gz, 0.0, t)
            np.testing.assert_allclose(evolve_closed_form(rho, ch).matrix, expm_oracle(rho.matrix, ch), atol=1e-12)

    def test_compensation_commutes_when_x_and_y_rates_match(self, rng):
        rho = random_density(rng)
        ch = NoiseChannel(0.3, 0.3, 0.5, 2.5, 1.2)
        undone = compensate_phase(evolve_closed_form(rho, ch, compensate=False), ch.omega, ch.duration)
        np.testing.assert_allclose(undone.matrix, evolve_closed_form(rho, ch).matrix, atol=1e-12)


class TestContraction:
    @settings(max_examples=100, deadline=None)
    @given(rates, rates, rates, st.integers(0, 2**32 - 1))
    def test_coordinates_non_increasing(self, gx, gy, gz, seed):
        r0 = random_bloch(np.random.default_rng(seed))
        prev = np.abs(r0)
        for t in np.linspace(0, 3, 31):
            cur = np.abs(evolve_bloch(r0, NoiseChannel(gx, gy, gz, 0, t)))
            assert np.all(cur <= prev + 1e-15)
            prev = cur

    def test_pure_becomes_mixed(self, rng):
        psi = haar_ket(rng)
        out = evolve_closed_form(psi, NoiseChannel.phase_damping(0.2, 0.5))
        assert density_to_bloch(out).norm() < 1 - 1e-6

    @settings(max_examples=100, deadline=None)
    @given(rates, rates, rates, st.integers(0, 2**32 - 1))
    def test_fidelity_non_increasing(self, gx, gy, gz, seed):
        psi = haar_ket(np.random.default_rng(seed))
        prev = 1.0
        for t in np.linspace(0, 3, 31):
            f = fidelity(evolve_closed_form(psi, NoiseChannel(gx, gy, gz, 0, t)), psi)
            assert f <= prev + 1e-12
            prev = f

    def test_damping_is_not_flipping(self, rng):
        for _ in range(50):
            rho = random_density(rng)
            out = evolve_closed_form(rho, NoiseChannel.phase_damping(rng.random() * 3 + 0.01, rng.random() * 3 + 0.01))
            flipped = gates.apply_gate(rho, gates.Z, [0])
            assert np.abs(out.matrix - flipped.matrix).max() > 1e-6

    def test_diagonal_states_untouched_by_phase_damping(self):
        rho = DensityMatrix(np.diag([0.3, 0.7]))
        out = evolve_closed_form(rho, NoiseChannel.phase_damping(2, 3))
        np.testing.assert_allclose(out.matrix, rho.matrix, atol=1e-15)


class TestNumerical:
    def test_phase_damping_example(self):
        g = math.log(2) / 2
        out = evolve_numerical(PLUS, NoiseChannel.phase_damping(g, 1.0))
        np.testing.assert_allclose(out.matrix, [[0.5, 0.25], [0.25, 0.5]], atol=1e-6)

    def test_pure_rotation_by_pi(self):
        out = evolve_numerical(PLUS, NoiseChannel(0, 0, 0, math.pi, 1.0))
        np.testing.assert_allclose(out.matrix, 0.5 * np.array([[1, -1], [-1, 1]]), atol=1e-6)

    def test_pure_rotation_against_expm(self):
        ch = NoiseChannel(0, 0, 0, math.pi, 1.0)
        np.testing.assert_allclose(expm_oracle(PLUS.density().matrix, ch), 0.5 * np.array([[1, -1], [-1, 1]]), atol=1e-12)

    def test_bit_flip_diagonals(self):
        g, t = 0.4, 1.5
        out = evolve_numerical(ket("0"), NoiseChannel.yz_damping(g, t))
        e = math.exp(-2 * g * t)
        np.testing.assert_allclose(np.diag(out.matrix).real, [(1 + e) / 2, (1 - e) / 2], atol=1e-6)

    def test_raw_output_structure(self, rng):
        for _ in range(10):
            rho = random_density(rng)
            gx, gy, gz = rng.random(3)
            raw = integrate_lindblad(rho, NoiseChannel(gx, gy, gz, 5 * rng.random(), 2.0))
            assert abs(np.trace(raw) - 1) < 1e-8
            assert np.abs(raw - raw.conj().T).max() < 1e-8

    def test_step_must_be_positive(self):
        with pytest.raises(ValueError):
            IntegratorConfig(step=0.0)
        with pytest.raises(ValueError):
            IntegratorConfig(step=-1e-3)

    def test_endpoint_substep(self):
        # 0.0105 is not a multiple of the step; the final partial step lands on it
        y = rk4(lambda _t, v: -v, np.array([1.0]), 0.0105, 1e-3)
        assert y[0].real == pytest.approx(math.exp(-0.0105), abs=1e-14)

    def test_rk4_order(self):
        errs = [abs(rk4(lambda _t, v: -v, np.array([1.0]), 1.0, h)[0] - math.exp(-1)) for h in (0.1, 0.05)]
        assert 12 < errs[0] / errs[1] < 20

    def test_zero_duration(self, rng):
        rho = random_density(rng)
        np.testing.assert_allclose(evolve_numerical(rho, NoiseChannel(1, 1, 1, 1, 0)).matrix, rho.matrix, atol=1e-15)


class TestCompensatePhase:
    def test_full_cancellation(self):
        for t in (0.3, 1.0, 2.7):
            rotated = evolve_numerical(PLUS, NoiseChannel(0, 0, 0, 2 * math.pi, t))
            np.testing.assert_allclose(compensate_phase(rotated, 2 * math.pi, t).matrix, PLUS.density().matrix, atol=1e-6)

    def test_zero_omega_is_identity(self, rng):
        rho = random_density(rng)
        np.testing.assert_array_equal(compensate_phase(rho, 0.0, 5.0).matrix, rho.matrix)

    def test_compensated_off_diagonal_is_real_scaling(self):
        rho0 = example_state().density()
        g, om, t = 0.25, 3.0, 1.7
        raw = evolve_numerical(rho0, NoiseChannel(0, 0, g, om, t))
        out = compensate_phase(raw, om, t)
        np.testing.assert_allclose(out.matrix[0, 1], rho0.matrix[0, 1] * math.exp(-2 * g * t), atol=1e-6)

    def test_direction_fixed_by_sign(self):
        # the opposite sign would double the rotation instead of undoing it
        rotated = evolve_closed_form(PLUS, NoiseChannel(0, 0, 0, 1.0, 1.0), compensate=False)
        wrong = gates.apply_gate(rotated, gates.phase_shift(1.0), [0])
        assert np.abs(wrong.matrix - PLUS.density().matrix).max() > 0.1


class TestT2:
    def test_unit_rate(self):
        assert t2_from_gamma(1.0) == pytest.approx(T2_UNIT, rel=1e-15)

    def test_inverse_proportional(self):
        assert t2_from_gamma(2.0) == pytest.approx(T2_UNIT / 2, rel=1e-15)

    def test_limit(self):
        assert t2_from_gamma(1e12) < 1e-11

    @pytest.mark.parametrize("g", [0.0, -1.0, float("nan")])
    def test_domain(self, g):
        with pytest.raises(ValueError):
            t2_from_gamma(g)


class TestRegisterChannel:
    def test_channel_on_one_qubit_of_product(self, rng):
        a, b = random_density(rng), random_density(rng)
        ch = NoiseChannel(0.2, 0.1, 0.3, 1.5, 0.8)
        for compensate in (True, False):
            got = apply_channel(tensor_product(a, b), ch, 1, compensate)
            want = tensor_product(a, evolve_closed_form(b, ch, compensate))
            np.testing.assert_allclose(got.matrix, want.matrix, atol=1e-12)

    def test_channel_on_entangled_register_stays_valid(self):
        bell = QubitRegister([SQ2, 0, 0, SQ2])
        out = apply_channel(bell, NoiseChannel.phase_damping(0.5, 1.0), 0)
        np.testing.assert_allclose(out.matrix[0, 3], 0.5 * math.exp(-1.0), atol=1e-15)
        assert np.linalg.eigvalsh(out.matrix).min() > -1e-12
