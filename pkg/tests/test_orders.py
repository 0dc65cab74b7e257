"""Diffraction-order decomposition, Bessel oracle, and zero-order root."""

import math

import numpy as np
import pytest
import scipy.special
import scipy.stats
from hypothesis import given, settings
from hypothesis import strategies as st

from lightgrating.grating import (
    ComplexPhase,
    GratingBeam,
    GridSpec,
    TransmissionChannel,
    channel_set,
    compute_phi,
    truncation_order,
)
from lightgrating.orders import (
    DEFAULT_M_MAX,
    OrderSpectrum,
    absorbed_fraction,
    bessel_j,
    default_m_max,
    fourier_order_amplitudes,
    incoherent_order_intensities,
    pure_phase_orders,
    zero_order_null,
)
from lightgrating.distributions import VerticalProfile, vertical_phi_scales
from lightgrating.species import C60, C70


class TestBessel:
    def test_against_scipy_dense_grid(self):
        xs = np.linspace(-50.0, 50.0, 401)
        worst = 0.0
        for m in range(0, 41):
            for x in xs:
                worst = max(worst, abs(bessel_j(m, x) - scipy.special.jv(m, x)))
        assert worst < 1e-13

    def test_known_values(self):
        assert bessel_j(0, 0.0) == 1.0
        assert bessel_j(1, 0.0) == 0.0
        assert bessel_j(0, 2.404825557695773) == pytest.approx(0.0, abs=1e-12)
        assert bessel_j(1, 2.404825557695773) == pytest.approx(
            0.5191474972894669, rel=1e-12
        )

    def test_negative_argument_parity(self):
        # J_m(-x) = (-1)^m J_m(x)
        for m in (0, 1, 2, 5):
            assert bessel_j(m, -3.7) == pytest.approx(
                (-1.0) ** m * bessel_j(m, 3.7), rel=1e-13
            )

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            bessel_j(-1, 1.0)
        with pytest.raises(ValueError):
            bessel_j(0, 51.0)

    @settings(max_examples=80, deadline=None)
    @given(
        m=st.integers(min_value=0, max_value=30),
        x=st.floats(min_value=-50.0, max_value=50.0),
    )
    def test_matches_scipy_property(self, m, x):
        assert bessel_j(m, x) == pytest.approx(scipy.special.jv(m, x), abs=1e-13)


class TestOrderSpectrum:
    def test_indexing(self):
        intensities = np.zeros(7)
        intensities[3 + 2] = 0.5
        spec = OrderSpectrum(m_max=3, intensities=intensities)
        assert spec.intensity(2) == 0.5
        assert spec.intensity(-3) == 0.0
        assert list(spec.orders) == list(range(-3, 4))

    def test_parity_totals(self):
        intensities = np.array([0.1, 0.2, 0.3, 0.2, 0.2])
        spec = OrderSpectrum(m_max=2, intensities=intensities)
        assert spec.parity_total(0) == pytest.approx(0.1 + 0.3 + 0.2)
        assert spec.parity_total(1) == pytest.approx(0.2 + 0.2)
        assert spec.total == pytest.approx(1.0)

    def test_default_m_max_floor(self):
        assert default_m_max(ComplexPhase(0.1, 0.0)) == DEFAULT_M_MAX

    def test_default_m_max_grows_with_phase(self):
        big = ComplexPhase(20.0, 2.0)
        assert default_m_max(big) >= math.ceil(2.0 * (20.0 + 4.0 * 2.0)) + 10


class TestPurePhaseOrders:
    def test_bessel_intensities_on_even_slots(self):
        phi_re = 1.3
        spec = pure_phase_orders(phi_re, m_max=12)
        for j in range(-6, 7):
            assert spec.intensity(2 * j) == pytest.approx(
                scipy.special.jv(j, phi_re) ** 2, rel=1e-12
            )

    def test_odd_slots_empty(self):
        spec = pure_phase_orders(2.0, m_max=11)
        for m in spec.orders:
            if m % 2 != 0:
                assert spec.intensity(m) == 0.0

    def test_unitarity(self):
        for phi_re in (0.5, 1.0, 2.0, 2.404825557695773):
            spec = pure_phase_orders(phi_re, m_max=30)
            assert spec.total == pytest.approx(1.0, abs=1e-12)

    def test_first_order_at_zero_order_null(self):
        root = zero_order_null()
        spec = pure_phase_orders(root, m_max=10)
        assert spec.intensity(0) == pytest.approx(0.0, abs=1e-15)
        # about 27% of the beam lands in each first-order peak at the null
        assert spec.intensity(2) == pytest.approx(
            scipy.special.jv(1, root) ** 2, rel=1e-12
        )
        assert 0.25 < spec.intensity(2) < 0.28


class TestFourierAmplitudes:
    GRID = GridSpec(periods=2, samples_per_period=1024)

    def test_uniform_transmission(self):
        samples = np.ones(self.GRID.size, dtype=complex)
        c = fourier_order_amplitudes(TransmissionChannel(0, samples, self.GRID), m_max=5)
        assert c[5] == pytest.approx(1.0, rel=1e-14)
        others = np.delete(c, 5)
        assert np.max(np.abs(others)) < 1e-14

    def test_single_harmonic(self):
        k = 2.0 * math.pi / self.GRID.wavelength
        x = self.GRID.positions()
        samples = np.exp(2.0j * k * x)
        c = fourier_order_amplitudes(TransmissionChannel(0, samples, self.GRID), m_max=4)
        assert c[4 + 2] == pytest.approx(1.0, rel=1e-13)
        assert abs(c[4 - 2]) < 1e-14

    def test_square_wave_amplitudes(self):
        # sign(cos kx) has |c_m| = 2/(pi |m|) for odd m, 0 for even m
        k = 2.0 * math.pi / self.GRID.wavelength
        x = self.GRID.positions()
        samples = np.sign(np.cos(k * x)).astype(complex)
        c = fourier_order_amplitudes(TransmissionChannel(0, samples, self.GRID), m_max=5)
        for m in (-1, 1):
            assert abs(c[5 + m]) == pytest.approx(2.0 / math.pi, abs=1e-5)
        for m in (-3, 3):
            assert abs(c[5 + m]) == pytest.approx(2.0 / (3.0 * math.pi), abs=1e-5)
        for m in (-2, 0, 2):
            assert abs(c[5 + m]) < 1e-6

    def test_pure_phase_channel_matches_bessel(self):
        # exp(2i phi cos^2) decomposes with |c_2j| = |J_j(phi)| exactly
        phi = ComplexPhase(1.7, 0.0)
        channels = channel_set(phi, self.GRID)
        c = fourier_order_amplitudes(channels[0], m_max=12)
        for j in range(-6, 7):
            assert abs(c[12 + 2 * j]) == pytest.approx(
                abs(scipy.special.jv(j, phi.re)), abs=1e-12
            )

    def test_coherent_channel_selection_rule(self):
        # the zero-photon channel is half-period periodic: odd slots vanish
        channels = channel_set(ComplexPhase(2.28, 0.386), self.GRID)
        c = fourier_order_amplitudes(channels[0], m_max=9)
        odd = [abs(c[9 + m]) ** 2 for m in range(-9, 10) if m % 2 != 0]
        assert max(odd) < 1e-12

    def test_odd_channel_populates_odd_slots_only(self):
        channels = channel_set(ComplexPhase(2.28, 0.386), self.GRID)
        c = fourier_order_amplitudes(channels[1], m_max=9)
        even = [abs(c[9 + m]) ** 2 for m in range(-9, 10) if m % 2 == 0]
        assert max(even) < 1e-12

    def test_incommensurate_window_rejected(self):
        with pytest.raises(ValueError):
            GridSpec(periods=1, samples_per_period=64)


class TestIncoherentSpectrum:
    def test_total_unity_moderate_absorption(self):
        spec = incoherent_order_intensities(ComplexPhase(1.0, 0.1))
        assert abs(1.0 - spec.total) < 1e-10 + 1e-9

    def test_total_unity_c70_default(self):
        # the 12-photon cap leaves ~2e-9 of the Poisson tail uncovered at
        # Im(phi) = 0.386, slightly above the uncapped tail_eps + 1e-9 bound
        phi = compute_phi(C70, GratingBeam(), 120.0)
        spec = incoherent_order_intensities(phi)
        assert abs(1.0 - spec.total) < 5e-9

    def test_mirror_symmetry(self):
        spec = incoherent_order_intensities(ComplexPhase(2.28, 0.386))
        for m in range(1, spec.m_max + 1):
            assert spec.intensity(m) == pytest.approx(spec.intensity(-m), abs=1e-14)

    def test_matches_bessel_for_pure_phase(self):
        for phi_re in (0.5, 1.0, 2.0):
            spec = incoherent_order_intensities(ComplexPhase(phi_re, 0.0))
            oracle = pure_phase_orders(phi_re, m_max=spec.m_max)
            for m in spec.orders:
                assert spec.intensity(m) == pytest.approx(
                    oracle.intensity(m), abs=1e-10
                )

    def test_per_channel_intensities_recorded(self):
        phi = ComplexPhase(1.5, 0.2)
        spec = incoherent_order_intensities(phi)
        assert spec.per_channel is not None
        assert sorted(spec.per_channel) == list(range(truncation_order(phi) + 1))
        stacked = sum(spec.per_channel.values())
        assert np.allclose(stacked, spec.intensities, atol=1e-15)

    def test_odd_parity_weight_comes_from_absorption(self):
        spec = incoherent_order_intensities(ComplexPhase(2.28, 0.386))
        odd = spec.parity_total(1)
        even_from_odd_channels = sum(
            spec.per_channel[n][spec.m_max :: 2].sum()
            for n in spec.per_channel
            if n % 2 != 0
        )
        assert odd > 0.2  # substantial absorption at this power
        assert even_from_odd_channels < 1e-12

    @settings(max_examples=25, deadline=None)
    @given(
        re=st.floats(min_value=0.0, max_value=3.0),
        im=st.floats(min_value=0.0, max_value=0.3),
    )
    def test_conservation_property(self, re, im):
        spec = incoherent_order_intensities(ComplexPhase(re, im))
        assert abs(1.0 - spec.total) < 1e-10 + 1e-9


class TestZeroOrderNull:
    def test_root_value(self):
        root = zero_order_null()
        assert root == pytest.approx(2.40483, abs=1e-4)
        assert abs(scipy.special.jv(0, root)) < 1e-9

    def test_bracketed(self):
        assert 2.0 < zero_order_null() < 3.0

    def test_null_power_for_c60(self):
        phi_unit = compute_phi(C60, GratingBeam(power=1.0), 120.0)
        p_null = zero_order_null() / phi_unit.re
        assert p_null == pytest.approx(11.712072224475481, rel=1e-10)


class TestAbsorbedFraction:
    def test_no_absorption(self):
        assert absorbed_fraction(ComplexPhase(1.0, 0.0), 0) == pytest.approx(1.0)
        assert absorbed_fraction(ComplexPhase(1.0, 0.0), 2) == 0.0

    def test_matches_poisson_average_oracle(self):
        # independent oracle: average scipy pmf over one standing-wave period
        phi = ComplexPhase(1.0, 0.25)
        x = (np.arange(4096) + 0.5) / 4096.0  # phase fraction of one period
        nbar = 4.0 * phi.im * np.cos(math.pi * x) ** 2
        for n in (0, 1, 2, 3):
            oracle = float(np.mean(scipy.stats.poisson.pmf(n, nbar)))
            assert absorbed_fraction(phi, n) == pytest.approx(oracle, abs=1e-9)

    def test_c70_two_photon_fraction(self):
        phi = compute_phi(C70, GratingBeam(), 120.0)
        frac = absorbed_fraction(phi, 2)
        assert frac == pytest.approx(0.13, abs=0.01)

    def test_c60_two_photon_with_vertical_averaging(self):
        phi = compute_phi(C60, GratingBeam(), 120.0)
        scales, weights = vertical_phi_scales(VerticalProfile(), 16)
        frac = absorbed_fraction(phi, 2, vertical_scales=scales, vertical_weights=weights)
        assert frac == pytest.approx(0.04, abs=0.02)

    def test_fractions_sum_to_one(self):
        phi = ComplexPhase(1.5, 0.3)
        total = sum(absorbed_fraction(phi, n) for n in range(0, 14))
        assert total == pytest.approx(1.0, abs=1e-9)

    def test_vertical_averaging_reduces_absorption(self):
        phi = compute_phi(C70, GratingBeam(), 120.0)
        scales, weights = vertical_phi_scales(VerticalProfile(), 16)
        averaged = absorbed_fraction(phi, 2, vertical_scales=scales, vertical_weights=weights)
        assert averaged < absorbed_fraction(phi, 2)

    def test_negative_photon_count_rejected(self):
        with pytest.raises(ValueError):
            absorbed_fraction(ComplexPhase(1.0, 0.1), -1)
