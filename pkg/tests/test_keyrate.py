import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from polattack.core_model import distance_to_transmittance
from polattack.errors import DomainError, NoPositiveRateError, UnphysicalStateError
from polattack.keyrate import (
    TwoModeCovariance,
    bisect,
    build_covariance,
    chi_total,
    conditional_covariance_homodyne,
    g_function,
    holevo_bound,
    mutual_information,
    secret_key_rate,
    spectrum,
    symplectic_eigenvalues,
    tolerable_excess_noise,
)

from oracles import (
    bisect_sign_change,
    conditional_on_xb,
    covariance_matrix,
    key_rate_reference,
    symplectic_spectrum_numeric,
    thermal_entropy,
)


class TestCovariance:
    def test_pure(self):
        g = build_covariance(19, 1.0, 0.0)
        assert (g.a, g.b) == (20.0, 20.0)
        assert g.c == pytest.approx(math.sqrt(399))
        assert g.a * g.b - g.c ** 2 == pytest.approx(1.0)

    def test_lossy_limit(self):
        g = build_covariance(19, 1e-12, 0.0)
        assert g.b == pytest.approx(1.0)
        assert g.c == pytest.approx(0.0, abs=1e-4)

    def test_half(self):
        g = build_covariance(19, 0.5, 0.01)
        assert (g.a, g.b, g.c) == pytest.approx((20, 10.505, math.sqrt(199.5)))
        assert g.c == pytest.approx(14.1245, abs=1e-4)

    def test_matrix_matches_oracle_layout(self):
        np.testing.assert_allclose(build_covariance(5, 0.3, 0.1).matrix(), covariance_matrix(5, 0.3, 0.1))

    def test_unphysical(self):
        with pytest.raises(UnphysicalStateError):
            TwoModeCovariance(2.0, 2.0, 2.0)
        with pytest.raises(UnphysicalStateError):
            build_covariance(19, 0.5, -1.0)

    @given(st.floats(0.01, 60), st.floats(1e-4, 1), st.floats(0, 2))
    def test_physical_inputs_are_physical(self, va, t, eps):
        g = build_covariance(va, t, eps)
        assert g.a * g.b - g.c ** 2 >= 1 - 1e-9


class TestScalars:
    def test_chi(self):
        assert chi_total(1.0, 0.0) == 0.0
        assert chi_total(0.5, 0.01) == pytest.approx(1.01)
        assert chi_total(0.1, 0.0) == pytest.approx(9.0)
        with pytest.raises(DomainError):
            chi_total(0.0, 0.1)

    def test_mutual_information(self):
        assert mutual_information(0.0, 0.3) == 0.0
        assert mutual_information(19, 0.0) == pytest.approx(0.5 * math.log2(20))
        assert mutual_information(19, 0.0) == pytest.approx(2.1610, abs=1e-4)
        assert mutual_information(19, 1.01) == pytest.approx(1.692904377747059, abs=1e-12)
        assert mutual_information(19, 1.01) == pytest.approx(1.6929, abs=1e-4)

    def test_g(self):
        assert g_function(0.0) == 0.0
        assert g_function(1.0) == pytest.approx(2.0)
        assert g_function(0.5) == pytest.approx(1.3774, abs=1e-4)
        with pytest.raises(DomainError):
            g_function(-0.5)

    @given(st.floats(0, 30))
    def test_g_matches_thermal_sum(self, x):
        assert g_function(x) == pytest.approx(thermal_entropy(x), abs=1e-9)


class TestSymplectic:
    def test_pure(self):
        l1, l2 = symplectic_eigenvalues(build_covariance(19, 1.0, 0.0))
        assert l1 == pytest.approx(1.0, abs=1e-9)
        assert l2 == pytest.approx(1.0, abs=1e-9)

    def test_lossy_noisy(self):
        l1, l2 = symplectic_eigenvalues(build_covariance(19, 0.5, 0.01))
        # frozen from |eig(i*Omega*gamma)|
        assert l1 == pytest.approx(10.504127159196617, abs=1e-10)
        assert l2 == pytest.approx(1.009127159196613, abs=1e-10)

    def test_product_state(self):
        assert symplectic_eigenvalues(TwoModeCovariance(3.0, 2.0, 0.0)) == pytest.approx((3.0, 2.0))

    @given(st.floats(0.5, 50), st.floats(0.001, 1), st.floats(0, 1))
    def test_against_numeric_oracle(self, va, t, eps):
        got = symplectic_eigenvalues(build_covariance(va, t, eps))
        want = symplectic_spectrum_numeric(covariance_matrix(va, t, eps))
        assert got == pytest.approx(tuple(want), abs=1e-10 * max(1, want[0]))


class TestConditional:
    def test_pure(self):
        _, l3 = conditional_covariance_homodyne(build_covariance(19, 1.0, 0.0))
        assert l3 == pytest.approx(1.0, abs=1e-9)

    def test_uncorrelated(self):
        cond, l3 = conditional_covariance_homodyne(TwoModeCovariance(4.0, 2.0, 0.0))
        assert l3 == pytest.approx(4.0)
        np.testing.assert_allclose(cond, np.diag([4.0, 4.0]))

    def test_value(self):
        cond, l3 = conditional_covariance_homodyne(build_covariance(19, 0.5, 0.01))
        assert l3 == pytest.approx(math.sqrt(20 * (20 - 199.5 / 10.505)), rel=1e-12)
        assert l3 == pytest.approx(4.492, abs=1e-3)
        np.testing.assert_allclose(cond, np.diag([20 - 199.5 / 10.505, 20]), rtol=1e-12)

    @given(st.floats(0.5, 50), st.floats(0.001, 1), st.floats(0, 1))
    def test_matches_schur_complement(self, va, t, eps):
        cond, _ = conditional_covariance_homodyne(build_covariance(va, t, eps))
        np.testing.assert_allclose(cond, conditional_on_xb(covariance_matrix(va, t, eps)), rtol=1e-10, atol=1e-10)


class TestKeyRate:
    def test_pure_channel(self):
        assert holevo_bound(19, 1.0, 0.0) == pytest.approx(0.0, abs=1e-9)
        assert secret_key_rate(19, 0.95, 1.0, 0.0) == pytest.approx(0.95 * 0.5 * math.log2(20), abs=1e-9)
        assert secret_key_rate(19, 0.95, 1.0, 0.0) == pytest.approx(2.0530, abs=1e-4)

    def test_lossy_value(self):
        assert secret_key_rate(19, 0.95, 0.5, 0.01) == pytest.approx(0.3308384183423241, abs=1e-9)

    def test_negative_not_clamped(self):
        assert secret_key_rate(19, 0.95, 0.5, 1.0) < 0

    @given(st.floats(1, 40), st.floats(0.5, 1), st.floats(0.02, 1), st.floats(0, 0.5))
    def test_against_reference(self, va, beta, t, eps):
        want, _, _ = key_rate_reference(va, beta, t, eps)
        assert secret_key_rate(va, beta, t, eps) == pytest.approx(want, abs=1e-8)

    def test_monotone_grid(self):
        for t in np.linspace(0.05, 1, 8):
            rates = [secret_key_rate(19, 0.95, t, e) for e in np.linspace(0, 0.5, 12)]
            assert np.all(np.diff(rates) < 0)
            by_beta = [secret_key_rate(19, b, t, 0.01) for b in (0.8, 0.9, 0.95, 1.0)]
            assert np.all(np.diff(by_beta) > 0)

    def test_domain(self):
        with pytest.raises(DomainError):
            secret_key_rate(19, 0.0, 0.5, 0.0)
        with pytest.raises(DomainError):
            secret_key_rate(19, 0.95, 0.0, 0.0)

    def test_spectrum_ordering(self):
        sp = spectrum(19, 0.3, 0.05)
        assert sp.lambda1 >= sp.lambda2 >= 1 - 1e-9
        assert sp.lambda3 >= 1 - 1e-9


class TestTolerableNoise:
    def test_bracketing(self):
        e = tolerable_excess_noise(19, 0.95, 0.5)
        assert secret_key_rate(19, 0.95, 0.5, e - 1e-6) > 0 > secret_key_rate(19, 0.95, 0.5, e + 1e-6)
        assert abs(secret_key_rate(19, 0.95, 0.5, e)) < 1e-9

    def test_frozen_values(self):
        # frozen from bisection on tests/oracles.py::key_rate_reference
        assert tolerable_excess_noise(19, 0.95, 1.0) == pytest.approx(0.3237190009686639, abs=1e-9)
        assert tolerable_excess_noise(19, 0.95, 0.5) == pytest.approx(0.17917145004271462, abs=1e-9)
        assert tolerable_excess_noise(19, 1.0, 1.0) == pytest.approx(0.3638553031723841, abs=1e-9)

    def test_perfect_reconciliation_tolerates_more(self):
        assert tolerable_excess_noise(19, 1.0, 1.0) > tolerable_excess_noise(19, 0.95, 1.0)

    def test_decreasing_in_distance(self):
        vals = [tolerable_excess_noise(19, 0.95, distance_to_transmittance(d)) for d in range(5, 61)]
        assert np.all(np.diff(vals) < 0)

    def test_no_positive_rate(self):
        # low reconciliation efficiency at long distance leaves no key even at eps = 0
        with pytest.raises(NoPositiveRateError):
            tolerable_excess_noise(19, 0.5, 0.01)


def test_bisect_generic():
    assert bisect(lambda x: 2.0 - x * x, 0.0, 2.0) == pytest.approx(math.sqrt(2), abs=1e-12)
    assert bisect_sign_change(lambda x: 2.0 - x * x, 0.0, 2.0) == pytest.approx(math.sqrt(2), abs=1e-12)
