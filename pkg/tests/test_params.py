"""
Tests for app.params.algebra.

Tolerances:
    exact      : Fraction inputs compared with ==
    algebraic  : rtol=1e-12
"""
from fractions import Fraction

import numpy as np
import pytest

from app.errors import (
    DegeneratePencilError,
    ParameterDegeneracyError,
    ParameterError,
    PreconditionError,
)
from app.params.algebra import (
    SystemParams,
    check_clebsch,
    clebsch_nu,
    compute_lmn,
    d_params,
    derive_physical,
    lmn_from_roots,
    pencil_matrix,
    roots_j45,
    spectral_data,
)

RNG = np.random.default_rng(0)

RTOL = 1e-12
ATOL = 1e-12


# ═════════════════════════════════════════════════════════════════════
#  SystemParams
# ═════════════════════════════════════════════════════════════════════

class TestSystemParams:
    def test_rejects_non_increasing_moduli(self):
        """j must be strictly increasing."""
        with pytest.raises(ParameterError):
            SystemParams(j=(2.0, 1.0, 3.0))
        with pytest.raises(ParameterError):
            SystemParams(j=(1.0, 1.0, 3.0))

    def test_rejects_non_finite(self):
        """NaN and infinity are refused."""
        with pytest.raises(ParameterError):
            SystemParams(j=(1.0, 2.0, float('nan')))
        with pytest.raises(ParameterError):
            SystemParams(j=(1.0, 2.0, 3.0), lam=float('inf'))

    def test_parameter_error_is_value_error(self):
        """Generic callers can catch ValueError."""
        with pytest.raises(ValueError):
            SystemParams(j=(3.0, 2.0, 1.0))

    def test_from_dict_uses_config_keys(self):
        """Keys j, lambda, lambda_prime."""
        params = SystemParams.from_dict({'j': [1, 2, 3], 'lambda': 0.5, 'lambda_prime': 2})
        assert params.j == (1, 2, 3)
        assert params.lam == 0.5 and params.lam_prime == 2
        assert params.to_dict() == {'j': [1.0, 2.0, 3.0], 'lambda': 0.5, 'lambda_prime': 2.0}

    def test_from_dict_missing_key(self):
        with pytest.raises(ParameterError):
            SystemParams.from_dict({'j': [1, 2, 3], 'lambda': 1})

    def test_n_prime_defined_at_zero_modulus(self):
        """λ′ j_β j_γ stays finite when j_α = 0."""
        params = SystemParams(j=(0, 1, 2), lam=0, lam_prime=1)
        assert params.n_prime == (2, 0, 0)


# ═════════════════════════════════════════════════════════════════════
#  Pencil-to-physical map
# ═════════════════════════════════════════════════════════════════════

class TestDerivePhysical:
    def test_pure_c4_member(self):
        """j=(1,2,3), λ=0, λ′=1/2 -> I=(1,1/2,1/3), m=(1/6,1/3,1/2)."""
        I, m = derive_physical(SystemParams(j=(1, 2, 3), lam=Fraction(0), lam_prime=Fraction(1, 2)))
        assert I == (Fraction(1), Fraction(1, 2), Fraction(1, 3))
        assert m == (Fraction(1, 6), Fraction(1, 3), Fraction(1, 2))

    def test_pure_c3_member(self):
        """j=(1,2,3), λ=1/2, λ′=0 -> I=(1,1,1), m=(1/5,1/4,1/3)."""
        I, m = derive_physical(SystemParams(j=(1, 2, 3), lam=Fraction(1, 2), lam_prime=Fraction(0)))
        assert I == (1, 1, 1)
        assert m == (Fraction(1, 5), Fraction(1, 4), Fraction(1, 3))

    def test_vanishing_n_refused(self):
        """λ=1, λ′=−1 makes n_1 = 1 − j_1 = 0."""
        with pytest.raises(DegeneratePencilError):
            derive_physical(SystemParams(j=(1.0, 2.0, 3.0), lam=1.0, lam_prime=-1.0))

    def test_outputs_satisfy_clebsch_condition(self):
        """Property over random (j, λ, λ′)."""
        checked = 0
        for _ in range(200):
            j = np.sort(RNG.uniform(-3.0, 3.0, size=3))
            lam, lam_p = RNG.uniform(-2.0, 2.0, size=2)
            try:
                I, m = derive_physical(SystemParams(j=tuple(j), lam=lam, lam_prime=lam_p))
            except DegeneratePencilError:
                continue
            assert check_clebsch(I, m)
            checked += 1
        assert checked > 150

    def test_clebsch_nu_reproduces_masses(self):
        """1/m_α = ν + ν′ I_α/(I1 I2 I3) for Clebsch data."""
        I, m = derive_physical(SystemParams(j=(1.0, 2.0, 3.0), lam=1.0, lam_prime=1.0))
        nu, nu_p = clebsch_nu(I, m)
        I = np.asarray(I)
        np.testing.assert_allclose(nu + nu_p * I / np.prod(I), 1.0 / np.asarray(m), rtol=RTOL)


class TestCheckClebsch:
    def test_known_true(self):
        """(1/2−1/3)·6 + (1/3−1)·3 + (1−1/2)·2 = 0."""
        assert check_clebsch((1, Fraction(1, 2), Fraction(1, 3)), (Fraction(1, 6), Fraction(1, 3), Fraction(1, 2)))

    def test_equal_inertias(self):
        """I=(c,c,c) satisfies the condition for any m."""
        assert check_clebsch((2.5, 2.5, 2.5), (1.0, 7.0, -3.0))

    def test_known_false(self):
        """I=(1,2,3), m=(1,1,2): sum is 1/2."""
        assert not check_clebsch((1, 2, 3), (1, 1, 2))

    def test_zero_mass_refused(self):
        with pytest.raises(PreconditionError):
            check_clebsch((1, 2, 3), (1, 0, 2))


# ═════════════════════════════════════════════════════════════════════
#  c-dependent constants
# ═════════════════════════════════════════════════════════════════════

class TestComputeLmn:
    def test_closed_form_levels(self):
        """j=(1,2,3), c=(5,6) -> (1,0,0)."""
        np.testing.assert_allclose(compute_lmn(SystemParams(j=(1.0, 2.0, 3.0)), 5.0, 6.0), (1.0, 0.0, 0.0),
                                   rtol=RTOL, atol=ATOL)

    def test_decimal_levels(self):
        """j=(1,2,3), c=(4.36,4.08) -> (0.36,0.64,0)."""
        np.testing.assert_allclose(compute_lmn(SystemParams(j=(1.0, 2.0, 3.0)), 4.36, 4.08), (0.36, 0.64, 0.0),
                                   rtol=RTOL, atol=ATOL)

    def test_exact_with_fractions(self):
        """Rational inputs give rational outputs."""
        lmn = compute_lmn(SystemParams(j=(1, 2, 3)), Fraction(109, 25), Fraction(102, 25))
        assert lmn == (Fraction(9, 25), Fraction(16, 25), 0)

    def test_weights_sum_to_one(self):
        params = SystemParams(j=(-1.0, 0.5, 2.0))
        for c3, c4 in RNG.uniform(-5.0, 5.0, size=(20, 2)):
            assert sum(compute_lmn(params, c3, c4)) == pytest.approx(1.0, rel=RTOL)

    def test_solves_pencil_system(self):
        params = SystemParams(j=(1.0, 2.0, 4.0))
        lmn = compute_lmn(params, 4.5, 3.25)
        np.testing.assert_allclose(pencil_matrix(params) @ np.array(lmn), (1.0, 4.5, 3.25), rtol=RTOL)

    def test_from_roots_agrees(self):
        params = SystemParams(j=(1.0, 2.0, 3.0))
        np.testing.assert_allclose(lmn_from_roots(params, 1.36, 3.0), compute_lmn(params, 4.36, 4.08),
                                   rtol=RTOL, atol=ATOL)

    def test_singular_matrix_refused(self):
        """Bypass validation to reach the Δ = 0 guard."""
        params = SystemParams(j=(1.0, 2.0, 3.0))
        object.__setattr__(params, 'j', (1.0, 1.0, 3.0))
        with pytest.raises(ParameterDegeneracyError):
            compute_lmn(params, 5.0, 6.0)


class TestRoots:
    def test_factorable(self):
        """(5,6) -> (2,3)."""
        roots = roots_j45(5.0, 6.0)
        assert roots.is_real
        assert tuple(roots) == pytest.approx((2.0, 3.0), rel=RTOL)

    def test_double_root(self):
        """(2σ′, σ′²) -> (σ′, σ′)."""
        roots = roots_j45(6.0, 9.0)
        assert (roots.j4, roots.j5) == (3.0, 3.0)

    def test_decimal(self):
        """(4.36, 4.08) -> (1.36, 3.0)."""
        assert tuple(roots_j45(4.36, 4.08)) == pytest.approx((1.36, 3.0), rel=1e-12)

    def test_conjugate_pair(self):
        """x² − 2x + 5 has roots 1 ∓ 2i."""
        roots = roots_j45(2.0, 5.0)
        assert not roots.is_real
        assert roots.j4 == pytest.approx(1 - 2j)
        assert roots.j5 == pytest.approx(1 + 2j)

    def test_vieta(self):
        for c3, c4 in RNG.uniform(-10.0, 10.0, size=(20, 2)):
            roots = roots_j45(c3, c4)
            assert complex(roots.j4 + roots.j5) == pytest.approx(c3, rel=1e-12, abs=1e-12)
            assert complex(roots.j4 * roots.j5) == pytest.approx(c4, rel=1e-10, abs=1e-10)


class TestDParams:
    def test_standard(self):
        """j=(1,2,3) -> (1, −1/2, 1)."""
        assert d_params(SystemParams(j=(1, 2, 3))) == pytest.approx((1.0, -0.5, 1.0))

    def test_exact(self):
        """j=(1,2,4) -> (1/2, −1/3, 1) with Fractions."""
        d = d_params(SystemParams(j=(Fraction(1), Fraction(2), Fraction(4))))
        assert d == (Fraction(1, 2), Fraction(-1, 3), Fraction(1))

    def test_reciprocals_sum_to_zero(self):
        d = d_params(SystemParams(j=(Fraction(-2), Fraction(1, 3), Fraction(5))))
        assert sum(1 / v for v in d) == 0


class TestSpectralData:
    def test_bundle(self):
        data = spectral_data(SystemParams(j=(1.0, 2.0, 3.0)), 4.36, 4.08)
        assert data.lmn == pytest.approx((0.36, 0.64, 0.0), abs=ATOL)
        assert (data.j4, data.j5) == pytest.approx((1.36, 3.0))
        assert data.roots_real
        assert data.d == pytest.approx((1.0, -0.5, 1.0))
