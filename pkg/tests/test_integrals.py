"""
Tests for app.integrals.quadratics.

Tolerances:
    algebraic   : rtol=1e-12
    commutation : |{F,G}| <= 1e-12 · |∇F| · |∇G| · max(1, |x|)
    FD gradient : rtol=1e-7
"""
import itertools

import numpy as np
import pytest

from app.errors import PreconditionError
from app.integrals.quadratics import (
    BodyState,
    compute_HL,
    compute_integrals,
    fd_gradient,
    grad_c1,
    grad_c2,
    hamiltonian_field,
    hl_from_integrals,
    integral_gradients,
    kirchhoff_rhs,
    lie_poisson_bracket,
    make_pencil_rhs,
    on_weber_leaf,
    pencil_field,
    project_to_leaf,
    sample_leaf_state,
)
from app.params.algebra import SystemParams, derive_physical

RNG = np.random.default_rng(0)

RTOL = 1e-12
ATOL = 1e-12

J123 = SystemParams(j=(1.0, 2.0, 3.0), lam=1.0, lam_prime=1.0)


# ─── helpers ─────────────────────────────────────────────────────────

def _state(K, p):
    return BodyState(K=np.array(K, dtype=float), p=np.array(p, dtype=float))


def _coordinate(index):
    """Gradient provider of the linear function x_index on (K, p)."""
    def provider(state):
        grad = np.zeros(6)
        grad[index] = 1.0
        return grad[:3], grad[3:]
    return provider


def _norm(grad):
    return float(np.linalg.norm(np.concatenate(grad)))


# ═════════════════════════════════════════════════════════════════════
#  The four quadratics
# ═════════════════════════════════════════════════════════════════════

class TestComputeIntegrals:
    def test_axis_state(self):
        """K=0, p=e1 -> (0, 1, j2+j3, j2j3)."""
        values = compute_integrals(_state((0, 0, 0), (1, 0, 0)), J123)
        assert (values.c1, values.c2, values.c3, values.c4) == (0.0, 1.0, 5.0, 6.0)

    def test_axis_state_with_momentum(self):
        """K=e3, p=e1 -> (0, 1, 6, 9)."""
        values = compute_integrals(_state((0, 0, 1), (1, 0, 0)), J123)
        assert (values.c1, values.c2, values.c3, values.c4) == (0.0, 1.0, 6.0, 9.0)

    def test_decimal_state(self):
        """K=0, p=(0.6,0.8,0) -> (0, 1, 4.36, 4.08)."""
        values = compute_integrals(_state((0, 0, 0), (0.6, 0.8, 0)), J123)
        np.testing.assert_allclose((values.c1, values.c2, values.c3, values.c4), (0.0, 1.0, 4.36, 4.08),
                                   rtol=RTOL, atol=ATOL)

    def test_as_dict_keys(self):
        values = compute_integrals(_state((0, 0, 0), (1, 0, 0)), J123)
        assert list(values.as_dict()) == ['C1', 'C2', 'C3', 'C4']


class TestHamiltonianAndL:
    I = (1.0, 0.5, 1.0 / 3.0)
    m = (1.0 / 6.0, 1.0 / 3.0, 0.5)

    def test_energy_of_axis_state(self):
        """H = p1²/(2 m1) = 3."""
        H, _ = compute_HL(_state((0, 0, 0), (1, 0, 0)), self.I, self.m)
        assert H == pytest.approx(3.0, rel=RTOL)

    def test_pencil_identity(self):
        """(λ,λ′)=(0,1/2): H = 0·5 + 0.5·6 = 3."""
        params = SystemParams(j=(1.0, 2.0, 3.0), lam=0.0, lam_prime=0.5)
        values = compute_integrals(_state((0, 0, 0), (1, 0, 0)), params)
        H, _ = hl_from_integrals(values, params)
        assert H == pytest.approx(3.0, rel=RTOL)

    def test_origin(self):
        assert compute_HL(_state((0, 0, 0), (0, 0, 0)), self.I, self.m) == (0.0, 0.0)

    def test_zero_mass_refused(self):
        with pytest.raises(PreconditionError):
            compute_HL(_state((1, 0, 0), (0, 1, 0)), self.I, (1.0, 0.0, 1.0))

    @pytest.mark.parametrize('lam, lam_p', [(1.0, 1.0), (0.0, 0.5), (0.7, -0.2)])
    def test_linear_map_matches_quadratic_forms(self, lam, lam_p):
        """(H, L) from (C2, C3, C4) equals the direct evaluation at any state."""
        params = SystemParams(j=(1.0, 2.0, 3.0), lam=lam, lam_prime=lam_p)
        I, m = derive_physical(params)
        for _ in range(50):
            state = _state(RNG.standard_normal(3), RNG.standard_normal(3))
            direct = compute_HL(state, I, m)
            mapped = hl_from_integrals(compute_integrals(state, params), params)
            np.testing.assert_allclose(mapped, direct, rtol=1e-10, atol=1e-10)


# ═════════════════════════════════════════════════════════════════════
#  Lie-Poisson bracket
# ═════════════════════════════════════════════════════════════════════

class TestBracket:
    def test_coordinate_bracket(self):
        """{K1, K2} = K3."""
        state = _state((0.3, -1.2, 0.7), (0.1, 0.2, 0.3))
        assert lie_poisson_bracket(_coordinate(0), _coordinate(1), state) == pytest.approx(0.7)

    def test_antisymmetry(self):
        providers = integral_gradients(J123)
        for _ in range(20):
            state = _state(RNG.standard_normal(3), RNG.standard_normal(3))
            fwd = lie_poisson_bracket(providers['C3'], _coordinate(4), state)
            bwd = lie_poisson_bracket(_coordinate(4), providers['C3'], state)
            assert fwd == pytest.approx(-bwd, abs=1e-14)

    def test_casimirs_have_zero_fields(self):
        state = _state(RNG.standard_normal(3), RNG.standard_normal(3))
        for provider in (grad_c1, grad_c2):
            np.testing.assert_allclose(hamiltonian_field(provider, state).as_vector(), 0.0, atol=ATOL)

    def test_commutation_suite(self, leaf_states):
        """All pairs among C1..C4, H, L commute at 1000 leaf states."""
        I, m = derive_physical(J123)
        providers = integral_gradients(J123, I, m)
        assert set(providers) == {'C1', 'C2', 'C3', 'C4', 'H', 'L'}
        worst = 0.0
        for state in leaf_states:
            scale = max(1.0, float(np.linalg.norm(state.as_vector())))
            for a, b in itertools.combinations(providers, 2):
                bound = _norm(providers[a](state)) * _norm(providers[b](state)) * scale
                worst = max(worst, abs(lie_poisson_bracket(providers[a], providers[b], state)) / bound)
        assert worst <= 1e-12

    def test_fd_gradient_matches_closed_form(self):
        I, m = derive_physical(J123)
        providers = integral_gradients(J123, I, m)
        scalars = {
            'C3': lambda s: compute_integrals(s, J123).c3,
            'C4': lambda s: compute_integrals(s, J123).c4,
            'H': lambda s: compute_HL(s, I, m)[0],
            'L': lambda s: compute_HL(s, I, m)[1],
        }
        state = _state(RNG.standard_normal(3), RNG.standard_normal(3))
        for name, func in scalars.items():
            closed = np.concatenate(providers[name](state))
            numeric = np.concatenate(fd_gradient(func)(state))
            np.testing.assert_allclose(numeric, closed, rtol=1e-7, atol=1e-7)


# ═════════════════════════════════════════════════════════════════════
#  Pencil field vs Kirchhoff equations
# ═════════════════════════════════════════════════════════════════════

class TestFields:
    def test_axis_equilibrium(self):
        """K=0, p=e1 is an equilibrium of every pencil member."""
        for lam, lam_p in ((1.0, 1.0), (0.3, -2.0)):
            params = SystemParams(j=(1.0, 2.0, 3.0), lam=lam, lam_prime=lam_p)
            np.testing.assert_array_equal(pencil_field(_state((0, 0, 0), (1, 0, 0)), params).as_vector(), 0.0)

    def test_kirchhoff_axis_equilibrium(self):
        velocity = kirchhoff_rhs(_state((0, 0, 0), (1, 0, 0)), (1, 2, 3), (4, 5, 6))
        np.testing.assert_array_equal(velocity.as_vector(), 0.0)

    def test_kirchhoff_equal_inertias(self):
        """I=(1,1,1), K=(1,1,1), p=0 -> K̇ = 0."""
        velocity = kirchhoff_rhs(_state((1, 1, 1), (0, 0, 0)), (1, 1, 1), (2, 3, 4))
        np.testing.assert_array_equal(velocity.K, 0.0)

    def test_linear_in_weights(self):
        state = _state(RNG.standard_normal(3), RNG.standard_normal(3))
        single = pencil_field(state, SystemParams(j=(1.0, 2.0, 3.0), lam=0.4, lam_prime=1.3))
        double = pencil_field(state, SystemParams(j=(1.0, 2.0, 3.0), lam=0.8, lam_prime=2.6))
        np.testing.assert_allclose(double.as_vector(), 2.0 * single.as_vector(), rtol=RTOL, atol=ATOL)

    def test_field_equivalence(self, leaf_states):
        """Pencil field equals the Kirchhoff right-hand side at 1000 states."""
        I, m = derive_physical(J123)
        for state in leaf_states:
            physical = kirchhoff_rhs(state, I, m).as_vector()
            pencil = pencil_field(state, J123).as_vector()
            np.testing.assert_allclose(pencil, physical, rtol=RTOL,
                                       atol=RTOL * max(1.0, float(np.linalg.norm(physical))))

    def test_flat_rhs_matches_field(self):
        rhs = make_pencil_rhs(J123)
        state = _state(RNG.standard_normal(3), RNG.standard_normal(3))
        np.testing.assert_allclose(rhs(state.as_vector()), pencil_field(state, J123).as_vector(),
                                   rtol=RTOL, atol=ATOL)
        np.testing.assert_allclose(make_pencil_rhs(J123, sign=-1.0)(state.as_vector()),
                                   -rhs(state.as_vector()), rtol=RTOL, atol=ATOL)


# ═════════════════════════════════════════════════════════════════════
#  States and Weber's leaf
# ═════════════════════════════════════════════════════════════════════

class TestStates:
    def test_non_finite_refused(self):
        with pytest.raises(PreconditionError):
            _state((np.nan, 0, 0), (1, 0, 0))

    def test_arrays_are_read_only(self):
        state = _state((1, 0, 0), (0, 1, 0))
        with pytest.raises(ValueError):
            state.K[0] = 2.0

    def test_vector_round_trip(self):
        y = RNG.standard_normal(6)
        np.testing.assert_array_equal(BodyState.from_vector(y).as_vector(), y)

    def test_samples_lie_on_leaf(self, leaf_states):
        assert all(on_weber_leaf(state) for state in leaf_states)

    def test_projection(self):
        state = project_to_leaf(_state((1.0, 2.0, 3.0), (0.0, 3.0, 4.0)))
        assert on_weber_leaf(state)
        np.testing.assert_allclose(state.p, (0.0, 0.6, 0.8), rtol=RTOL)

    def test_projection_needs_nonzero_p(self):
        with pytest.raises(PreconditionError):
            project_to_leaf(_state((1, 0, 0), (0, 0, 0)))

    def test_sampler_is_seeded(self):
        first = sample_leaf_state(np.random.default_rng(3))
        second = sample_leaf_state(np.random.default_rng(3))
        np.testing.assert_array_equal(first.as_vector(), second.as_vector())
