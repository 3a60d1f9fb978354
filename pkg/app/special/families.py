"""
Invariant three-dimensional subspaces and their reduced systems.

Two kinds of subspaces carry special solutions:

- axis type: p_α = K_β = K_γ = 0, reduced variables (K_α, p_β, p_γ);
- delta type: p_α = δ_α K_α for all α, reduced variables K.

On each the flow is the Hamiltonian field of a modified bracket
{F, G}_M(x) = ⟨x, M(∇F × ∇G)⟩, i.e. (Mx) × ∇F.
"""
import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, Optional, Tuple, Union

import numpy as np

from app.conf import get_setting
from app.dynamics.integrator import integrate_field
from app.errors import DegeneratePencilError, NoRealFamilyError, PreconditionError
from app.integrals.quadratics import BodyState, compute_integrals, make_pencil_rhs
from app.params.algebra import SystemParams, derive_physical

logger = logging.getLogger(__name__)

Field6 = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class ModifiedBracketSystem:
    mu: Tuple[float, float, float]
    f: Tuple[float, float, float]

    def quadratics(self, x: np.ndarray) -> Tuple[float, float]:
        """(½⟨x, Mx⟩, ½⟨x, diag(f) x⟩), both conserved by the field."""
        x = np.asarray(x, dtype=float)
        return 0.5 * float(np.sum(np.asarray(self.mu) * x * x)), 0.5 * float(np.sum(np.asarray(self.f) * x * x))


def modified_field(system: ModifiedBracketSystem, x: np.ndarray) -> np.ndarray:
    """(Mx) × ∇F for F = ½⟨x, diag(f) x⟩."""
    mu1, mu2, mu3 = system.mu
    f1, f2, f3 = system.f
    x1, x2, x3 = x
    return np.array([
        (mu2 * f3 - mu3 * f2) * x2 * x3,
        (mu3 * f1 - mu1 * f3) * x3 * x1,
        (mu1 * f2 - mu2 * f1) * x1 * x2,
    ])


def _cyclic(axis: int) -> Tuple[int, int, int]:
    if axis not in (1, 2, 3):
        raise PreconditionError(f"Axis must be 1, 2 or 3, got {axis}")
    a = axis - 1
    return a, (a + 1) % 3, (a + 2) % 3


# ─── axis families ─────────────────────────────────────────────────────


@dataclass(frozen=True)
class AxisSubspace:
    """p_α = K_β = K_γ = 0."""

    axis: int

    def deviation(self, states: np.ndarray) -> np.ndarray:
        a, b, c = _cyclic(self.axis)
        states = np.atleast_2d(states)
        return np.max(np.abs(states[:, [3 + a, b, c]]), axis=1)


def axis_condition_residual(params: SystemParams, c3: float, c4: float, axis: int) -> float:
    """j_α² − c3·j_α + c4, i.e. (j_α − j4)(j_α − j5)."""
    a, _, _ = _cyclic(axis)
    ja = float(params.j[a])
    return ja * ja - c3 * ja + c4


def axis_subspace_check(params: SystemParams, c3: float, c4: float, axis: int,
                        tol: Optional[float] = None) -> bool:
    """Necessary condition for the axis family: j_α is one of j4, j5."""
    if tol is None:
        tol = get_setting('CLEBSCH_TOL_REL')
    a, _, _ = _cyclic(axis)
    ja = float(params.j[a])
    scale = max(ja * ja, abs(c3 * ja), abs(c4), 1.0)
    return abs(axis_condition_residual(params, c3, c4, axis)) <= tol * scale


def axis_system(params: SystemParams, axis: int) -> ModifiedBracketSystem:
    """Reduced system in x = (K_α, p_β, p_γ): μ = (1/I_α, 1/m_β, 1/m_γ), f = (0, −1, −1)."""
    a, b, c = _cyclic(axis)
    I, m = derive_physical(params)
    return ModifiedBracketSystem(mu=(1.0 / I[a], 1.0 / m[b], 1.0 / m[c]), f=(0.0, -1.0, -1.0))


def axis_family_state(axis: int, k_axis: float, angle: float) -> BodyState:
    """K = k_axis·e_α, p = cos(angle)·e_β + sin(angle)·e_γ; on Weber's leaf."""
    a, b, c = _cyclic(axis)
    K, p = np.zeros(3), np.zeros(3)
    K[a] = k_axis
    p[b], p[c] = math.cos(angle), math.sin(angle)
    return BodyState(K=K, p=p)


def axis_reduced_coordinates(state: BodyState, axis: int) -> np.ndarray:
    a, b, c = _cyclic(axis)
    return np.array([state.K[a], state.p[b], state.p[c]])


# ─── delta families ────────────────────────────────────────────────────


@dataclass(frozen=True)
class DeltaFamily:
    """p_α = δ_α K_α with j_α = σ·δ_α + σ′ and (j1−σ′)(j2−σ′)(j3−σ′) = σ²."""

    delta: Tuple[float, float, float]
    sigma: float
    sigma_prime: float


@dataclass(frozen=True)
class DeltaSubspace:
    family: DeltaFamily

    def deviation(self, states: np.ndarray) -> np.ndarray:
        states = np.atleast_2d(states)
        return np.max(np.abs(states[:, 3:6] - np.asarray(self.family.delta) * states[:, :3]), axis=1)


Subspace = Union[AxisSubspace, DeltaSubspace]


def delta_family_from_sigma(params: SystemParams, sigma_prime: float) -> DeltaFamily:
    """
    σ = +sqrt(Π(j_α − σ′)), δ_α = (j_α − σ′)/σ.

    Examples:
        j=(1,2,4), σ′=3 -> σ=√2, δ=(−√2, −1/√2, 1/√2)
    """
    shifted = [float(ja) - sigma_prime for ja in params.j]
    product = shifted[0] * shifted[1] * shifted[2]
    if product <= 0:
        raise NoRealFamilyError(
            f"(j1-s')(j2-s')(j3-s') = {product:.6g} is not positive for s' = {sigma_prime}",
            sigma_prime=sigma_prime,
        )
    sigma = math.sqrt(product)
    return DeltaFamily(delta=tuple(v / sigma for v in shifted), sigma=sigma, sigma_prime=float(sigma_prime))


def delta_system(params: SystemParams, family: DeltaFamily) -> ModifiedBracketSystem:
    """Reduced system in x = K: μ_α = δ_α/(δ_β δ_γ), f_α = δ_α/I_α."""
    I, _ = derive_physical(params)
    d1, d2, d3 = family.delta
    return ModifiedBracketSystem(
        mu=(d1 / (d2 * d3), d2 / (d3 * d1), d3 / (d1 * d2)),
        f=(d1 / I[0], d2 / I[1], d3 / I[2]),
    )


def delta_family_state(family: DeltaFamily, rng: Optional[np.random.Generator] = None) -> BodyState:
    """
    A state with p = δ∘K, C1 = 0 and C2 = 1.

    k = (K_α²) solves Σδ_α k_α = 0, Σδ_α² k_α = 1; the solution line
    k0 + τ(δ × δ²) is intersected with k ≥ 0.
    """
    delta = np.asarray(family.delta, dtype=float)
    system = np.vstack([delta, delta * delta])
    k0, *_ = np.linalg.lstsq(system, np.array([0.0, 1.0]), rcond=None)
    direction = np.cross(delta, delta * delta)
    lower, upper = -math.inf, math.inf
    for k, d in zip(k0, direction):
        if d > 0:
            lower = max(lower, -k / d)
        elif d < 0:
            upper = min(upper, -k / d)
        elif k < 0:
            raise NoRealFamilyError("No non-negative K^2 satisfies the leaf conditions on this family")
    if lower > upper:
        raise NoRealFamilyError("No non-negative K^2 satisfies the leaf conditions on this family")
    width = 1.0 / max(np.linalg.norm(direction), 1e-300)
    if math.isinf(lower):
        lower = upper - width
    if math.isinf(upper):
        upper = lower + width
    u = 0.5 if rng is None else rng.uniform(0.1, 0.9)
    k = np.maximum(k0 + (lower + u * (upper - lower)) * direction, 0.0)
    signs = np.ones(3) if rng is None else rng.choice([-1.0, 1.0], size=3)
    K = signs * np.sqrt(k)
    return BodyState(K=K, p=delta * K)


# ─── invariance and reduced conservation ───────────────────────────────


def subspace_invariance_test(field: Field6, subspace: Subspace, state0: BodyState,
                             horizon: float, h: float) -> float:
    """Largest distance from the subspace along the integrated trajectory."""
    start = float(subspace.deviation(state0.as_vector())[0])
    if start > 1e-12:
        logger.info("Initial state is %.3e away from the subspace", start)
    _, states = integrate_field(field, state0.as_vector(), horizon, h)
    return float(np.max(subspace.deviation(states)))


def pencil_invariance(params: SystemParams, subspace: Subspace, state0: BodyState,
                      horizon: float, h: float) -> float:
    return subspace_invariance_test(make_pencil_rhs(params), subspace, state0, horizon, h)


def reduced_conservation(system: ModifiedBracketSystem, x0: np.ndarray, horizon: float, h: float) -> Tuple[float, float]:
    """Maximum relative drift of both quadratics along the reduced flow."""
    _, xs = integrate_field(lambda x: modified_field(system, x), np.asarray(x0, dtype=float), horizon, h)
    mu, f = np.asarray(system.mu), np.asarray(system.f)
    q1 = 0.5 * np.sum(mu * xs * xs, axis=1)
    q2 = 0.5 * np.sum(f * xs * xs, axis=1)
    return (float(np.max(np.abs(q1 - q1[0])) / max(1.0, abs(q1[0]))),
            float(np.max(np.abs(q2 - q2[0])) / max(1.0, abs(q2[0]))))


def _reduced_drift(build: Callable[[], ModifiedBracketSystem], x0: np.ndarray,
                   horizon: float, h: float) -> Optional[float]:
    try:
        system = build()
    except DegeneratePencilError:
        logger.info("Pencil member is not physical; reduced system skipped")
        return None
    return max(reduced_conservation(system, x0, horizon, h))


def family_report(params: SystemParams, kind: str, horizon: float, h: float, axis: int = 1,
                  sigma_prime: Optional[float] = None, k_axis: float = 0.5, angle: float = 0.3,
                  rng: Optional[np.random.Generator] = None) -> Dict:
    """{type, condition_residual, invariance_deviation, reduced_drift} for one family."""
    if kind == 'axis':
        state = axis_family_state(axis, k_axis, angle)
        values = compute_integrals(state, params)
        residual = axis_condition_residual(params, values.c3, values.c4, axis)
        deviation = pencil_invariance(params, AxisSubspace(axis), state, horizon, h)
        drift = _reduced_drift(lambda: axis_system(params, axis),
                               axis_reduced_coordinates(state, axis), horizon, h)
        return {'type': 'axis', 'axis': axis, 'condition_residual': residual,
                'invariance_deviation': deviation, 'reduced_drift': drift}
    if kind == 'delta':
        if sigma_prime is None:
            raise PreconditionError("The delta family needs sigma_prime")
        family = delta_family_from_sigma(params, sigma_prime)
        state = delta_family_state(family, rng)
        values = compute_integrals(state, params)
        deviation = pencil_invariance(params, DeltaSubspace(family), state, horizon, h)
        drift = _reduced_drift(lambda: delta_system(params, family), state.K, horizon, h)
        return {'type': 'delta', 'sigma': family.sigma, 'sigma_prime': family.sigma_prime,
                'C3': values.c3, 'C4': values.c4,
                'condition_residual': values.c3 ** 2 - 4.0 * values.c4,
                'invariance_deviation': deviation, 'reduced_drift': drift}
    raise PreconditionError(f"Unknown family type {kind!r}")
