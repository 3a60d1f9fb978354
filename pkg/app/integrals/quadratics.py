"""
First integrals, the Lie-Poisson bracket on se(3)* and Hamiltonian vector fields.

A phase point is a `BodyState` (K, p). Gradients are supplied by "gradient
providers": callables mapping a state to the pair (∇_K F, ∇_p F). The built-in
quadratics have closed-form providers; `fd_gradient` wraps any scalar function.
"""
import logging
from dataclasses import dataclass
from typing import Callable, Dict, Optional, Tuple

import numpy as np

from app.errors import PreconditionError
from app.params.algebra import SystemParams, Triple

logger = logging.getLogger(__name__)

Gradient = Tuple[np.ndarray, np.ndarray]
GradientProvider = Callable[['BodyState'], Gradient]

FD_STEP = 1e-6


@dataclass(frozen=True)
class BodyState:
    """Phase point (K, p) of the body; also used for velocities."""

    K: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        for name in ('K', 'p'):
            value = np.array(getattr(self, name), dtype=float).reshape(3)
            if not np.all(np.isfinite(value)):
                raise PreconditionError(f"Non-finite {name}: {value}")
            value.setflags(write=False)
            object.__setattr__(self, name, value)

    @classmethod
    def from_vector(cls, y: np.ndarray) -> 'BodyState':
        y = np.asarray(y, dtype=float)
        return cls(K=y[:3], p=y[3:6])

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.K, self.p])


@dataclass(frozen=True)
class IntegralValues:
    c1: float
    c2: float
    c3: float
    c4: float
    h: Optional[float] = None
    l: Optional[float] = None

    def as_dict(self) -> Dict[str, float]:
        values = {'C1': self.c1, 'C2': self.c2, 'C3': self.c3, 'C4': self.c4}
        if self.h is not None:
            values['H'] = self.h
        if self.l is not None:
            values['L'] = self.l
        return values


def _axis_products(params: SystemParams) -> np.ndarray:
    j1, j2, j3 = params.j
    return np.array([j2 * j3, j3 * j1, j1 * j2], dtype=float)


def compute_integrals(state: BodyState, params: SystemParams) -> IntegralValues:
    """
    The four quadratics on se(3)*:

        C1 = Σ K_α p_α
        C2 = Σ p_α²
        C3 = Σ K_α² + (j1+j2+j3−j_α) p_α²
        C4 = Σ j_α K_α² + j_β j_γ p_α²
    """
    K, p = state.K, state.p
    j = np.asarray(params.j, dtype=float)
    K2, p2 = K * K, p * p
    return IntegralValues(
        c1=float(K @ p),
        c2=float(p2.sum()),
        c3=float(K2.sum() + ((float(params.J) - j) * p2).sum()),
        c4=float((j * K2).sum() + (_axis_products(params) * p2).sum()),
    )


def compute_HL(state: BodyState, I: Triple, m: Triple) -> Tuple[float, float]:
    """
    Physical energy H and the fourth integral L.

    L = Σ K_α²/(m_α I_α) − Σ p_α²/(m_β m_γ).
    """
    K, p = state.K, state.p
    I, m = np.asarray(I, dtype=float), np.asarray(m, dtype=float)
    if np.any(I == 0) or np.any(m == 0):
        raise PreconditionError(f"Inertias and masses must be nonzero, got I={I}, m={m}")
    H = 0.5 * (np.sum(K * K / I) + np.sum(p * p / m))
    L = np.sum(K * K / (m * I)) - np.sum(p * p / (np.roll(m, -1) * np.roll(m, -2)))
    return float(H), float(L)


def hl_coefficients(params: SystemParams) -> Tuple[Tuple[float, float], Tuple[float, float, float]]:
    """
    Linear map from (C2, C3, C4) to (H, L) for the pencil member of `params`.

    Returns:
        ((λ, λ′), (a, b, c)) with H = λC3 + λ′C4 and L = a·C3 + b·C4 + c·C2.
    """
    lam, lam_p = float(params.lam), float(params.lam_prime)
    J, s2, s3 = float(params.J), float(params.sigma2), float(params.sigma3)
    a = 4.0 * (lam * lam * J + lam * lam_p * s2 + lam_p * lam_p * s3)
    b = -4.0 * lam * lam
    c = -4.0 * (lam * lam * J * J + lam * lam_p * (s2 * J + s3) + lam_p * lam_p * s3 * J)
    return (lam, lam_p), (a, b, c)


def hl_from_integrals(values: IntegralValues, params: SystemParams) -> Tuple[float, float]:
    """(H, L) rebuilt from the Casimir and pencil integrals."""
    (lam, lam_p), (a, b, c) = hl_coefficients(params)
    return lam * values.c3 + lam_p * values.c4, a * values.c3 + b * values.c4 + c * values.c2


# ─── gradient providers ────────────────────────────────────────────────


def grad_c1(state: BodyState) -> Gradient:
    return state.p.copy(), state.K.copy()


def grad_c2(state: BodyState) -> Gradient:
    return np.zeros(3), 2.0 * state.p


def grad_c3(params: SystemParams) -> GradientProvider:
    weights = float(params.J) - np.asarray(params.j, dtype=float)

    def provider(state: BodyState) -> Gradient:
        return 2.0 * state.K, 2.0 * weights * state.p
    return provider


def grad_c4(params: SystemParams) -> GradientProvider:
    j = np.asarray(params.j, dtype=float)
    products = _axis_products(params)

    def provider(state: BodyState) -> Gradient:
        return 2.0 * j * state.K, 2.0 * products * state.p
    return provider


def grad_h(I: Triple, m: Triple) -> GradientProvider:
    inv_I = 1.0 / np.asarray(I, dtype=float)
    inv_m = 1.0 / np.asarray(m, dtype=float)

    def provider(state: BodyState) -> Gradient:
        return inv_I * state.K, inv_m * state.p
    return provider


def grad_l(I: Triple, m: Triple) -> GradientProvider:
    I, m = np.asarray(I, dtype=float), np.asarray(m, dtype=float)
    k_weights = 2.0 / (m * I)
    p_weights = -2.0 / (np.roll(m, -1) * np.roll(m, -2))

    def provider(state: BodyState) -> Gradient:
        return k_weights * state.K, p_weights * state.p
    return provider


def grad_pencil(params: SystemParams) -> GradientProvider:
    """Gradient of λC3 + λ′C4, i.e. (2n∘K, 2n′∘p)."""
    n = 2.0 * np.asarray(params.n, dtype=float)
    n_prime = 2.0 * np.asarray(params.n_prime, dtype=float)

    def provider(state: BodyState) -> Gradient:
        return n * state.K, n_prime * state.p
    return provider


def integral_gradients(params: SystemParams, I: Optional[Triple] = None,
                       m: Optional[Triple] = None) -> Dict[str, GradientProvider]:
    """Closed-form providers keyed C1..C4, plus H and L when (I, m) are given."""
    providers = {
        'C1': grad_c1,
        'C2': grad_c2,
        'C3': grad_c3(params),
        'C4': grad_c4(params),
    }
    if I is not None and m is not None:
        providers['H'] = grad_h(I, m)
        providers['L'] = grad_l(I, m)
    return providers


def fd_gradient(func: Callable[[BodyState], float], step: float = FD_STEP) -> GradientProvider:
    """Central-difference gradient provider for an arbitrary scalar function."""

    def provider(state: BodyState) -> Gradient:
        y = state.as_vector()
        grad = np.empty(6)
        for i in range(6):
            e = np.zeros(6)
            e[i] = step
            grad[i] = (func(BodyState.from_vector(y + e)) - func(BodyState.from_vector(y - e))) / (2.0 * step)
        return grad[:3], grad[3:]
    return provider


# ─── bracket and fields ────────────────────────────────────────────────


def lie_poisson_bracket(grad_f: GradientProvider, grad_g: GradientProvider, state: BodyState) -> float:
    """{F,G} = ⟨K, ∇_K F × ∇_K G⟩ + ⟨p, ∇_K F × ∇_p G − ∇_K G × ∇_p F⟩."""
    fk, fp = grad_f(state)
    gk, gp = grad_g(state)
    return float(state.K @ np.cross(fk, gk) + state.p @ (np.cross(fk, gp) - np.cross(gk, fp)))


def hamiltonian_field(grad_f: GradientProvider, state: BodyState) -> BodyState:
    """Ξ_F = (K × ∇_K F + p × ∇_p F, p × ∇_K F)."""
    fk, fp = grad_f(state)
    return BodyState(K=np.cross(state.K, fk) + np.cross(state.p, fp), p=np.cross(state.p, fk))


def pencil_field(state: BodyState, params: SystemParams) -> BodyState:
    """Hamiltonian vector field of λC3 + λ′C4."""
    return hamiltonian_field(grad_pencil(params), state)


def kirchhoff_rhs(state: BodyState, I: Triple, m: Triple) -> BodyState:
    """Kirchhoff equations written out component by component."""
    I1, I2, I3 = (float(v) for v in I)
    m1, m2, m3 = (float(v) for v in m)
    if 0.0 in (I1, I2, I3, m1, m2, m3):
        raise PreconditionError(f"Inertias and masses must be nonzero, got I={I}, m={m}")
    K1, K2, K3 = state.K
    p1, p2, p3 = state.p
    K_dot = (
        (1 / I3 - 1 / I2) * K2 * K3 + (1 / m3 - 1 / m2) * p2 * p3,
        (1 / I1 - 1 / I3) * K3 * K1 + (1 / m1 - 1 / m3) * p3 * p1,
        (1 / I2 - 1 / I1) * K1 * K2 + (1 / m2 - 1 / m1) * p1 * p2,
    )
    p_dot = (
        p2 * K3 / I3 - p3 * K2 / I2,
        p3 * K1 / I1 - p1 * K3 / I3,
        p1 * K2 / I2 - p2 * K1 / I1,
    )
    return BodyState(K=K_dot, p=p_dot)


def make_pencil_rhs(params: SystemParams, sign: float = 1.0) -> Callable[[np.ndarray], np.ndarray]:
    """Pencil field on flat 6-vectors, as used by the integrators."""
    n = 2.0 * sign * np.asarray(params.n, dtype=float)
    n_prime = 2.0 * sign * np.asarray(params.n_prime, dtype=float)

    def rhs(y: np.ndarray) -> np.ndarray:
        K, p = y[:3], y[3:6]
        wk = n * K
        return np.concatenate([np.cross(K, wk) + np.cross(p, n_prime * p), np.cross(p, wk)])
    return rhs


# ─── Weber's leaf C1 = 0, C2 = 1 ────────────────────────────────────────


def on_weber_leaf(state: BodyState, tol: float = 1e-10) -> bool:
    return abs(float(state.K @ state.p)) <= tol and abs(float(state.p @ state.p) - 1.0) <= tol


def project_to_leaf(state: BodyState) -> BodyState:
    """Normalize p and remove the p-component of K."""
    norm = np.linalg.norm(state.p)
    if norm == 0:
        raise PreconditionError("Cannot project a state with p = 0 onto the leaf")
    p = state.p / norm
    return BodyState(K=state.K - (state.K @ p) * p, p=p)


def sample_leaf_state(rng: np.random.Generator, radius: float = 1.0) -> BodyState:
    """p uniform on the unit sphere, K uniform in a ball, then projected."""
    p = rng.standard_normal(3)
    p /= np.linalg.norm(p)
    direction = rng.standard_normal(3)
    direction /= np.linalg.norm(direction)
    K = radius * rng.uniform() ** (1.0 / 3.0) * direction
    return project_to_leaf(BodyState(K=K, p=p))
