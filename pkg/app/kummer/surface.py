"""
The Kummer quartic attached to a level set (c3, c4).

In homogeneous coordinates (X1 : X2 : X3 : X4) with the linear forms

    U1 = l·X4 + d2·X2 − d3·X3
    U2 = m·X4 + d3·X3 − d1·X1
    U3 = n·X4 + d1·X1 − d2·X2

the surface is F = a1² + a2² + a3² − 2a1a2 − 2a2a3 − 2a3a1 = 0 with a_α = X_α·U_α.
The map (K, p) -> (K1² : K2² : K3² : 1) is an eight-fold cover of it, and on
that image U_α = p_α².

Evaluation is written with plain operators, so surfaces built from
`Fraction` (or sympy) constants are evaluated exactly.
"""
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import numpy as np
import sympy
from scipy.optimize import minimize

from app.errors import ConsistencyError, PreconditionError
from app.integrals.quadratics import BodyState, compute_integrals
from app.params.algebra import SpectralData, SystemParams, spectral_data

logger = logging.getLogger(__name__)

CASE_COORDINATE = 'coordinate'
CASE_INFINITY = 'infinity'
CASE_AFFINE_THREE = 'affine-three'
CASE_QUADRATIC_PAIR = 'quadratic-pair'

CONSISTENCY_TOL = 1e-6


@dataclass(frozen=True)
class KummerSurface:
    l: object
    m: object
    n: object
    d1: object
    d2: object
    d3: object
    params: Optional[SystemParams] = None
    c3: Optional[float] = None
    c4: Optional[float] = None

    @classmethod
    def from_spectral(cls, spectral: SpectralData, params: Optional[SystemParams] = None) -> 'KummerSurface':
        d1, d2, d3 = spectral.d
        return cls(spectral.l, spectral.m, spectral.n, d1, d2, d3,
                   params=params, c3=spectral.c3, c4=spectral.c4)

    @classmethod
    def from_levels(cls, params: SystemParams, c3, c4) -> 'KummerSurface':
        return cls.from_spectral(spectral_data(params, c3, c4), params)

    @property
    def is_rational(self) -> bool:
        return all(isinstance(v, (int, Fraction)) for v in self.constants)

    @property
    def constants(self) -> Tuple:
        return (self.l, self.m, self.n, self.d1, self.d2, self.d3)

    def u_forms(self, X: Sequence) -> Tuple:
        X1, X2, X3, X4 = X
        return (
            self.l * X4 + self.d2 * X2 - self.d3 * X3,
            self.m * X4 + self.d3 * X3 - self.d1 * X1,
            self.n * X4 + self.d1 * X1 - self.d2 * X2,
        )

    def u_jacobian(self) -> Tuple[Tuple, Tuple, Tuple]:
        """∂U_α/∂X_k, rows α = 1..3."""
        return (
            (0, self.d2, -self.d3, self.l),
            (-self.d1, 0, self.d3, self.m),
            (self.d1, -self.d2, 0, self.n),
        )


@dataclass(frozen=True)
class ProjectivePoint:
    """Real point of P³, normalized so the last nonzero coordinate is 1."""

    coords: Tuple[float, float, float, float]

    def __post_init__(self):
        coords = tuple(float(c) for c in self.coords)
        if len(coords) != 4:
            raise PreconditionError(f"Projective points need four coordinates, got {len(coords)}")
        nonzero = [c for c in coords if c != 0.0]
        if not nonzero:
            raise PreconditionError("All homogeneous coordinates vanish")
        last = nonzero[-1]
        object.__setattr__(self, 'coords', tuple(c / last + 0.0 for c in coords))

    def __iter__(self):
        return iter(self.coords)

    def close_to(self, other: 'ProjectivePoint', tol: float = 1e-9) -> bool:
        return all(abs(a - b) <= tol * max(1.0, abs(a), abs(b)) for a, b in zip(self, other))


@dataclass(frozen=True)
class DoublePoint:
    point: ProjectivePoint
    case: str
    certified: bool
    exact: Optional[Tuple] = None

    def to_dict(self) -> dict:
        return {'coords': list(self.point.coords), 'case': self.case, 'certified': self.certified}


# ─── evaluation ────────────────────────────────────────────────────────


def quartic_eval(surface: KummerSurface, X: Sequence):
    """Value of the quartic at the representative X (not rescaled)."""
    U = surface.u_forms(tuple(X))
    a1, a2, a3 = (x * u for x, u in zip(tuple(X)[:3], U))
    return a1 * a1 + a2 * a2 + a3 * a3 - 2 * a1 * a2 - 2 * a2 * a3 - 2 * a3 * a1


def quartic_gradient(surface: KummerSurface, X: Sequence) -> Tuple:
    """
    The four partial derivatives of the quartic.

    With g_α = ∂F/∂a_α = 2(a_α − a_β − a_γ),
    ∂F/∂X_k = Σ_α g_α (δ_αk·U_α + X_α·∂U_α/∂X_k).
    """
    X = tuple(X)
    U = surface.u_forms(X)
    a = [x * u for x, u in zip(X[:3], U)]
    g = [2 * (a[0] - a[1] - a[2]), 2 * (a[1] - a[2] - a[0]), 2 * (a[2] - a[0] - a[1])]
    jac = surface.u_jacobian()
    grad = []
    for k in range(4):
        total = 0
        for alpha in range(3):
            term = X[alpha] * jac[alpha][k]
            if alpha == k:
                term = term + U[alpha]
            total = total + g[alpha] * term
        grad.append(total)
    return tuple(grad)


def _scale(surface: KummerSurface, X: Sequence) -> float:
    return max(1.0, *(abs(float(v)) for v in surface.constants)) * max(abs(float(x)) for x in X)


# ─── cover map ─────────────────────────────────────────────────────────


def cover_p_squared(surface: KummerSurface, K: Sequence) -> Tuple:
    """p_α² recovered from K as U_α(K1², K2², K3², 1)."""
    K = [float(v) for v in K]
    return surface.u_forms((K[0] ** 2, K[1] ** 2, K[2] ** 2, 1.0))


def casimir_vanishing_residual(surface: KummerSurface, K: Sequence, signs: Sequence[int]) -> float:
    """Σ s_α sqrt(p_α²(K)) K_α, which vanishes on C1 = 0."""
    p2 = cover_p_squared(surface, K)
    return float(sum(s * math.sqrt(max(v, 0.0)) * k for s, v, k in zip(signs, p2, K)))


def state_to_kummer(state: BodyState, surface: KummerSurface, tol: float = CONSISTENCY_TOL) -> ProjectivePoint:
    """(K1² : K2² : K3² : 1) after checking the state lies on the surface's levels."""
    if surface.params is not None and surface.c3 is not None:
        values = compute_integrals(state, surface.params)
        expected = (('C1', values.c1, 0.0), ('C2', values.c2, 1.0),
                    ('C3', values.c3, float(surface.c3)), ('C4', values.c4, float(surface.c4)))
        for name, actual, target in expected:
            if abs(actual - target) > tol * max(1.0, abs(target)):
                raise ConsistencyError(
                    f"{name} = {actual:.12g} does not match the surface level {target:.12g}",
                    integral=name,
                )
    else:
        p2 = cover_p_squared(surface, state.K)
        for alpha in range(3):
            if abs(p2[alpha] - state.p[alpha] ** 2) > tol:
                raise ConsistencyError(
                    f"U_{alpha + 1}(K^2) = {p2[alpha]:.12g} differs from p_{alpha + 1}^2",
                    integral=f"U{alpha + 1}",
                )
    K = state.K
    return ProjectivePoint((K[0] ** 2, K[1] ** 2, K[2] ** 2, 1.0))


def quartic_series(states: np.ndarray, surface: KummerSurface) -> np.ndarray:
    """Quartic at the cover image of each row (K1, K2, K3, ...) of `states`."""
    K2 = states[:, :3] ** 2
    X = (K2[:, 0], K2[:, 1], K2[:, 2], np.ones(len(states)))
    return np.asarray(quartic_eval(surface, X), dtype=float)


# ─── double points ─────────────────────────────────────────────────────


def _exact_constants(surface: KummerSurface) -> Tuple:
    return tuple(sympy.Rational(v.numerator, v.denominator) if isinstance(v, Fraction) else sympy.Integer(v)
                 for v in surface.constants)


def quadratic_pair_discriminants(surface: KummerSurface) -> List[dict]:
    """
    Discriminants of the three quadratics on the planes X_γ = U_γ = 0.

    Real roots iff the discriminant is non-negative.
    """
    l, m, n, d1, d2, d3 = surface.constants
    report = []
    for plane, (A, b, C) in zip(('X3=U3=0', 'X1=U1=0', 'X2=U2=0'), _pair_quadratics(l, m, n, d1, d2, d3)):
        disc = b * b - 4 * A * C
        report.append({'plane': plane, 'discriminant': float(disc), 'real_roots': bool(disc >= 0)})
    return report


def _pair_quadratics(l, m, n, d1, d2, d3):
    """(A, b, C) of A·s² − b·s·t + C·t² for the three planes, in cyclic order."""
    return (
        (l * d1, (m + n) * d1 + (n + l) * d2, m * d2),
        (m * d2, (n + l) * d2 + (l + m) * d3, n * d3),
        (n * d3, (l + m) * d3 + (m + n) * d1, l * d1),
    )


def _homogeneous_roots(A, b, C, sqrt):
    """Real roots [s : t] of A·s² − b·s·t + C·t² = 0; complex pairs give []."""
    disc = b * b - 4 * A * C
    if disc < 0:
        return []
    if A == 0:
        if b == 0:
            return []
        return [(1, 0), (C, b)]
    root = sqrt(disc)
    if disc == 0:
        return [(b, 2 * A)]
    return [(b - root, 2 * A), (b + root, 2 * A)]


def _candidates(l, m, n, d1, d2, d3, sqrt):
    """All listed double points as (case, representative) before filtering."""
    points = [
        (CASE_COORDINATE, (1, 0, 0, 0)),
        (CASE_COORDINATE, (0, 1, 0, 0)),
        (CASE_COORDINATE, (0, 0, 1, 0)),
        (CASE_COORDINATE, (0, 0, 0, 1)),
        (CASE_INFINITY, (d2 * d3, d3 * d1, d1 * d2, 0)),
        (CASE_AFFINE_THREE, (m * d2, -l * d1, 0, d1 * d2)),
        (CASE_AFFINE_THREE, (0, n * d3, -m * d2, d2 * d3)),
        (CASE_AFFINE_THREE, (-n * d3, 0, l * d1, d1 * d3)),
    ]
    quad_a, quad_b, quad_c = _pair_quadratics(l, m, n, d1, d2, d3)
    # X3 = U3 = 0: [X1 : X2] = [s : t], n·X4 = d2·X2 − d1·X1
    for s, t in _homogeneous_roots(*quad_a, sqrt):
        points.append((CASE_QUADRATIC_PAIR, (n * s, n * t, 0, d2 * t - d1 * s)))
    # X1 = U1 = 0: [X2 : X3] = [s : t], l·X4 = d3·X3 − d2·X2
    for s, t in _homogeneous_roots(*quad_b, sqrt):
        points.append((CASE_QUADRATIC_PAIR, (0, l * s, l * t, d3 * t - d2 * s)))
    # X2 = U2 = 0: [X3 : X1] = [s : t], m·X4 = d1·X1 − d3·X3
    for s, t in _homogeneous_roots(*quad_c, sqrt):
        points.append((CASE_QUADRATIC_PAIR, (m * t, 0, m * s, d1 * t - d3 * s)))
    return points


def certify_exact(surface: KummerSurface, X: Sequence) -> bool:
    """F = 0 and ∇F = 0 in exact arithmetic; X may contain sympy radicals."""
    exact = KummerSurface(*_exact_constants(surface))
    values = (quartic_eval(exact, X), *quartic_gradient(exact, X))
    return all(sympy.expand(sympy.sympify(v)) == 0 for v in values)


def _numeric_check(surface: KummerSurface, X: Sequence, tol: float = 1e-12) -> bool:
    scale = _scale(surface, X)
    if abs(float(quartic_eval(surface, X))) > tol * scale ** 4:
        return False
    return all(abs(float(g)) <= tol * scale ** 3 for g in quartic_gradient(surface, X))


def double_points(surface: KummerSurface, certify: Optional[bool] = None) -> List[DoublePoint]:
    """
    The explicit double points: four coordinate points, one point at infinity,
    three affine points and the real roots of the three plane quadratics.

    With rational constants every point is certified exactly with sympy;
    otherwise points are checked numerically and `certified` is False.
    Complex roots and representatives that collapse to zero are left out and
    logged.
    """
    exact = surface.is_rational and certify is not False
    if exact:
        constants = _exact_constants(surface)
        candidates = _candidates(*constants, sqrt=sympy.sqrt)
    else:
        constants = tuple(float(v) for v in surface.constants)
        candidates = _candidates(*constants, sqrt=math.sqrt)

    n_real_pairs = len([c for c in candidates if c[0] == CASE_QUADRATIC_PAIR])
    if n_real_pairs < 6:
        logger.info("%d plane-quadratic roots are complex or missing", 6 - n_real_pairs)

    result = []
    collapsed = 0
    for case, X in candidates:
        floats = tuple(float(sympy.N(v, 30)) if exact else float(v) for v in X)
        if all(v == 0.0 for v in floats):
            collapsed += 1
            continue
        point = ProjectivePoint(floats)
        if exact:
            ok = certify_exact(surface, X)
            if not ok:
                logger.warning("Exact certification failed at %s (%s)", point.coords, case)
        else:
            ok = False
            if not _numeric_check(surface, floats):
                logger.warning("Numeric double-point check failed at %s (%s)", point.coords, case)
        result.append(DoublePoint(point=point, case=case, certified=bool(ok), exact=tuple(X) if exact else None))
    if collapsed:
        logger.info("%d double-point representatives collapsed to zero", collapsed)
    return result


# ─── experimental: singular points on X4 = 0 ───────────────────────────


def search_points_at_infinity(surface: KummerSurface, seed: int = 0, starts: int = 32,
                              tol: float = 1e-10) -> List[ProjectivePoint]:
    """
    Experimental numeric search for further singular points on X4 = 0.

    Minimizes |∇F|² over unit vectors (X1, X2, X3) from seeded random starts and
    keeps minima that are not already in the explicit list. Nothing returned
    here is certified.
    """
    rng = np.random.default_rng(seed)
    known = [dp.point for dp in double_points(surface, certify=False) if dp.point.coords[3] == 0.0]
    found: List[ProjectivePoint] = []

    def objective(v: np.ndarray) -> float:
        v = v / np.linalg.norm(v)
        grad = quartic_gradient(surface, (v[0], v[1], v[2], 0.0))
        return float(sum(g * g for g in grad))

    for _ in range(starts):
        start = rng.standard_normal(3)
        result = minimize(objective, start, method='BFGS', options={'gtol': 1e-14})
        v = result.x / np.linalg.norm(result.x)
        if objective(v) > tol ** 2 or abs(float(quartic_eval(surface, (*v, 0.0)))) > tol:
            continue
        candidate = ProjectivePoint((*v, 0.0))
        if any(candidate.close_to(p, 1e-6) for p in known + found):
            continue
        found.append(candidate)
    logger.info("Experimental search on X4=0 found %d new candidate(s)", len(found))
    return found


def surface_for_state(state: BodyState, params: SystemParams) -> KummerSurface:
    values = compute_integrals(state, params)
    return KummerSurface.from_levels(params, values.c3, values.c4)
