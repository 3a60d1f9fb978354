"""
Separation coordinates, the genus-2 curve and the linearized flow.

For a unit vector p the coordinates x1 ≤ x2 are the roots of

    Σ p_α² Π_{β≠α}(x − j_β) = C2·x² − E·x + F = 0,

and the momentum decomposes as K = B·e1 + A·e2 with e_i = (p_α / (x_i − j_α))_α.
Reconstruction works from the per-axis offsets t_iα = x_i − j_α, which are
computed from a shifted quadratic so that no subtraction loses digits near a
branch point.
"""
import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from app.conf import get_setting
from app.dynamics.integrator import Trajectory
from app.errors import (
    BranchError,
    BranchTrackingError,
    PreconditionError,
    SeparationDegeneracyError,
)
from app.integrals.quadratics import BodyState, compute_integrals
from app.params.algebra import Number, SpectralData, SystemParams, roots_j45

logger = logging.getLogger(__name__)

# Residuals are reported in τ = 2t, where the right-hand sides read −2λ′ and 2λ.
TIME_SCALE = 2.0

FD_STENCILS = {
    2: (np.array([-1, 1]), np.array([-0.5, 0.5])),
    4: (np.array([-2, -1, 1, 2]), np.array([1.0, -8.0, 8.0, -1.0]) / 12.0),
}


@dataclass(frozen=True)
class SeparationPoint:
    """
    Coordinates (x1, x2) with the sign pattern of p and the offsets x_i − j_α.

    `offsets` has shape (2, 3); row i holds x_i − j_α for α = 1, 2, 3.
    """

    x1: float
    x2: float
    signs: Tuple[int, int, int] = (1, 1, 1)
    offsets: Optional[np.ndarray] = None
    j: Optional[Tuple[float, float, float]] = None

    def __post_init__(self):
        if self.offsets is None and self.j is not None:
            j = np.asarray(self.j, dtype=float)
            object.__setattr__(self, 'offsets', np.array([self.x1 - j, self.x2 - j]))
        object.__setattr__(self, 'signs', tuple(1 if s >= 0 else -1 for s in self.signs))


@dataclass(frozen=True)
class SeparationData:
    point: SeparationPoint
    A: float
    B: float


@dataclass(frozen=True)
class HyperellipticCurve:
    """y² = (j1−x)(j2−x)(j3−x)(j4−x)(j5−x) for one level set (c3, c4)."""

    j: Tuple[float, float, float]
    c3: float
    c4: float
    j4: Number
    j5: Number
    roots_real: bool
    degenerate: bool
    collisions: Tuple[Tuple[int, int], ...] = ()

    @property
    def branch_points(self) -> Tuple[Number, ...]:
        return (*self.j, self.j4, self.j5)

    def sorted_branch_points(self) -> List[float]:
        if not self.roots_real:
            raise BranchError("Branch points j4, j5 form a conjugate pair; no real ordering")
        return sorted(float(v) for v in self.branch_points)

    def phi(self, x):
        j1, j2, j3 = self.j
        return (j1 - x) * (j2 - x) * (j3 - x)

    def psi(self, x):
        return x * x - self.c3 * x + self.c4

    def quintic(self, x):
        """R(x)² = Φ(x)·Ψ(x) = Π (j_k − x) over the five branch points."""
        return self.phi(x) * self.psi(x)

    def P(self, x):
        """Π (x − j_k) = −R(x)², non-negative at real separation coordinates."""
        return -self.phi(x) * self.psi(x)

    def R(self, x, sheet: int = 1):
        """Principal square root of the quintic, times the sheet sign ±1."""
        return sheet * np.sqrt(np.asarray(self.quintic(x), dtype=complex))


# ─── coordinates ───────────────────────────────────────────────────────


def _axis_products(j: np.ndarray) -> np.ndarray:
    return np.array([j[1] * j[2], j[2] * j[0], j[0] * j[1]])


def _denominators(j: np.ndarray) -> np.ndarray:
    """D_α = Π_{β≠α}(j_α − j_β)."""
    return np.array([(j[0] - j[1]) * (j[0] - j[2]),
                     (j[1] - j[2]) * (j[1] - j[0]),
                     (j[2] - j[0]) * (j[2] - j[1])])


def _stable_roots(a, b, c):
    """Both roots of a·t² + b·t + c (real, discriminant clipped at 0), ascending."""
    disc = np.maximum(b * b - 4.0 * a * c, 0.0)
    q = -0.5 * (b + np.where(b >= 0, 1.0, -1.0) * np.sqrt(disc))
    safe_q = np.where(q == 0, 1.0, q)
    r1 = q / a
    r2 = np.where(q == 0, 0.0, c / safe_q)
    return np.minimum(r1, r2), np.maximum(r1, r2)


def _coords_and_offsets(p: np.ndarray, j: np.ndarray):
    """Vectorized over leading axes of p (..., 3)."""
    p2 = p * p
    c2 = p2.sum(axis=-1)
    E = p2 @ (j.sum() - j)
    F = p2 @ _axis_products(j)
    x1, x2 = _stable_roots(c2, -E, F)
    c2_col = np.expand_dims(np.asarray(c2), -1)
    E_col = np.expand_dims(np.asarray(E), -1)
    lo, hi = _stable_roots(c2_col, 2.0 * c2_col * j - E_col, p2 * _denominators(j))
    return x1, x2, lo, hi


def separation_roots(p: np.ndarray, params: SystemParams) -> Tuple[float, float]:
    """Roots of C2·x² − E·x + F without the unit-norm check; scale invariant in p."""
    x1, x2, _, _ = _coords_and_offsets(np.asarray(p, dtype=float), np.asarray(params.j, dtype=float))
    return float(x1), float(x2)


def supplementary_coords(p: np.ndarray, params: SystemParams, tol: Optional[float] = None) -> SeparationPoint:
    """
    Separation coordinates of a unit vector p.

    Examples:
        j=(1,2,3), p=(1,0,0) -> (2, 3)
        j=(1,2,3), p=(1,1,1)/√3 -> (2 − 1/√3, 2 + 1/√3)
    """
    p = np.asarray(p, dtype=float)
    if tol is None:
        tol = get_setting('CLEBSCH_LEAF_TOL')
    norm2 = float(p @ p)
    if abs(norm2 - 1.0) > tol:
        raise PreconditionError(f"p must be a unit vector, |p|^2 = {norm2:.12g}")
    j = np.asarray(params.j, dtype=float)
    x1, x2, lo, hi = _coords_and_offsets(p, j)
    return SeparationPoint(
        x1=float(x1), x2=float(x2),
        signs=tuple(1 if v >= 0 else -1 for v in p),
        offsets=np.array([lo, hi]),
    )


def interlacing_holds(point: SeparationPoint, params: SystemParams, tol: float = 1e-12) -> bool:
    """j1 ≤ x1 ≤ j2 ≤ x2 ≤ j3, up to `tol`."""
    j1, j2, j3 = (float(v) for v in params.j)
    return (j1 - tol <= point.x1 <= j2 + tol) and (j2 - tol <= point.x2 <= j3 + tol)


def p_squared_from_coords(x1: float, x2: float, params: SystemParams) -> np.ndarray:
    """
    p_α² = (j_α − x1)(j_α − x2) / Π_{β≠α}(j_α − j_β).

    Components come out negative when (x1, x2) violate the interlacing; they
    are returned as computed and logged.
    """
    j = np.asarray(params.j, dtype=float)
    values = (j - x1) * (j - x2) / _denominators(j)
    negative = [alpha + 1 for alpha in range(3) if values[alpha] < 0]
    if negative:
        logger.warning("Negative p^2 components %s at x=(%g, %g)", negative, x1, x2)
    return values


def _p_from_point(point: SeparationPoint, params: SystemParams) -> Tuple[np.ndarray, np.ndarray]:
    """(p, offsets) with p_α = sign_α · sqrt(t_1α t_2α / D_α)."""
    j = np.asarray(params.j, dtype=float)
    offsets = point.offsets
    if offsets is None:
        offsets = np.array([point.x1 - j, point.x2 - j])
    p2 = offsets[0] * offsets[1] / _denominators(j)
    tol = 1e-12
    for alpha in range(3):
        if p2[alpha] < -tol:
            raise BranchError(
                f"Radical sqrt(p_{alpha + 1}^2) has negative radicand {p2[alpha]:.3e}",
                radical=f"p{alpha + 1}",
            )
    p = np.asarray(point.signs, dtype=float) * np.sqrt(np.maximum(p2, 0.0))
    return p, offsets


def _frame(p: np.ndarray, offsets: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """e_i = p / (x_i − j); components with p_α = 0 on a branch point are set to 0."""
    with np.errstate(divide='ignore', invalid='ignore'):
        e1 = np.where(offsets[0] != 0, p / np.where(offsets[0] != 0, offsets[0], 1.0), 0.0)
        e2 = np.where(offsets[1] != 0, p / np.where(offsets[1] != 0, offsets[1], 1.0), 0.0)
    return e1, e2


def decompose_state(state: BodyState, params: SystemParams) -> SeparationData:
    """Forward map (K, p) -> (x1, x2, signs, A, B) with K = B·e1 + A·e2."""
    point = supplementary_coords(state.p, params)
    if point.x1 == point.x2:
        raise SeparationDegeneracyError(f"x1 = x2 = {point.x1}")
    e1, e2 = _frame(state.p, point.offsets)
    (A, B), *_ = np.linalg.lstsq(np.column_stack([e2, e1]), state.K, rcond=None)
    return SeparationData(point=point, A=float(A), B=float(B))


def reconstruct_K(point: SeparationPoint, A: float, B: float, params: SystemParams) -> np.ndarray:
    """K = B·e1 + A·e2 on the sheet recorded in `point.signs`."""
    p, offsets = _p_from_point(point, params)
    e1, e2 = _frame(p, offsets)
    return B * e1 + A * e2


def reconstruct_state(data: SeparationData, params: SystemParams) -> BodyState:
    p, _ = _p_from_point(data.point, params)
    return BodyState(K=reconstruct_K(data.point, data.A, data.B, params), p=p)


# ─── A, B ──────────────────────────────────────────────────────────────


def _phi(x: float, params: SystemParams) -> float:
    j1, j2, j3 = (float(v) for v in params.j)
    return (j1 - x) * (j2 - x) * (j3 - x)


def _psi(x: float, spectral: SpectralData) -> float:
    return x * x - float(spectral.c3) * x + float(spectral.c4)


def ab_squared(x1: float, x2: float, spectral: SpectralData, params: SystemParams) -> Tuple[float, float]:
    """
    A² = Φ(x2)Ψ(x1)/(x2−x1)² and B² = Φ(x1)Ψ(x2)/(x2−x1)².

    Both are non-negative on real leaf states.
    """
    if x1 == x2:
        raise SeparationDegeneracyError(f"x1 = x2 = {x1}")
    gap2 = (x2 - x1) ** 2
    return _phi(x2, params) * _psi(x1, spectral) / gap2, _phi(x1, params) * _psi(x2, spectral) / gap2


def ab_squared_linear(x1: float, x2: float, spectral: SpectralData, params: SystemParams) -> Tuple[float, float]:
    """A², B² from the linear equations at α = 1 and α = 2."""
    if x1 == x2:
        raise SeparationDegeneracyError(f"x1 = x2 = {x1}")
    j = [float(v) for v in params.j]
    rows, rhs = [], []
    for alpha, (beta, gamma) in ((0, (1, 2)), (1, (2, 0))):
        ja, jb, jc = j[alpha], j[beta], j[gamma]
        rows.append([-(x1 - x2) / ((x2 - jb) * (x2 - jc)), (x1 - x2) / ((x1 - jb) * (x1 - jc))])
        rhs.append((ja - x1) * (ja - x2) - _psi(ja, spectral))
    a2, b2 = np.linalg.solve(np.array(rows), np.array(rhs))
    return float(a2), float(b2)


# ─── curve ─────────────────────────────────────────────────────────────


def curve_from_c(params: SystemParams, c3: float, c4: float, tol: Optional[float] = None) -> HyperellipticCurve:
    """The curve of the level set (c3, c4); flags branch-point collisions."""
    if tol is None:
        tol = get_setting('CLEBSCH_DEGENERACY_TOL')
    roots = roots_j45(c3, c4)
    points = [complex(v) for v in (*params.j, roots.j4, roots.j5)]
    scale = max(1.0, max(abs(v) for v in points))
    collisions = tuple(
        (a + 1, b + 1)
        for a in range(5) for b in range(a + 1, 5)
        if abs(points[a] - points[b]) <= tol * scale
    )
    if collisions:
        logger.info("Curve for c=(%g, %g) is degenerate: colliding branch points %s", c3, c4, collisions)
    return HyperellipticCurve(
        j=tuple(float(v) for v in params.j),
        c3=float(c3), c4=float(c4),
        j4=roots.j4, j5=roots.j5, roots_real=roots.is_real,
        degenerate=bool(collisions), collisions=collisions,
    )


def curve_for_state(state: BodyState, params: SystemParams) -> HyperellipticCurve:
    values = compute_integrals(state, params)
    return curve_from_c(params, values.c3, values.c4)


def _sheet_signs(x1, x2, A, B, p, params: SystemParams):
    """Signs of y1 = −A(x1−x2)uV/Φ(x2) and y2 = −B(x2−x1)uV/Φ(x1)."""
    j1, j2, j3 = (float(v) for v in params.j)
    V = (j2 - j1) * (j3 - j1) * (j3 - j2)
    u = np.prod(p, axis=-1)
    phi1 = (j1 - x1) * (j2 - x1) * (j3 - x1)
    phi2 = (j1 - x2) * (j2 - x2) * (j3 - x2)
    y1 = -A * (x1 - x2) * u * V / phi2
    y2 = -B * (x2 - x1) * u * V / phi1
    return np.sign(y1), np.sign(y2)


def sheet_values(state: BodyState, params: SystemParams) -> Tuple[float, float]:
    """Signed y_i = ±sqrt(P(x_i)) at a leaf state, sheet read from the state."""
    data = decompose_state(state, params)
    curve = curve_for_state(state, params)
    x1, x2 = data.point.x1, data.point.x2
    s1, s2 = _sheet_signs(x1, x2, data.A, data.B, state.p, params)
    return (float(s1 * math.sqrt(max(curve.P(x1), 0.0))),
            float(s2 * math.sqrt(max(curve.P(x2), 0.0))))


# ─── linearized flow ───────────────────────────────────────────────────


@dataclass
class ResidualReport:
    max_residual_1: float
    max_residual_2: float
    lam: float
    lam_prime: float
    degenerate: bool
    skipped_steps: int = 0
    stencil_order: int = 4
    time_scale: float = TIME_SCALE

    def to_dict(self) -> Dict:
        return {
            'max_residual_1': self.max_residual_1,
            'max_residual_2': self.max_residual_2,
            'lambda': self.lam,
            'lambda_prime': self.lam_prime,
            'degenerate': self.degenerate,
            'skipped_steps': self.skipped_steps,
            'stencil_order': self.stencil_order,
            'time_scale': self.time_scale,
        }

    @classmethod
    def from_dict(cls, data: Dict) -> 'ResidualReport':
        return cls(
            max_residual_1=data['max_residual_1'],
            max_residual_2=data['max_residual_2'],
            lam=data['lambda'],
            lam_prime=data['lambda_prime'],
            degenerate=data['degenerate'],
            skipped_steps=data.get('skipped_steps', 0),
            stencil_order=data.get('stencil_order', 4),
            time_scale=data.get('time_scale', TIME_SCALE),
        )


def separation_series(traj: Trajectory, params: SystemParams) -> np.ndarray:
    """Columns t, x1, x2 along a trajectory."""
    j = np.asarray(params.j, dtype=float)
    x1, x2, _, _ = _coords_and_offsets(traj.p, j)
    return np.column_stack([traj.times, x1, x2])


def _ab_series(traj: Trajectory, j: np.ndarray, lo: np.ndarray, hi: np.ndarray):
    """A, B at every step from the 2×2 normal equations of K = B·e1 + A·e2."""
    p, K = traj.p, traj.K
    with np.errstate(divide='ignore', invalid='ignore'):
        e1 = np.where(lo != 0, p / np.where(lo != 0, lo, 1.0), 0.0)
        e2 = np.where(hi != 0, p / np.where(hi != 0, hi, 1.0), 0.0)
    gram = np.empty((len(p), 2, 2))
    gram[:, 0, 0] = np.sum(e2 * e2, axis=1)
    gram[:, 0, 1] = gram[:, 1, 0] = np.sum(e1 * e2, axis=1)
    gram[:, 1, 1] = np.sum(e1 * e1, axis=1)
    rhs = np.column_stack([np.sum(e2 * K, axis=1), np.sum(e1 * K, axis=1)])
    solution = np.linalg.solve(gram, rhs[..., None])[..., 0]
    return solution[:, 0], solution[:, 1]


def linearization_residual(traj: Trajectory, params: SystemParams, stencil_order: int = 4,
                           guard: Optional[float] = None) -> ResidualReport:
    """
    Residuals of the linearized flow along a trajectory.

    In τ = 2t the separated flow satisfies

        ẋ1/y1 + ẋ2/y2 = −2λ′,    x1ẋ1/y1 + x2ẋ2/y2 = 2λ,

    with y_i = ±sqrt(P(x_i)); the sheet is read from the state. ẋ_i come from
    centered differences (`stencil_order` 4 or 2). Steps where |y_i| falls
    below `guard`·max|y_i| are turning points and are skipped.
    """
    if stencil_order not in FD_STENCILS:
        raise PreconditionError(f"Unsupported stencil order {stencil_order}")
    if guard is None:
        guard = get_setting('CLEBSCH_TURNING_GUARD')
    lam, lam_p = float(params.lam), float(params.lam_prime)
    j = np.asarray(params.j, dtype=float)
    x1, x2, lo, hi = _coords_and_offsets(traj.p, j)
    if np.any(x1 == x2):
        raise SeparationDegeneracyError(f"x1 = x2 at step {int(np.argmax(x1 == x2))}")

    curve = curve_for_state(traj.state(0), params)
    P1 = np.maximum(curve.P(x1), 0.0)
    P2 = np.maximum(curve.P(x2), 0.0)
    mag1, mag2 = np.sqrt(P1), np.sqrt(P2)
    scale1, scale2 = float(mag1.max()), float(mag2.max())
    tiny = 1e-12 * max(1.0, float(np.max(np.abs(j))))
    if scale1 <= tiny or scale2 <= tiny:
        return ResidualReport(0.0, 0.0, lam, lam_p, degenerate=True, stencil_order=stencil_order)

    A, B = _ab_series(traj, j, lo, hi)
    s1, s2 = _sheet_signs(x1, x2, A, B, traj.p, params)
    y1, y2 = s1 * mag1, s2 * mag2

    offsets, weights = FD_STENCILS[stencil_order]
    reach = int(offsets.max())
    n = len(traj)
    dt = np.diff(traj.times)
    keep = np.zeros(n, dtype=bool)
    keep[reach:n - reach] = True
    # stencils must sit on uniformly spaced samples
    for k in range(reach, n - reach):
        window = dt[k - reach:k + reach]
        if np.any(np.abs(window - traj.step) > 1e-9 * traj.step):
            keep[k] = False
    interior = keep.copy()
    keep &= (mag1 >= guard * scale1) & (mag2 >= guard * scale2)
    skipped = int(np.count_nonzero(interior & ~keep))

    for i, s in ((1, s1), (2, s2)):
        flips = np.nonzero(keep[:-1] & keep[1:] & (s[:-1] != s[1:]))[0]
        if flips.size:
            raise BranchTrackingError(
                f"Sheet sign of y{i} flipped away from a turning point", step=int(flips[0] + 1),
            )

    index = np.nonzero(keep)[0]
    if index.size == 0:
        logger.warning("Every interior step sits at a turning point; nothing to check")
        return ResidualReport(0.0, 0.0, lam, lam_p, degenerate=True,
                              skipped_steps=skipped, stencil_order=stencil_order)
    h_tau = TIME_SCALE * traj.step
    dx1 = sum(w * x1[index + o] for o, w in zip(offsets, weights)) / h_tau
    dx2 = sum(w * x2[index + o] for o, w in zip(offsets, weights)) / h_tau
    first = dx1 / y1[index] + dx2 / y2[index]
    second = x1[index] * dx1 / y1[index] + x2[index] * dx2 / y2[index]
    if skipped:
        logger.info("Skipped %d turning-point steps", skipped)
    return ResidualReport(
        max_residual_1=float(np.max(np.abs(first + 2.0 * lam_p))),
        max_residual_2=float(np.max(np.abs(second - 2.0 * lam))),
        lam=lam, lam_prime=lam_p,
        degenerate=curve.degenerate,
        skipped_steps=skipped,
        stencil_order=stencil_order,
    )
