"""
Hyperelliptic quadrature: period matrix and action variables.

Integrals run over real segments between branch points. Every integrand has
the form w(x)·sqrt(Π(x − r_num) / Π(x − r_den)); roots shared by numerator and
denominator are cancelled first so that degenerate curves with an integrable
reduced integrand still work. The endpoint singularities are removed with
x = a + (b − a)·sin²θ before adaptive quadrature.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import quad

from app.conf import get_setting
from app.errors import (
    BranchPointError,
    DegenerateCurveError,
    PreconditionError,
    ToleranceFailure,
)
from app.linearize.separation import HyperellipticCurve, curve_from_c
from app.params.algebra import SystemParams

logger = logging.getLogger(__name__)

DEFAULT_W = np.diag([-2.0, 2.0])
FD_QUAD_TOL = 1e-12

CONVENTION_LITERAL = 'literal'
CONVENTION_SORTED = 'sorted'


def singular_quadrature(f: Callable, a: float, b: float, tol: Optional[float] = None,
                        limit: Optional[int] = None, offsets: bool = False,
                        breakpoints: Sequence[float] = ()) -> float:
    """
    ∫_a^b f(x) dx for integrands with at worst inverse-square-root endpoint
    singularities, via x = a + (b − a)·sin²θ.

    With `offsets` the integrand is called as f(x, x − a, b − x), the two
    offsets computed without cancellation. `breakpoints` are interior x values
    where f has kinks.

    Examples:
        ∫₁² (x−1)^(−1/2) dx -> 2
        ∫₀¹ dx/√(x(1−x)) -> π
    """
    if tol is None:
        tol = get_setting('CLEBSCH_QUAD_TOL')
    if limit is None:
        limit = get_setting('CLEBSCH_QUAD_LIMIT')
    width = b - a
    if width == 0:
        return 0.0

    def g(theta: float) -> float:
        s, c = math.sin(theta), math.cos(theta)
        left, right = width * s * s, width * c * c
        x = a + left
        value = f(x, left, right) if offsets else f(x)
        return value * 2.0 * width * s * c

    points = None
    if breakpoints:
        points = [math.asin(math.sqrt(min(max((r - a) / width, 0.0), 1.0))) for r in breakpoints]
    result = quad(g, 0.0, 0.5 * math.pi, epsabs=tol, epsrel=0.0, limit=limit,
                  points=points, full_output=1)
    value, abserr = result[0], result[1]
    if len(result) > 3 and abserr > tol:
        raise ToleranceFailure(
            f"Quadrature on [{a:.12g}, {b:.12g}] did not converge: {result[3].splitlines()[0]}",
            best_estimate=float(value), abserr=float(abserr),
        )
    return float(value)


@dataclass(frozen=True)
class Cycle:
    """Oriented segment from `start` to `end` between two real branch points."""

    start: float
    end: float

    def reversed(self) -> 'Cycle':
        return Cycle(self.end, self.start)

    def to_list(self) -> List[float]:
        return [self.start, self.end]


@dataclass
class PeriodMatrix:
    values: np.ndarray
    cycles: Tuple[Cycle, Cycle]
    W: np.ndarray = field(default_factory=lambda: DEFAULT_W.copy())

    def det(self) -> complex:
        return complex(np.linalg.det(self.values))

    @property
    def is_real(self) -> bool:
        return bool(np.all(self.values.imag == 0))

    def to_json(self) -> List[List]:
        """Real entries as numbers, imaginary ones as [re, im]."""
        return [[_json_number(v) for v in row] for row in self.values]


@dataclass
class ActionPair:
    a1: float
    a2: float
    cycles: Tuple[Cycle, Cycle]
    convention: str


@dataclass
class DerivativeCheck:
    max_error: float
    finite_difference: np.ndarray
    expected: np.ndarray
    period_matrix: PeriodMatrix
    signs: Tuple[int, int]


def _json_number(value: complex):
    value = complex(value)
    return value.real if value.imag == 0 else [value.real, value.imag]


# ─── reduced radical integrands ────────────────────────────────────────


@dataclass(frozen=True)
class RadicalIntegrand:
    """
    w(x)·sqrt(Π(x − r) over `numerator` / Π(x − r) over `denominator`).

    `radical_in_denominator` selects the branch on segments where the ratio is
    negative: 1/√P gives −i, √(N/D) gives +i.
    """

    numerator: Tuple[float, ...]
    denominator: Tuple[float, ...]
    power: int = 0
    radical_in_denominator: bool = False

    def reduced(self, tol: float) -> 'RadicalIntegrand':
        num = list(self.numerator)
        den = []
        for r in self.denominator:
            match = next((i for i, s in enumerate(num) if abs(s - r) <= tol * max(1.0, abs(r))), None)
            if match is None:
                den.append(r)
            else:
                num.pop(match)
        return RadicalIntegrand(tuple(num), tuple(den), self.power, self.radical_in_denominator)

    def sign_at(self, x: float) -> float:
        value = np.prod([x - r for r in self.numerator]) / np.prod([x - r for r in self.denominator])
        return math.copysign(1.0, value)


def _multiplicities(roots: Sequence[float], tol: float) -> List[Tuple[float, int]]:
    grouped: List[List] = []
    for r in sorted(roots):
        if grouped and abs(r - grouped[-1][0]) <= tol * max(1.0, abs(r)):
            grouped[-1][1] += 1
        else:
            grouped.append([r, 1])
    return [(r, k) for r, k in grouped]


def _integrate_radical(integrand: RadicalIntegrand, cycle: Cycle, curve: HyperellipticCurve,
                       tol: float, allow_imaginary: bool, what: str) -> complex:
    """Checks the reduced integrand on the segment, then integrates it."""
    degeneracy_tol = get_setting('CLEBSCH_DEGENERACY_TOL')
    reduced = integrand.reduced(degeneracy_tol)
    a, b = cycle.start, cycle.end
    lo, hi = min(a, b), max(a, b)
    refuse = DegenerateCurveError if curve.degenerate else BranchPointError

    net: Dict[float, int] = {}
    for r, k in _multiplicities(reduced.numerator, degeneracy_tol):
        net[r] = net.get(r, 0) + k
    for r, k in _multiplicities(reduced.denominator, degeneracy_tol):
        key = next((s for s in net if abs(s - r) <= degeneracy_tol * max(1.0, abs(r))), r)
        net[key] = net.get(key, 0) - k

    kinks = []
    for r, k in net.items():
        at_end = min(abs(r - lo), abs(r - hi)) <= degeneracy_tol * max(1.0, abs(r))
        if at_end:
            if k <= -2:
                raise refuse(f"{what}: non-integrable singularity at endpoint {r:.12g}",
                             branch_point=r, collisions=list(curve.collisions))
        elif lo < r < hi:
            if k % 2:
                raise refuse(f"{what}: integrand changes sign at interior branch point {r:.12g}",
                             branch_point=r, collisions=list(curve.collisions))
            if k < 0:
                raise refuse(f"{what}: non-integrable interior singularity at {r:.12g}",
                             branch_point=r, collisions=list(curve.collisions))
            kinks.append(r)

    sign = reduced.sign_at(0.5 * (lo + hi))
    if sign < 0 and not allow_imaginary:
        raise refuse(f"{what}: integrand is not real on [{lo:.12g}, {hi:.12g}]",
                     collisions=list(curve.collisions))
    phase = 1.0 if sign > 0 else (-1j if reduced.radical_in_denominator else 1j)

    def near(r, end):
        return abs(r - end) <= degeneracy_tol * max(1.0, abs(r))

    def f(x, left, right):
        top = 1.0
        for r in reduced.numerator:
            top *= abs(left) if near(r, a) else abs(right) if near(r, b) else abs(x - r)
        bottom = 1.0
        for r in reduced.denominator:
            bottom *= abs(left) if near(r, a) else abs(right) if near(r, b) else abs(x - r)
        return x ** reduced.power * math.sqrt(top / bottom)

    value = singular_quadrature(f, a, b, tol=tol, offsets=True, breakpoints=kinks)
    return value * phase


# ─── cycles ────────────────────────────────────────────────────────────


def sorted_cycles(curve: HyperellipticCurve) -> Tuple[Cycle, Cycle]:
    """γ1 over the 1st–2nd and γ2 over the 3rd–4th sorted branch points."""
    e = curve.sorted_branch_points()
    return Cycle(e[0], e[1]), Cycle(e[2], e[3])


def literal_cycles(curve: HyperellipticCurve) -> Tuple[Cycle, Cycle]:
    """γ1 from j1 to j2, γ2 from j3 to j4 (possibly reversed)."""
    if not curve.roots_real:
        raise BranchPointError("j4 is not real; the j3 -> j4 segment does not exist")
    j1, j2, j3 = curve.j
    return Cycle(j1, j2), Cycle(j3, float(curve.j4))


def _cycle_sign(curve: HyperellipticCurve, cycle: Cycle) -> int:
    """Sign of Ψ(x) = x² − c3·x + c4 inside the segment."""
    return 1 if curve.psi(0.5 * (cycle.start + cycle.end)) >= 0 else -1


# ─── period matrix and actions ─────────────────────────────────────────


def period_matrix(curve: HyperellipticCurve, cycles: Optional[Sequence[Cycle]] = None,
                  W: Optional[np.ndarray] = None, tol: Optional[float] = None) -> PeriodMatrix:
    """
    Ψ_ij = ∫_{γ_j} Σ_k x^{k−1} (W⁻¹)_{ki} / √P(x) dx with P(x) = Π(x − e_k).

    Entries over segments where P < 0 are purely imaginary.
    """
    if curve.degenerate:
        raise DegenerateCurveError(
            f"Curve is degenerate, colliding branch points {list(curve.collisions)}",
            collisions=list(curve.collisions),
        )
    if not curve.roots_real:
        raise BranchPointError("Period matrix over real segments needs real branch points")
    if cycles is None:
        cycles = sorted_cycles(curve)
    W = DEFAULT_W.copy() if W is None else np.asarray(W, dtype=float)
    roots = tuple(float(np.real(v)) for v in curve.branch_points)
    moments = np.empty((2, 2), dtype=complex)
    for k in range(2):
        integrand = RadicalIntegrand(numerator=(), denominator=roots, power=k, radical_in_denominator=True)
        for col, cycle in enumerate(cycles):
            moments[k, col] = _integrate_radical(integrand, cycle, curve, tol or get_setting('CLEBSCH_QUAD_TOL'),
                                                 allow_imaginary=True, what=f"period x^{k}")
    values = np.linalg.inv(W).T @ moments
    return PeriodMatrix(values=values, cycles=tuple(cycles), W=W)


def actions(curve: HyperellipticCurve, c3: Optional[float] = None, c4: Optional[float] = None,
            convention: str = CONVENTION_LITERAL, cycles: Optional[Sequence[Cycle]] = None,
            tol: Optional[float] = None) -> ActionPair:
    """
    a_j = −2 ∫_{γ_j} sqrt((x² − c3·x + c4) / ((x − j1)(x − j2)(x − j3))) dx.

    The literal convention integrates from j1 to j2 and from j3 to j4; the
    sorted convention uses the sorted branch points.

    Examples:
        j=(1,2,3), c=(5,6) -> a1 = −4, a2 = 4(√2 − 1)
    """
    for given, own in ((c3, curve.c3), (c4, curve.c4)):
        if given is not None and abs(float(given) - own) > 1e-12 * max(1.0, abs(own)):
            raise PreconditionError(f"Levels ({c3}, {c4}) do not match the curve ({curve.c3}, {curve.c4})")
    if cycles is None:
        if convention == CONVENTION_SORTED:
            cycles = sorted_cycles(curve)
        elif convention == CONVENTION_LITERAL:
            cycles = literal_cycles(curve)
        else:
            raise PreconditionError(f"Unknown cycle convention {convention!r}")
    integrand = RadicalIntegrand(
        numerator=(float(np.real(curve.j4)), float(np.real(curve.j5))),
        denominator=tuple(curve.j),
    )
    tol = tol or get_setting('CLEBSCH_QUAD_TOL')
    values = [
        -2.0 * _integrate_radical(integrand, cycle, curve, tol, allow_imaginary=False, what=f"action a{i + 1}")
        for i, cycle in enumerate(cycles)
    ]
    return ActionPair(a1=float(np.real(values[0])), a2=float(np.real(values[1])),
                      cycles=tuple(cycles), convention=convention)


def _branch_order(curve: HyperellipticCurve) -> Tuple[int, ...]:
    return tuple(int(i) for i in np.argsort([float(np.real(v)) for v in curve.branch_points], kind='stable'))


def verify_action_derivatives(params: SystemParams, c3: float, c4: float, fd_step: float = 1e-5,
                              tol: float = FD_QUAD_TOL) -> DerivativeCheck:
    """
    Compare central differences of the actions against the period matrix.

    With f = (C4, C3), sorted cycles and s_j the sign of Ψ on γ_j,
    ∂a_j/∂f_i = 2·s_j·Ψ_ij.
    """
    curve = curve_from_c(params, c3, c4)
    if curve.degenerate or not curve.roots_real:
        raise DegenerateCurveError(
            f"Derivative check needs five distinct real branch points, collisions {list(curve.collisions)}",
            collisions=list(curve.collisions),
        )
    order = _branch_order(curve)
    shifted = {
        ('C4', +1): (c3, c4 + fd_step), ('C4', -1): (c3, c4 - fd_step),
        ('C3', +1): (c3 + fd_step, c4), ('C3', -1): (c3 - fd_step, c4),
    }
    values = {}
    for key, (s3, s4) in shifted.items():
        moved = curve_from_c(params, s3, s4)
        if moved.degenerate or not moved.roots_real or _branch_order(moved) != order:
            raise DegenerateCurveError(
                f"Step {fd_step} in {key[0]} crosses the discriminant locus", collisions=list(moved.collisions),
            )
        pair = actions(moved, convention=CONVENTION_SORTED, tol=tol)
        values[key] = np.array([pair.a1, pair.a2])

    fd = np.empty((2, 2))
    for i, name in enumerate(('C4', 'C3')):
        fd[i] = (values[(name, +1)] - values[(name, -1)]) / (2.0 * fd_step)

    cycles = sorted_cycles(curve)
    psi = period_matrix(curve, cycles, tol=tol)
    signs = tuple(_cycle_sign(curve, cycle) for cycle in cycles)
    expected = 2.0 * np.real(psi.values) * np.array(signs)[None, :]
    max_error = float(np.max(np.abs(fd - expected)))
    logger.debug("Action derivative check at c=(%g, %g): max error %.3e", c3, c4, max_error)
    return DerivativeCheck(max_error=max_error, finite_difference=fd, expected=expected,
                           period_matrix=psi, signs=signs)


def action_report(params: SystemParams, c3: float, c4: float, fd_step: float = 1e-5) -> Dict:
    """JSON-ready summary of actions, period matrix and derivative check."""
    curve = curve_from_c(params, c3, c4)
    try:
        pair = actions(curve, convention=CONVENTION_LITERAL)
    except BranchPointError as exc:
        logger.info("Literal cycles unusable (%s); falling back to sorted cycles", exc.message)
        pair = actions(curve, convention=CONVENTION_SORTED)
    report = {
        'c3': float(c3),
        'c4': float(c4),
        'branch_points': [_json_number(v) for v in curve.branch_points],
        'a1': pair.a1,
        'a2': pair.a2,
        'cycle_convention': pair.convention,
        'cycles': [cycle.to_list() for cycle in pair.cycles],
        'degenerate': curve.degenerate,
        'psi': None,
        'derivative_check': None,
    }
    if not curve.degenerate:
        check = verify_action_derivatives(params, c3, c4, fd_step)
        report['psi'] = check.period_matrix.to_json()
        report['derivative_check'] = check.max_error
    return report
