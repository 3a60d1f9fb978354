"""
Parameter algebra of the Clebsch pencil.

The moduli j1 < j2 < j3 and the pencil weights (λ, λ′) fix the physical
inertias I_α and virtual masses m_α; the integral levels (c3, c4) fix the
c-dependent constants (l, m, n), the roots (j4, j5) and, through the moduli
alone, the quartic parameters (d1, d2, d3).

All arithmetic is written with plain operators so that `fractions.Fraction`
inputs stay exact; only `roots_j45` and `clebsch_nu` require floats.
"""
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Real
from typing import Dict, Iterator, Optional, Tuple, Union

import numpy as np

from app.conf import get_setting
from app.errors import (
    DegeneratePencilError,
    ParameterDegeneracyError,
    ParameterError,
    PreconditionError,
)

logger = logging.getLogger(__name__)

Number = Union[Real, complex]
Triple = Tuple[Number, Number, Number]


@dataclass(frozen=True)
class SystemParams:
    """Moduli j1 < j2 < j3 and pencil weights of F = λC3 + λ′C4."""

    j: Triple
    lam: Real = 1.0
    lam_prime: Real = 1.0

    def __post_init__(self):
        j = tuple(self.j)
        if len(j) != 3:
            raise ParameterError(f"Expected three moduli, got {len(j)}")
        for value in (*j, self.lam, self.lam_prime):
            if not math.isfinite(float(value)):
                raise ParameterError(f"Non-finite parameter: {value}")
        if not (j[0] < j[1] < j[2]):
            raise ParameterError(f"Moduli must be strictly increasing, got {j}")
        object.__setattr__(self, 'j', j)

    @classmethod
    def from_dict(cls, data: Dict) -> 'SystemParams':
        """Build from a config block with keys j, lambda, lambda_prime."""
        try:
            return cls(j=tuple(data['j']), lam=data['lambda'], lam_prime=data['lambda_prime'])
        except KeyError as exc:
            raise ParameterError(f"Missing parameter key: {exc.args[0]}") from exc

    def to_dict(self) -> Dict:
        return {
            'j': [float(v) for v in self.j],
            'lambda': float(self.lam),
            'lambda_prime': float(self.lam_prime),
        }

    def scaled(self, t: Real) -> 'SystemParams':
        """Moduli multiplied by t > 0, weights unchanged."""
        return SystemParams(j=tuple(t * v for v in self.j), lam=self.lam, lam_prime=self.lam_prime)

    @property
    def J(self) -> Number:
        return self.j[0] + self.j[1] + self.j[2]

    @property
    def sigma2(self) -> Number:
        j1, j2, j3 = self.j
        return j1 * j2 + j2 * j3 + j3 * j1

    @property
    def sigma3(self) -> Number:
        j1, j2, j3 = self.j
        return j1 * j2 * j3

    @property
    def delta(self) -> Number:
        """Δ = (j1−j2)(j2−j3)(j3−j1); det A = −Δ."""
        j1, j2, j3 = self.j
        return (j1 - j2) * (j2 - j3) * (j3 - j1)

    @property
    def n(self) -> Triple:
        return tuple(self.lam + self.lam_prime * ja for ja in self.j)

    @property
    def n_prime(self) -> Triple:
        # λ′ j_β j_γ equals λ′ j1j2j3 / j_α and stays defined at j_α = 0
        j1, j2, j3 = self.j
        others = (j2 * j3, j3 * j1, j1 * j2)
        return tuple(self.lam * (self.J - ja) + self.lam_prime * prod
                     for ja, prod in zip(self.j, others))


@dataclass(frozen=True)
class Roots45:
    """Roots of x² − c3·x + c4, tagged as a real pair or a conjugate pair."""

    j4: Number
    j5: Number
    is_real: bool

    def __iter__(self) -> Iterator[Number]:
        yield self.j4
        yield self.j5


@dataclass(frozen=True)
class SpectralData:
    """Everything that depends on the integral levels (c3, c4)."""

    c3: Number
    c4: Number
    l: Number
    m: Number
    n: Number
    j4: Number
    j5: Number
    roots_real: bool
    d: Triple

    @property
    def lmn(self) -> Triple:
        return (self.l, self.m, self.n)


def pencil_matrix(params: SystemParams) -> np.ndarray:
    """
    Matrix A of the linear system A·(l, m, n)ᵀ = (1, c3, c4)ᵀ.

    The rows are the values of C2, C3, C4 on the three axis states K = 0,
    p = e_α.
    """
    j1, j2, j3 = params.j
    return np.array([
        [1, 1, 1],
        [j2 + j3, j3 + j1, j1 + j2],
        [j2 * j3, j3 * j1, j1 * j2],
    ], dtype=object if any(isinstance(v, Fraction) for v in params.j) else float)


def derive_physical(params: SystemParams) -> Tuple[Triple, Triple]:
    """
    Physical inertias and virtual masses of the pencil member λC3 + λ′C4.

    Returns:
        (I, m) with I_α = 1/(2n_α) and m_α = 1/(2n′_α).
    """
    n, n_prime = params.n, params.n_prime
    scale = max(abs(params.lam), abs(params.lam_prime)) * max(1.0, *(abs(v) for v in params.j)) ** 2
    tol = get_setting('CLEBSCH_TOL_REL') * scale
    for label, values in (('n', n), ("n'", n_prime)):
        for alpha, value in enumerate(values, start=1):
            if value == 0 or abs(value) <= tol:
                raise DegeneratePencilError(
                    f"{label}_{alpha} vanishes for lambda={params.lam}, lambda'={params.lam_prime}",
                    index=alpha,
                )
    I = tuple(1 / (2 * value) for value in n)
    m = tuple(1 / (2 * value) for value in n_prime)
    return I, m


def check_clebsch(I: Triple, m: Triple, tol_rel: Optional[float] = None) -> bool:
    """True iff (I2−I3)/m1 + (I3−I1)/m2 + (I1−I2)/m3 vanishes within tolerance."""
    if any(value == 0 for value in m):
        raise PreconditionError(f"Virtual masses must be nonzero, got {m}")
    if tol_rel is None:
        tol_rel = get_setting('CLEBSCH_TOL_REL')
    I1, I2, I3 = I
    m1, m2, m3 = m
    terms = ((I2 - I3) / m1, (I3 - I1) / m2, (I1 - I2) / m3)
    largest = max(abs(t) for t in terms)
    if largest == 0:
        return True
    return abs(sum(terms)) <= tol_rel * largest


def clebsch_nu(I: Triple, m: Triple) -> Tuple[float, float]:
    """
    Constants (ν, ν′) of the alternate form 1/m_α = ν + ν′·I_α/(I1·I2·I3).

    Exact when (I, m) satisfy the Clebsch condition; a least-squares fit
    otherwise.
    """
    I_arr = np.asarray(I, dtype=float)
    design = np.column_stack([np.ones(3), I_arr / np.prod(I_arr)])
    (nu, nu_prime), *_ = np.linalg.lstsq(design, 1.0 / np.asarray(m, dtype=float), rcond=None)
    return float(nu), float(nu_prime)


def compute_lmn(params: SystemParams, c3: Number, c4: Number) -> Triple:
    """
    Solve A·(l, m, n)ᵀ = (1, c3, c4)ᵀ.

    Uses the closed-form inverse, which gives
    l_α = (j_α² − c3·j_α + c4) / Π_{β≠α}(j_α − j_β), so rational inputs give
    rational outputs.

    Examples:
        j=(1,2,3), c=(5,6) -> (1, 0, 0)
    """
    if params.delta == 0:
        raise ParameterDegeneracyError(f"Pencil matrix is singular for j={params.j}")
    j = params.j
    result = []
    for alpha in range(3):
        ja = j[alpha]
        denom = 1
        for beta in range(3):
            if beta != alpha:
                denom = denom * (ja - j[beta])
        result.append((ja * ja - c3 * ja + c4) / denom)
    return tuple(result)


def lmn_from_roots(params: SystemParams, j4: Number, j5: Number) -> Triple:
    """(l, m, n) from the roots: l_α = (j_α−j4)(j_α−j5) / Π_{β≠α}(j_α−j_β)."""
    j = params.j
    result = []
    for alpha in range(3):
        ja = j[alpha]
        value = (ja - j4) * (ja - j5) / ((ja - j[(alpha + 1) % 3]) * (ja - j[(alpha + 2) % 3]))
        if isinstance(value, complex):
            value = value.real
        result.append(value)
    return tuple(result)


def roots_j45(c3: Real, c4: Real, tol_rel: Optional[float] = None) -> Roots45:
    """
    Roots of x² − c3·x + c4 ordered by real part, then imaginary part.

    Examples:
        (5, 6) -> (2, 3)
        (2s, s²) -> (s, s)
    """
    if tol_rel is None:
        tol_rel = get_setting('CLEBSCH_TOL_REL')
    c3, c4 = float(c3), float(c4)
    disc = c3 * c3 - 4.0 * c4
    if disc < 0 and abs(disc) <= tol_rel * max(c3 * c3, abs(4.0 * c4)):
        disc = 0.0
    if disc >= 0:
        root = math.sqrt(disc)
        q = 0.5 * (c3 + math.copysign(root, c3))
        if q == 0:
            return Roots45(0.0, 0.0, True)
        a, b = q, c4 / q
        return Roots45(min(a, b), max(a, b), True)
    half = 0.5 * math.sqrt(-disc)
    return Roots45(complex(0.5 * c3, -half), complex(0.5 * c3, half), False)


def d_params(params: SystemParams) -> Triple:
    """d1 = 1/(j3−j2), d2 = 1/(j1−j3), d3 = 1/(j2−j1)."""
    j1, j2, j3 = params.j
    return (1 / (j3 - j2), 1 / (j1 - j3), 1 / (j2 - j1))


def spectral_data(params: SystemParams, c3: Number, c4: Number) -> SpectralData:
    """Bundle (l, m, n), the roots (j4, j5) and (d1, d2, d3) for one level set."""
    l, m, n = compute_lmn(params, c3, c4)
    roots = roots_j45(c3, c4)
    if not roots.is_real:
        logger.info("Roots of x^2 - %s x + %s form a conjugate pair", c3, c4)
    return SpectralData(
        c3=c3, c4=c4, l=l, m=m, n=n,
        j4=roots.j4, j5=roots.j5, roots_real=roots.is_real,
        d=d_params(params),
    )


