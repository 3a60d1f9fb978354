"""
Fixed-step integration of the pencil flow with invariant-drift monitoring.

States are carried as flat 6-vectors (K1, K2, K3, p1, p2, p3) inside the
integrator and exposed as `BodyState` objects at the boundary. There is no
re-projection onto the leaf: drift is the quantity being measured.
"""
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from app.conf import get_setting
from app.errors import BlowUpError, DegeneratePencilError, PreconditionError
from app.integrals.quadratics import BodyState, hl_coefficients, make_pencil_rhs
from app.params.algebra import SystemParams, derive_physical

logger = logging.getLogger(__name__)

Rhs = Callable[[np.ndarray], np.ndarray]

DRIFT_NAMES = ('C1', 'C2', 'C3', 'C4', 'H', 'L')


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    params: SystemParams
    step: float

    def __len__(self) -> int:
        return len(self.times)

    def state(self, index: int) -> BodyState:
        return BodyState.from_vector(self.states[index])

    @property
    def K(self) -> np.ndarray:
        return self.states[:, :3]

    @property
    def p(self) -> np.ndarray:
        return self.states[:, 3:6]


@dataclass
class DriftReport:
    """Maximum relative drift per integral, plus an optional order estimate."""

    drifts: Dict[str, float]
    step: float
    t_final: float
    order_estimate: Optional[float] = None
    extra: Dict[str, float] = field(default_factory=dict)

    @property
    def max_drift(self) -> float:
        return max(self.drifts[name] for name in ('C1', 'C2', 'C3', 'C4'))

    def to_dict(self) -> Dict:
        payload = {
            'drifts': {name: self.drifts[name] for name in DRIFT_NAMES if name in self.drifts},
            'step': self.step,
            't_final': self.t_final,
            'order_estimate': self.order_estimate,
        }
        payload.update(self.extra)
        return payload

    @classmethod
    def from_dict(cls, data: Dict) -> 'DriftReport':
        known = {'drifts', 'step', 't_final', 'order_estimate'}
        return cls(
            drifts=dict(data['drifts']),
            step=data['step'],
            t_final=data['t_final'],
            order_estimate=data.get('order_estimate'),
            extra={k: v for k, v in data.items() if k not in known},
        )


def rk4_step(rhs: Rhs, y: np.ndarray, h: float) -> np.ndarray:
    k1 = rhs(y)
    k2 = rhs(y + 0.5 * h * k1)
    k3 = rhs(y + 0.5 * h * k2)
    k4 = rhs(y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate_field(rhs: Rhs, y0: np.ndarray, t_final: float, h: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    Classical RK4 from 0 to t_final at fixed step h.

    The last step is shortened when t_final is not a multiple of h.

    Returns:
        (times, states) with states of shape (len(times), len(y0)).
    """
    if not (h > 0 and t_final > 0):
        raise PreconditionError(f"Need h > 0 and t_final > 0, got h={h}, t_final={t_final}")
    y = np.array(y0, dtype=float)
    if not np.all(np.isfinite(y)):
        raise PreconditionError(f"Initial state is not finite: {y}")
    cap = get_setting('CLEBSCH_BLOWUP_CAP')
    n_steps = max(1, math.ceil(t_final / h - 1e-9))
    times = np.minimum(np.arange(n_steps + 1) * h, t_final)
    times[-1] = t_final
    states = np.empty((n_steps + 1, y.size))
    states[0] = y
    for i in range(n_steps):
        y = rk4_step(rhs, y, times[i + 1] - times[i])
        if not np.all(np.isfinite(y)) or np.linalg.norm(y) > cap:
            raise BlowUpError(
                f"State left the finite region after t={times[i]:.6g}",
                last_good_time=float(times[i]),
            )
        states[i + 1] = y
    return times, states


def integrate(state0: BodyState, params: SystemParams, t_final: float, h: float,
              reverse: bool = False) -> Trajectory:
    """Integrate the pencil field (negated when `reverse`) from state0."""
    rhs = make_pencil_rhs(params, sign=-1.0 if reverse else 1.0)
    times, states = integrate_field(rhs, state0.as_vector(), t_final, h)
    logger.debug("Integrated %d steps of size %g", len(times) - 1, h)
    return Trajectory(times=times, states=states, params=params, step=h)


def integral_series(states: np.ndarray, params: SystemParams) -> Dict[str, np.ndarray]:
    """C1..C4 (and H, L when the pencil member is physical) along a state array."""
    K, p = states[:, :3], states[:, 3:6]
    j = np.asarray(params.j, dtype=float)
    j1, j2, j3 = j
    products = np.array([j2 * j3, j3 * j1, j1 * j2])
    K2, p2 = K * K, p * p
    series = {
        'C1': np.sum(K * p, axis=1),
        'C2': np.sum(p2, axis=1),
        'C3': np.sum(K2, axis=1) + p2 @ (float(params.J) - j),
        'C4': K2 @ j + p2 @ products,
    }
    try:
        derive_physical(params)
    except DegeneratePencilError:
        return series
    (lam, lam_p), (a, b, c) = hl_coefficients(params)
    series['H'] = lam * series['C3'] + lam_p * series['C4']
    series['L'] = a * series['C3'] + b * series['C4'] + c * series['C2']
    return series


def drift_report(traj: Trajectory, params: SystemParams) -> DriftReport:
    """max_t |C(t) − C(0)| / max(1, |C(0)|) for every monitored integral."""
    if len(traj) == 0:
        raise PreconditionError("Empty trajectory")
    drifts = {}
    for name, values in integral_series(traj.states, params).items():
        drifts[name] = float(np.max(np.abs(values - values[0])) / max(1.0, abs(values[0])))
    return DriftReport(drifts=drifts, step=traj.step, t_final=float(traj.times[-1]))


def convergence_order(state0: BodyState, params: SystemParams, t_final: float, h: float) -> float:
    """Richardson estimate log2(drift(h) / drift(h/2)) on the C1..C4 maximum."""
    coarse = drift_report(integrate(state0, params, t_final, h), params).max_drift
    fine = drift_report(integrate(state0, params, t_final, h / 2.0), params).max_drift
    if fine == 0.0:
        return math.inf
    return math.log2(coarse / fine)


def _sweep_member(args) -> DriftReport:
    state_vector, params, t_final, h = args
    return drift_report(integrate(BodyState.from_vector(state_vector), params, t_final, h), params)


def sweep(states: Sequence[BodyState], params: SystemParams, t_final: float, h: float,
          workers: int = 1) -> List[DriftReport]:
    """Drift reports for independent initial states, optionally across processes."""
    jobs = [(state.as_vector(), params, t_final, h) for state in states]
    if workers <= 1:
        return [_sweep_member(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_sweep_member, jobs))
