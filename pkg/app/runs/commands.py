"""
The six experiments behind `clebsch <command>`.

Each runner takes a validated RunConfig and an output directory, writes its
artifacts there and returns their paths. Runs are deterministic given the
config: every random draw comes from config.seed.
"""
import itertools
import logging
from pathlib import Path
from typing import Callable, Dict, List

import numpy as np

from app.actions.quadrature import action_report
from app.dynamics.integrator import convergence_order, drift_report, integrate, sweep
from app.errors import ConfigError, DegeneratePencilError
from app.integrals.quadratics import (
    BodyState,
    compute_integrals,
    integral_gradients,
    kirchhoff_rhs,
    lie_poisson_bracket,
    pencil_field,
    sample_leaf_state,
)
from app.kummer.surface import (
    KummerSurface,
    double_points,
    quadratic_pair_discriminants,
    quartic_series,
    search_points_at_infinity,
    surface_for_state,
)
from app.linearize.separation import linearization_residual, separation_series
from app.params.algebra import derive_physical
from app.runs import reports
from app.runs.config import RunConfig, exact_decimal
from app.special.families import family_report

logger = logging.getLogger(__name__)


def run_simulate(config: RunConfig, out_dir: Path, workers: int = 1) -> List[Path]:
    params = config.system_params()
    state0 = config.initial_state()
    traj = integrate(state0, params, config.horizon, config.step)
    report = drift_report(traj, params)
    if config.simulate.order_check:
        report.order_estimate = convergence_order(state0, params, config.horizon, config.step)
    written = [
        reports.write_trajectory(out_dir / 'trajectory.csv', traj),
        reports.write_drift(out_dir / 'drift.json', report),
    ]
    if config.simulate.sweep:
        rng = config.rng()
        # skip the draw already used for the initial state
        sample_leaf_state(rng)
        states = [sample_leaf_state(rng) for _ in range(config.simulate.sweep)]
        members = sweep(states, params, config.horizon, config.step, workers=workers)
        written.append(reports.write_json(out_dir / 'sweep.json', [m.to_dict() for m in members]))
    return written


def _gradient_norm(grad) -> float:
    return float(np.linalg.norm(np.concatenate(grad)))


def run_invariants(config: RunConfig, out_dir: Path, workers: int = 1) -> List[Path]:
    params = config.system_params()
    try:
        I, m = derive_physical(params)
    except DegeneratePencilError:
        logger.info("Pencil member is not physical; H, L and the Kirchhoff comparison are skipped")
        I = m = None
    providers = integral_gradients(params, I, m)
    rng = config.rng()
    worst: Dict[str, float] = {f"{a},{b}": 0.0 for a, b in itertools.combinations(providers, 2)}
    field_error = 0.0
    for _ in range(config.invariants.samples):
        state = sample_leaf_state(rng)
        grads = {name: provider(state) for name, provider in providers.items()}
        scale = max(1.0, float(np.linalg.norm(state.as_vector())))
        for a, b in itertools.combinations(providers, 2):
            norm = _gradient_norm(grads[a]) * _gradient_norm(grads[b]) * scale
            value = abs(lie_poisson_bracket(providers[a], providers[b], state))
            worst[f"{a},{b}"] = max(worst[f"{a},{b}"], value / norm if norm > 0 else value)
        if I is not None:
            pencil = pencil_field(state, params).as_vector()
            physical = kirchhoff_rhs(state, I, m).as_vector()
            field_error = max(field_error, float(np.linalg.norm(pencil - physical))
                              / max(float(np.linalg.norm(physical)), 1e-300))
    payload = {
        'samples': config.invariants.samples,
        'brackets': worst,
        'max_bracket': max(worst.values()),
        'field_equivalence': field_error if I is not None else None,
    }
    return [reports.write_json(out_dir / 'invariants.json', payload)]


def run_linearize(config: RunConfig, out_dir: Path, workers: int = 1) -> List[Path]:
    params = config.system_params()
    traj = integrate(config.initial_state(), params, config.horizon, config.step)
    report = linearization_residual(traj, params, stencil_order=config.linearize.stencil_order)
    return [
        reports.write_residual(out_dir / 'residual.json', report),
        reports.write_series_csv(out_dir / 'separation.csv', reports.SEPARATION_HEADER,
                                 separation_series(traj, params)),
    ]


def _kummer_surface(config: RunConfig, state0: BodyState) -> KummerSurface:
    options = config.kummer
    if options.c3 is None and options.c4 is None:
        return surface_for_state(state0, config.system_params())
    if options.c3 is None or options.c4 is None:
        raise ConfigError("kummer.c3 and kummer.c4 must be given together")
    if options.exact:
        return KummerSurface.from_levels(config.exact_params(),
                                         exact_decimal(options.c3), exact_decimal(options.c4))
    return KummerSurface.from_levels(config.system_params(), options.c3, options.c4)


def run_kummer(config: RunConfig, out_dir: Path, workers: int = 1) -> List[Path]:
    params = config.system_params()
    state0 = config.initial_state()
    surface = _kummer_surface(config, state0)
    points = double_points(surface)
    written = [
        reports.write_json(out_dir / 'double_points.json', [dp.to_dict() for dp in points]),
        reports.write_json(out_dir / 'kummer_surface.json', {
            'constants': {name: float(v) for name, v in zip(('l', 'm', 'n', 'd1', 'd2', 'd3'), surface.constants)},
            'rational': surface.is_rational,
            'certified': sum(dp.certified for dp in points),
            'discriminants': quadratic_pair_discriminants(surface),
        }),
    ]
    traj = integrate(state0, params, config.horizon, config.step)
    own = surface_for_state(state0, params)
    series = np.column_stack([traj.times, quartic_series(traj.states, own)])
    written.append(reports.write_series_csv(out_dir / 'quartic.csv', reports.QUARTIC_HEADER, series))
    if config.kummer.search_infinity:
        found = search_points_at_infinity(surface, seed=config.seed, starts=config.kummer.search_starts)
        written.append(reports.write_json(out_dir / 'infinity_candidates.json',
                                          [list(point.coords) for point in found]))
    return written


def run_actions(config: RunConfig, out_dir: Path, workers: int = 1) -> List[Path]:
    params = config.system_params()
    options = config.actions
    if options.c3 is None or options.c4 is None:
        values = compute_integrals(config.initial_state(), params)
        c3, c4 = values.c3, values.c4
    else:
        c3, c4 = options.c3, options.c4
    report = action_report(params, c3, c4, fd_step=options.fd_step)
    return [reports.write_json(out_dir / 'actions.json', report)]


def run_special(config: RunConfig, out_dir: Path, workers: int = 1) -> List[Path]:
    params = config.system_params()
    rng = config.rng()
    families = [
        family_report(params, spec.type, config.horizon, config.step, axis=spec.axis,
                      sigma_prime=spec.sigma_prime, k_axis=spec.k_axis, angle=spec.angle, rng=rng)
        for spec in config.special.families
    ]
    return [reports.write_json(out_dir / 'special.json', families)]


RUNNERS: Dict[str, Callable[[RunConfig, Path, int], List[Path]]] = {
    'simulate': run_simulate,
    'invariants': run_invariants,
    'linearize': run_linearize,
    'kummer': run_kummer,
    'actions': run_actions,
    'special': run_special,
}


def run(command: str, config: RunConfig, out_dir, workers: int = 1) -> List[Path]:
    """Run one experiment and return the artifacts it wrote."""
    if command not in RUNNERS:
        raise ConfigError(f"Unknown command {command!r}", choices=sorted(RUNNERS))
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    logger.info("Running %s into %s", command, out_dir)
    return RUNNERS[command](config, out_dir, workers)
