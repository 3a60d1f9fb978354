"""
Tests for the `clebsch` management command, run configs and artifacts.

Runs use short horizons; the reference T=10 run is covered in test_dynamics.
"""
import json
import math
from io import StringIO
from pathlib import Path

import numpy as np
import pytest
import yaml
from django.conf import settings
from django.core.management import call_command

from app.dynamics.integrator import integrate
from app.errors import ConfigError
from app.runs import reports
from app.runs.cli import main
from app.runs.config import RunConfig, load_run_config, parse_run_config

CONFIG_DIR = Path(settings.CLEBSCH_CONFIG_DIR)


# ─── helpers ───────────────────────────────────────────────────────────

def _config(tmp_path: Path, data: dict, name: str = 'run.yaml') -> str:
    path = tmp_path / name
    path.write_text(yaml.safe_dump(data), encoding='utf-8')
    return str(path)


def _short(tmp_path: Path, **extra) -> str:
    data = {'preset': 'standard', 'horizon': 1.0}
    data.update(extra)
    return _config(tmp_path, data)


def _clebsch(command: str, config: str, out: Path, **options):
    stdout, stderr = StringIO(), StringIO()
    call_command('clebsch', command, config=config, out=str(out), stdout=stdout, stderr=stderr, **options)
    return stdout.getvalue()


def _failing(command: str, config: str, out: Path):
    stderr = StringIO()
    with pytest.raises(SystemExit) as info:
        call_command('clebsch', command, config=config, out=str(out), stdout=StringIO(), stderr=stderr)
    return info.value.code, json.loads(stderr.getvalue())


# ═════════════════════════════════════════════════════════════════════
#  Configs
# ═════════════════════════════════════════════════════════════════════

class TestRunConfig:
    def test_standard_preset(self):
        config = load_run_config(CONFIG_DIR / 'standard.yaml')
        assert config.params.j == (1.0, 2.0, 3.0)
        assert (config.seed, config.horizon, config.step) == (7, 10.0, 1e-3)

    def test_preset_merge(self):
        config = parse_run_config({'preset': 'standard', 'seed': 11, 'params': {'lambda': 0.5}})
        assert config.seed == 11
        assert config.params.j == (1.0, 2.0, 3.0)
        assert (config.params.lam, config.params.lam_prime) == (0.5, 1.0)

    def test_seed_override(self):
        assert load_run_config(CONFIG_DIR / 'standard.yaml', seed=11).seed == 11
        with pytest.raises(ConfigError):
            load_run_config(CONFIG_DIR / 'standard.yaml', seed=-1)

    def test_initial_state_is_seeded(self):
        config = load_run_config(CONFIG_DIR / 'standard.yaml')
        np.testing.assert_array_equal(config.initial_state().as_vector(), config.initial_state().as_vector())

    def test_configured_state_projected(self):
        config = parse_run_config({'params': {'j': [1, 2, 3]},
                                   'state': {'K': [1, 1, 0], 'p': [2, 0, 0], 'project': True}})
        state = config.initial_state()
        np.testing.assert_allclose(state.p, (1.0, 0.0, 0.0))
        np.testing.assert_allclose(state.K, (0.0, 1.0, 0.0))

    def test_exact_params(self):
        params = parse_run_config({'params': {'j': [1, 2.5, 3]}}).exact_params()
        assert str(params.j[1]) == '5/2'

    @pytest.mark.parametrize('data', [
        {'params': {'j': [3, 2, 1]}},
        {'params': {'j': [1, 2, 3]}, 'unknown': 1},
        {'params': {'j': [1, 2, 3]}, 'linearize': {'stencil_order': 3}},
        {'params': {'j': [1, 2, 3]}, 'version': 2},
        {'preset': 'no-such-preset'},
    ])
    def test_invalid_configs(self, data):
        with pytest.raises(ConfigError) as info:
            parse_run_config(data)
        assert info.value.exit_code == 1

    def test_schema_lists_every_field(self):
        schema = json.loads(Path(settings.CLEBSCH_SCHEMA_PATH).read_text(encoding='utf-8'))
        aliases = {field.alias or name for name, field in RunConfig.model_fields.items()}
        assert set(schema['properties']) == aliases
        assert set(schema['properties']['params']['properties']) == {'j', 'lambda', 'lambda_prime'}


# ═════════════════════════════════════════════════════════════════════
#  Commands
# ═════════════════════════════════════════════════════════════════════

class TestSimulate:
    def test_artifacts(self, tmp_path):
        config_path = _short(tmp_path, simulate={'order_check': False})
        output = _clebsch('simulate', config_path, tmp_path / 'out')
        assert 'simulate finished: 2 artifact(s)' in output
        config = load_run_config(config_path)
        drift = reports.read_drift(tmp_path / 'out' / 'drift.json')
        assert drift.max_drift <= 1e-8
        assert drift.order_estimate is None
        traj = reports.read_trajectory(tmp_path / 'out' / 'trajectory.csv', config.system_params())
        expected = integrate(config.initial_state(), config.system_params(), 1.0, 1e-3)
        np.testing.assert_array_equal(traj.states, expected.states)
        np.testing.assert_array_equal(traj.times, expected.times)

    def test_order_check(self, tmp_path):
        """Richardson estimate on the full standard run at its own step."""
        config_path = _config(tmp_path, {'preset': 'standard'})
        _clebsch('simulate', config_path, tmp_path / 'out')
        drift = reports.read_json(tmp_path / 'out' / 'drift.json')
        assert drift['step'] == pytest.approx(1e-3)
        assert 'order_step' not in drift
        assert 3.2 <= drift['order_estimate'] <= 4.8

    def test_reruns_are_byte_identical(self, tmp_path):
        config_path = _short(tmp_path, simulate={'order_check': False})
        _clebsch('simulate', config_path, tmp_path / 'a')
        _clebsch('simulate', config_path, tmp_path / 'b')
        for name in ('trajectory.csv', 'drift.json'):
            assert (tmp_path / 'a' / name).read_bytes() == (tmp_path / 'b' / name).read_bytes()

    def test_sweep(self, tmp_path):
        _clebsch('simulate', _short(tmp_path, simulate={'order_check': False, 'sweep': 2}), tmp_path / 'out')
        members = reports.read_json(tmp_path / 'out' / 'sweep.json')
        assert len(members) == 2
        assert all(max(m['drifts'][k] for k in ('C1', 'C2', 'C3', 'C4')) <= 1e-8 for m in members)


class TestOtherCommands:
    def test_invariants(self, tmp_path):
        _clebsch('invariants', _short(tmp_path, invariants={'samples': 50}), tmp_path / 'out')
        payload = reports.read_json(tmp_path / 'out' / 'invariants.json')
        assert payload['samples'] == 50
        assert payload['max_bracket'] <= 1e-12
        assert payload['field_equivalence'] <= 1e-10

    def test_linearize(self, tmp_path):
        _clebsch('linearize', _short(tmp_path, horizon=3.0), tmp_path / 'out')
        residual = reports.read_residual(tmp_path / 'out' / 'residual.json')
        assert not residual.degenerate
        assert max(residual.max_residual_1, residual.max_residual_2) <= 1e-5
        t, x1, x2 = reports.read_separation(tmp_path / 'out' / 'separation.csv')
        assert len(t) == 3001
        eps = 1e-12
        assert np.all((1.0 - eps <= x1) & (x1 <= 2.0 + eps) & (2.0 - eps <= x2) & (x2 <= 3.0 + eps))

    def test_rational_kummer(self, tmp_path):
        _clebsch('kummer', str(CONFIG_DIR / 'rational_kummer.yaml'), tmp_path / 'out')
        points = reports.read_double_points(tmp_path / 'out' / 'double_points.json')
        assert points and all(p['certified'] for p in points)
        surface = reports.read_json(tmp_path / 'out' / 'kummer_surface.json')
        assert surface['rational'] is True
        assert surface['certified'] == len(points)
        quartic = reports.read_series_csv(tmp_path / 'out' / 'quartic.csv', reports.QUARTIC_HEADER)
        assert np.max(np.abs(quartic[:, 1])) <= 1e-9

    def test_closed_form_actions(self, tmp_path):
        _clebsch('actions', str(CONFIG_DIR / 'closed_form_actions.yaml'), tmp_path / 'out')
        payload = reports.read_json(tmp_path / 'out' / 'actions.json')
        assert payload['a1'] == pytest.approx(-4.0, rel=1e-10)
        assert payload['a2'] == pytest.approx(4.0 * (math.sqrt(2.0) - 1.0), rel=1e-10)
        assert payload['psi'] is None

    def test_special(self, tmp_path):
        config_path = _config(tmp_path, {'preset': 'special_families', 'horizon': 1.0})
        _clebsch('special', config_path, tmp_path / 'out')
        families = reports.read_json(tmp_path / 'out' / 'special.json')
        assert [f['type'] for f in families] == ['axis', 'axis', 'delta']
        assert all(f['invariance_deviation'] <= 1e-8 for f in families)


class TestFailures:
    def test_degenerate_actions_exit_two(self, tmp_path):
        code, error = _failing('actions', _short(tmp_path, actions={'c3': 4, 'c4': 4}), tmp_path / 'out')
        assert code == 2
        assert error['error'] == 'DegenerateCurveError'
        assert error['exit_code'] == 2

    def test_bad_moduli_exit_one(self, tmp_path):
        code, error = _failing('simulate', _config(tmp_path, {'params': {'j': [3, 2, 1]}}), tmp_path / 'out')
        assert code == 1
        assert error['error'] == 'ConfigError'
        assert error['errors']

    def test_missing_config_exit_one(self, tmp_path):
        code, error = _failing('simulate', str(tmp_path / 'missing.yaml'), tmp_path / 'out')
        assert code == 1
        assert 'not found' in error['message']


class TestEntryPoint:
    def test_main(self, tmp_path, capsys):
        out = tmp_path / 'out'
        main(['clebsch', 'actions', '--config', str(CONFIG_DIR / 'closed_form_actions.yaml'), '--out', str(out)])
        assert (out / 'actions.json').exists()
        assert 'actions finished' in capsys.readouterr().out
