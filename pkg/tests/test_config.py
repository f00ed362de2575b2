import json

import numpy as np
import pytest

from holomenta.config import ConfigError, SystemConfig
from holomenta.mechanics import MPoint, nonholonomic_vector_field
from holomenta.systems import DISK_CONFIG, PARTICLE_CONFIG, builtin


def test_particle_config_matches_builtin():
    system, action = SystemConfig.from_dict(PARTICLE_CONFIG).build()
    fx = builtin("particle")
    for m in fx.sample_states(5):
        np.testing.assert_array_equal(system.frame(m.q), fx.system.frame(m.q))
        np.testing.assert_array_equal(action.at(m.q), fx.action.at(m.q))
        np.testing.assert_allclose(nonholonomic_vector_field(system, m).state, nonholonomic_vector_field(fx.system, m).state)


def test_params_substituted():
    system, _ = SystemConfig.from_dict({**DISK_CONFIG, "params": {"I": 1.0, "J": 1.0, "R": 2.0}}).build()
    np.testing.assert_allclose(system.frame([0, 0, 0, 0])[:, 0], [2.0, 0.0, 1.0, 0.0])


def test_load_roundtrip(tmp_path):
    path = tmp_path / "p.json"
    path.write_text(json.dumps({**PARTICLE_CONFIG, "sample_points": [[0, 1, 0], [0, -1, 0]]}))
    cfg = SystemConfig.load(path)
    assert cfg.coordinates == ["x", "y", "z"] and len(cfg.sample_points) == 2


@pytest.mark.parametrize(
    "patch, match",
    [
        ({"metric": [["1", "0"], ["0", "1"]]}, "metric"),
        ({"vertical_complement": []}, "vertical_complement"),
        ({"distribution": [["0", "1"]]}, "distribution"),
        ({"coordinates": ["x", "x", "z"]}, "distinct"),
        ({"extra": 1}, "unknown fields"),
        ({"sample_points": [[0, 1]]}, "sample_points"),
        ({"chart_box": [[0, 1], [0, 1]]}, "chart_box"),
        ({"chart_box": [[0, 1], [0, 1], [0]]}, "chart_box"),
        ({"metric": "eye"}, "metric"),
    ],
)
def test_shape_errors(patch, match):
    with pytest.raises(ConfigError, match=match):
        SystemConfig.from_dict({**PARTICLE_CONFIG, **patch})


def test_missing_field():
    data = dict(PARTICLE_CONFIG)
    del data["metric"]
    with pytest.raises(ConfigError, match="missing"):
        SystemConfig.from_dict(data)


def test_expression_errors():
    with pytest.raises(ConfigError):
        SystemConfig.from_dict({**PARTICLE_CONFIG, "potential": "1 + * 2"}).build()
    with pytest.raises(ConfigError, match="unknown names"):
        SystemConfig.from_dict({**PARTICLE_CONFIG, "potential": "k*x"}).build()


def test_unreadable(tmp_path):
    with pytest.raises(ConfigError):
        SystemConfig.load(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("[1, 2]")
    with pytest.raises(ConfigError):
        SystemConfig.load(bad)


def test_potential_compiled():
    system, _ = SystemConfig.from_dict({**PARTICLE_CONFIG, "potential": "0.5*z^2"}).build()
    assert system.potential(np.array([0.0, 0.0, 2.0])) == 2.0
    # at y = 1 the frame vector dx + dz (squared length 2) feels the force -dU/dz = -2
    f = nonholonomic_vector_field(system, MPoint([0, 1.0, 2.0], [0, 0]))
    np.testing.assert_allclose(f.vdot, [0, -1.0], atol=1e-8)
