from pathlib import Path

import pytest
import yaml

from bbmlab.config import ExperimentConfig, dump_config, load_config, parse_config
from bbmlab.errors import ConfigurationError

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


@pytest.mark.parametrize("name", ["smoke.yaml", "standard.yaml", "extended.yaml"])
def test_shipped_configs_load(name):
    cfg = load_config(CONFIGS / name)
    assert cfg.sweep_config().eps_list[0] == cfg.sweep.eps_list[0]


@pytest.mark.parametrize("name", ["smoke.yaml", "standard.yaml", "extended.yaml"])
def test_round_trip(name):
    cfg = load_config(CONFIGS / name)
    again = parse_config(yaml.safe_load(dump_config(cfg)))
    assert again == cfg


def test_defaults():
    cfg = parse_config({})
    assert cfg == ExperimentConfig()
    assert cfg.identity.sample_count == 10000


@pytest.mark.parametrize(
    "data,path",
    [
        ({"grid": {"n": 100}}, "grid"),
        ({"grid": {"size": 64}}, "grid.size"),
        ({"colour": 1}, "colour"),
        ({"stepper": {"dt": -1.0}}, "stepper.dt"),
        ({"stepper": {"dt": "small"}}, "stepper.dt"),
        ({"model": {"kind": "bbm-eps", "eps": 2.0}}, "model"),
        ({"identity": {"sample_count": 0}}, "identity.sample_count"),
        ({"sweep": {"eps_list": [0.1, 0.2, 0.05]}}, "sweep.eps_list"),
        ({"sweep": {"s": 7.0}}, "sweep.s"),
        ({"strichartz": {"q": 18.0, "r": 4.0}}, "strichartz"),
        ({"sweep": {"synthetic": {"slope": 1}}}, "sweep.synthetic.slope"),
        ({"initial_data": {"name": "square"}}, "initial_data.name"),
    ],
)
def test_errors_name_the_field(data, path):
    with pytest.raises(ConfigurationError) as err:
        parse_config(data)
    assert err.value.path == path


def test_bool_is_not_a_number():
    with pytest.raises(ConfigurationError):
        parse_config({"grid": {"n": True}})


def test_missing_file(tmp_path):
    with pytest.raises(ConfigurationError):
        load_config(tmp_path / "nope.yaml")


def test_unparseable_file(tmp_path):
    p = tmp_path / "bad.yaml"
    p.write_text("grid: [unclosed\n")
    with pytest.raises(ConfigurationError):
        load_config(p)
