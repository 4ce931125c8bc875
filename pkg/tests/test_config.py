import pytest

from ldgpoly.config import DEFAULTS, ConfigError, load_config


def test_defaults_validate():
    cfg = load_config()
    assert cfg["domain"]["K"] == 6
    assert cfg.pair is None
    assert cfg.constants.B == DEFAULTS["constants"]["B"]


def test_file_then_overrides(tmp_path):
    p = tmp_path / "run.toml"
    p.write_text('version = 1\nout = "o"\n[domain]\nK = 5\nh = 0.125\n[seed]\nkind = "pinfty"\npair = [1, 3]\n')
    cfg = load_config(p, {"domain": {"h": 0.25}})
    assert cfg["domain"]["K"] == 5 and cfg["domain"]["h"] == 0.25
    assert cfg.pair == (1, 3)


@pytest.mark.parametrize(
    "over",
    [
        {"domain": {"K": 2}},
        {"domain": {"kind": "isosceles"}},
        {"domain": {"h": 0.0}},
        {"solve": {"lambda_sq": -1.0}},
        {"sweep": {"start": 5.0, "stop": 5.0}},
        {"seed": {"kind": "pinfty"}},
        {"seed": {"kind": "file"}},
        {"seed": {"kind": "magic"}},
        {"constants": {"B": 0.0}},
        {"domain": {"colour": "red"}},
        {"version": 2},
        {"domain": 3},
    ],
)
def test_invalid(over):
    with pytest.raises(ConfigError):
        load_config(None, over)


def test_bad_toml(tmp_path):
    p = tmp_path / "bad.toml"
    p.write_text("version = = 1\n")
    with pytest.raises(ConfigError):
        load_config(p)
