import pytest

from eventimpact.config import control_config, default_config, expansion_config, load_config, model_config
from eventimpact.errors import FormatError


def test_defaults_cover_documented_keys():
    cfg = default_config()
    for key in ("trend", "weekly_seasonal", "n_starts", "tol", "max_iter", "diffuse_kappa"):
        assert key in cfg["ssm"]
    assert cfg["control"]["lag_specs"] == [[365, -365], [161, -35]]
    assert cfg["control"]["shift_c"] == 1000.0
    assert cfg["impact"]["min_peak"] == 30 and cfg["impact"]["width_cap"] == 5.0
    assert cfg["impact"]["n_boot"] == 10000
    assert expansion_config(cfg).thresholds == {1: 300, 2: 150, 3: 75}
    assert expansion_config(cfg, "reddit_like").thresholds == {1: 300, 2: 120, 3: 50}
    m = model_config(cfg)
    assert m.trend and not m.weekly_seasonal and m.optimizer.n_starts == 3
    assert control_config(cfg).pre_days == 77


def test_override_and_unknown_keys(tmp_path):
    p = tmp_path / "c.toml"
    p.write_text("[ssm]\nweekly_seasonal = true\n[impact]\nwidth_cap = 2.5\n")
    cfg = load_config(p)
    assert cfg["ssm"]["weekly_seasonal"] and cfg["ssm"]["trend"] and cfg["impact"]["width_cap"] == 2.5
    p.write_text("[ssm]\nturbo = true\n")
    with pytest.raises(FormatError):
        load_config(p)
    p.write_text("[ssm\n")
    with pytest.raises(FormatError):
        load_config(p)
