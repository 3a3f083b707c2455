"""Engine configuration: bundled TOML defaults merged with user overrides."""

from __future__ import annotations

import copy
import sys
from importlib import resources
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from .control import ControlConfig, ModelConfig
from .errors import FormatError
from .lexicon import ExpansionConfig
from .ssm import OptimizerConfig


def default_config() -> dict:
    text = (resources.files("eventimpact") / "data" / "default.toml").read_text(encoding="utf-8")
    return tomllib.loads(text)


def _merge(base: dict, override: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        where = f"{path}{key}"
        if key not in base:
            raise FormatError(f"unknown config key {where!r}")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise FormatError(f"config key {where!r} must be a table")
            out[key] = _merge(base[key], value, where + ".")
        else:
            out[key] = value
    return out


def load_config(path=None) -> dict:
    """Defaults, overridden by the TOML file at ``path`` when given."""
    cfg = default_config()
    if path is None:
        return cfg
    try:
        user = tomllib.loads(Path(path).read_text(encoding="utf-8"))
    except tomllib.TOMLDecodeError as exc:
        raise FormatError(f"{path}: {exc}") from exc
    return _merge(cfg, user)


def model_config(cfg: dict) -> ModelConfig:
    s = cfg["ssm"]
    opt = OptimizerConfig(n_starts=int(s["n_starts"]), tol=float(s["tol"]), max_iter=int(s["max_iter"]),
                          diffuse_kappa=float(s["diffuse_kappa"]), lower=float(s["lower"]), upper=float(s["upper"]))
    return ModelConfig(trend=bool(s["trend"]), weekly_seasonal=bool(s["weekly_seasonal"]), optimizer=opt)


def control_config(cfg: dict, exogenous_ids=None) -> ControlConfig:
    c = cfg["control"]
    ids = c["exogenous_ids"] if exogenous_ids is None else exogenous_ids
    return ControlConfig(pre_days=int(c["pre_days"]), post_days=int(c["post_days"]),
                         lag_specs=tuple(tuple(x) for x in c["lag_specs"]), exogenous_ids=tuple(ids))


def expansion_config(cfg: dict, platform: str = "twitter_like") -> ExpansionConfig:
    lx = cfg["lexicon"]
    key = "reddit_thresholds" if platform == "reddit_like" else "twitter_thresholds"
    thresholds = {n + 1: v for n, v in enumerate(lx[key])}
    sw = lx["stopwords"]
    return ExpansionConfig(thresholds=thresholds, max_ngram=int(lx["max_ngram"]),
                           stopwords=sw if isinstance(sw, str) else frozenset(sw),
                           fold_plural=bool(lx["fold_plural"]))
