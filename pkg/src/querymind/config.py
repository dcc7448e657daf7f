"""Flat key-path config files: one ``key = value`` per line, ``#`` comments.

Unknown keys are rejected; missing keys fall back to documented defaults (the
dominant-mode prior scenario).  ``serialize_config(parse_config(p))`` parses
back to an equal config.
"""

from __future__ import annotations

import os
from typing import Callable

from .model import REWARD_FORMS, BeliefParams, ThetaGrid
from .inference import QueryGrid
from .agents import MleSearchConfig, ParamRange
from .experiments import ConfigError, ScenarioConfig

_BOOL_WORDS = {"true": True, "false": False, "1": True, "0": False,
               "yes": True, "no": False}


def _parse_bool(raw: str) -> bool:
    try:
        return _BOOL_WORDS[raw.strip().lower()]
    except KeyError:
        raise ValueError(f"not a boolean: {raw!r}") from None


def _positive(v) -> bool:
    return v > 0


def _nonnegative(v) -> bool:
    return v >= 0


def _unit_interval(v) -> bool:
    return 0.0 <= v <= 1.0


# key -> (type converter, constraint or None, constraint description);
# defaults come from ScenarioConfig itself via config_values().
_KEY_TABLE: dict[str, tuple[Callable, Callable | None, str]] = {
    "prior.mu1": (float, None, ""),
    "prior.sigma1": (float, _positive, "must be > 0"),
    "prior.mu2": (float, None, ""),
    "prior.sigma2": (float, _positive, "must be > 0"),
    "prior.p_z": (float, _unit_interval, "must be in [0, 1]"),
    "run.theta_true": (float, None, ""),
    "run.n_queries": (int, lambda v: v >= 1, "must be >= 1"),
    "run.seed": (int, None, ""),
    "run.selection": (str, lambda v: v in ("sample", "argmax"),
                      "must be 'sample' or 'argmax'"),
    "run.exact_likelihood": (_parse_bool, None, ""),
    "agent.beta_a": (float, _nonnegative, "must be >= 0"),
    "agent.beta_h": (float, _nonnegative, "must be >= 0"),
    "agent.reward_form": (str, lambda v: v in REWARD_FORMS,
                          f"must be one of {REWARD_FORMS}"),
    "grid.theta_lo": (float, None, ""),
    "grid.theta_hi": (float, None, ""),
    "grid.theta_points": (int, lambda v: v >= 3, "must be >= 3"),
    "grid.query_lo": (float, None, ""),
    "grid.query_hi": (float, None, ""),
    "grid.query_points": (int, lambda v: v >= 2, "must be >= 2"),
    "mle.mu1_lo": (float, None, ""),
    "mle.mu1_hi": (float, None, ""),
    "mle.mu1_count": (int, _positive, "must be >= 1"),
    "mle.mu2_lo": (float, None, ""),
    "mle.mu2_hi": (float, None, ""),
    "mle.mu2_count": (int, _positive, "must be >= 1"),
    "mle.sigma1_lo": (float, _positive, "must be > 0"),
    "mle.sigma1_hi": (float, _positive, "must be > 0"),
    "mle.sigma1_count": (int, _positive, "must be >= 1"),
    "mle.sigma2_lo": (float, _positive, "must be > 0"),
    "mle.sigma2_hi": (float, _positive, "must be > 0"),
    "mle.sigma2_count": (int, _positive, "must be >= 1"),
    "mle.p_z_lo": (float, _unit_interval, "must be in [0, 1]"),
    "mle.p_z_hi": (float, _unit_interval, "must be in [0, 1]"),
    "mle.p_z_count": (int, _positive, "must be >= 1"),
    "mle.refine_iters": (int, _nonnegative, "must be >= 0"),
    "mle.refine_shrink": (float, lambda v: 0.0 < v < 1.0, "must be in (0, 1)"),
}


def config_values(cfg: ScenarioConfig) -> dict[str, object]:
    """Flat key -> value view of a resolved config."""
    return {
        "prior.mu1": cfg.prior.mu1,
        "prior.sigma1": cfg.prior.sigma1,
        "prior.mu2": cfg.prior.mu2,
        "prior.sigma2": cfg.prior.sigma2,
        "prior.p_z": cfg.prior.p_z,
        "run.theta_true": cfg.theta_true,
        "run.n_queries": cfg.n_queries,
        "run.seed": cfg.seed,
        "run.selection": cfg.selection,
        "run.exact_likelihood": cfg.exact_likelihood,
        "agent.beta_a": cfg.beta_a,
        "agent.beta_h": cfg.beta_h,
        "agent.reward_form": cfg.reward_form,
        "grid.theta_lo": cfg.theta_grid.lo,
        "grid.theta_hi": cfg.theta_grid.hi,
        "grid.theta_points": cfg.theta_grid.n_points,
        "grid.query_lo": cfg.query_grid.feature_lo,
        "grid.query_hi": cfg.query_grid.feature_hi,
        "grid.query_points": cfg.query_grid.n_per_axis,
        "mle.mu1_lo": cfg.mle.mu1.lo,
        "mle.mu1_hi": cfg.mle.mu1.hi,
        "mle.mu1_count": cfg.mle.mu1.count,
        "mle.mu2_lo": cfg.mle.mu2.lo,
        "mle.mu2_hi": cfg.mle.mu2.hi,
        "mle.mu2_count": cfg.mle.mu2.count,
        "mle.sigma1_lo": cfg.mle.sigma1.lo,
        "mle.sigma1_hi": cfg.mle.sigma1.hi,
        "mle.sigma1_count": cfg.mle.sigma1.count,
        "mle.sigma2_lo": cfg.mle.sigma2.lo,
        "mle.sigma2_hi": cfg.mle.sigma2.hi,
        "mle.sigma2_count": cfg.mle.sigma2.count,
        "mle.p_z_lo": cfg.mle.p_z.lo,
        "mle.p_z_hi": cfg.mle.p_z.hi,
        "mle.p_z_count": cfg.mle.p_z.count,
        "mle.refine_iters": cfg.mle.n_refine_iters,
        "mle.refine_shrink": cfg.mle.refine_shrink,
    }


def _build_config(values: dict[str, object]) -> ScenarioConfig:
    v = values
    try:
        return ScenarioConfig(
            prior=BeliefParams(v["prior.mu1"], v["prior.sigma1"], v["prior.mu2"],
                               v["prior.sigma2"], v["prior.p_z"]),
            theta_true=v["run.theta_true"],
            n_queries=v["run.n_queries"],
            beta_a=v["agent.beta_a"],
            beta_h=v["agent.beta_h"],
            reward_form=v["agent.reward_form"],
            theta_grid=ThetaGrid(v["grid.theta_lo"], v["grid.theta_hi"],
                                 v["grid.theta_points"]),
            query_grid=QueryGrid(v["grid.query_lo"], v["grid.query_hi"],
                                 v["grid.query_points"]),
            seed=v["run.seed"],
            mle=MleSearchConfig(
                mu1=ParamRange(v["mle.mu1_lo"], v["mle.mu1_hi"], v["mle.mu1_count"]),
                mu2=ParamRange(v["mle.mu2_lo"], v["mle.mu2_hi"], v["mle.mu2_count"]),
                sigma1=ParamRange(v["mle.sigma1_lo"], v["mle.sigma1_hi"],
                                  v["mle.sigma1_count"]),
                sigma2=ParamRange(v["mle.sigma2_lo"], v["mle.sigma2_hi"],
                                  v["mle.sigma2_count"]),
                p_z=ParamRange(v["mle.p_z_lo"], v["mle.p_z_hi"], v["mle.p_z_count"]),
                n_refine_iters=v["mle.refine_iters"],
                refine_shrink=v["mle.refine_shrink"],
            ),
            exact_likelihood=v["run.exact_likelihood"],
            selection=v["run.selection"],
        )
    except (ValueError, ConfigError) as exc:
        raise ConfigError(str(exc)) from exc


def default_config() -> ScenarioConfig:
    return ScenarioConfig()


def parse_config_text(text: str, base: ScenarioConfig | None = None,
                      source: str = "<config>") -> ScenarioConfig:
    values = config_values(base if base is not None else ScenarioConfig())
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw_line!r}")
        key, _, raw_value = line.partition("=")
        key = key.strip()
        raw_value = raw_value.strip()
        if key not in _KEY_TABLE:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        conv, check, constraint = _KEY_TABLE[key]
        try:
            value = conv(raw_value)
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: {key}: {exc}") from exc
        if check is not None and not check(value):
            raise ConfigError(f"{source}:{lineno}: {key} {constraint}, got {raw_value}")
        values[key] = value
    return _build_config(values)


def parse_config(path: str | os.PathLike, base: ScenarioConfig | None = None) -> ScenarioConfig:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    return parse_config_text(text, base=base, source=os.fspath(path))


def _format_value(value: object) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def serialize_config(cfg: ScenarioConfig) -> str:
    values = config_values(cfg)
    lines = [f"{key} = {_format_value(values[key])}" for key in sorted(values)]
    return "\n".join(lines) + "\n"
