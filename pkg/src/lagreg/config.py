"""Run configuration files.

A config is a flat TOML document: one ``key = value`` per line with typed
scalars (integers, floats, booleans, quoted strings) and flat lists.
Tables are not allowed.  Unknown keys are errors.  See README for the key
reference.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .estimator import EstimatorConfig, Regime
from .experiments import ORACLE_ORDER, StudyPlan
from .model import CATALOG, DesignDensity, ModelSpec, test_function
from .noise import NoiseKind, NoiseSpec

COMMANDS = ("simulate", "estimate", "risk-study", "variance-study", "noise-check", "basis-check")

_MISSING = object()

# key -> (type, default); _MISSING marks a required key.
_MODEL_KEYS: dict[str, tuple[type, Any]] = {
    "f": (str, _MISSING),
    "b": (float, 1.0),
    "sigma": (float, 0.5),
    "design": (str, "uniform"),
    "design_rate": (float, 0.0),
    "noise": (str, "iid"),
    "alpha1": (float, 1.0),
    "alpha2": (float, 1.0),
    "seed": (int, 0),
}
_ESTIMATOR_KEYS: dict[str, tuple[type, Any]] = {
    "regime": (str, None),
    "gamma": (float, 1.0),
    "gamma1": (float, None),
    "gamma2": (float, None),
    "m_cap": (int, 1024),
    "clamp_nonnegative": (bool, False),
    "grid_order": (int, 256),
}
_STUDY_KEYS: dict[str, tuple[type, Any]] = {
    "n_grid": (list, _MISSING),
    "replications": (int, 100),
    "smoothness": (float, None),
    "oracle_order": (int, ORACLE_ORDER),
    "noiseless": (bool, False),
}
_KEYS: dict[str, dict[str, tuple[type, Any]]] = {
    "simulate": {**_MODEL_KEYS, "n": (int, _MISSING)},
    "estimate": {**_MODEL_KEYS, **_ESTIMATOR_KEYS, "n": (int, _MISSING), "oracle_order": (int, ORACLE_ORDER)},
    "risk-study": {**_MODEL_KEYS, **_ESTIMATOR_KEYS, **_STUDY_KEYS, "gamma_sweep": (list, [])},
    "variance-study": {**_MODEL_KEYS, **_ESTIMATOR_KEYS, **_STUDY_KEYS, "coefficient": (int, 0)},
    "noise-check": {
        "alphas": (list, [0.3, 0.4, 0.7]),
        "n": (int, 4096),
        "paths": (int, 200),
        "max_lag": (int, 100),
        "seed": (int, 0),
    },
    "basis-check": {
        "k_gram": (int, 30),
        "b_gram": (float, 200.0),
        "order": (int, 1024),
        "k_bound": (int, 2**14),
        "t_max": (float, 50.0),
        "points": (int, 1000),
    },
}


class ConfigError(ValueError):
    def __init__(self, message: str, key: str | None = None, line: int | None = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key '{key}'")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)
        self.key = key
        self.line = line


@dataclass(frozen=True)
class RunSettings:
    """A validated config with every default filled in."""

    command: str
    values: dict[str, Any]
    model: ModelSpec | None = None
    cfg: EstimatorConfig | None = None
    plan: StudyPlan | None = None


def _line_of(text: str, key: str) -> int | None:
    pattern = re.compile(rf"^\s*{re.escape(key)}\s*=")
    for i, line in enumerate(text.splitlines(), start=1):
        if pattern.match(line):
            return i
    return None


def _coerce(key: str, value: Any, kind: type, where) -> Any:
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"expected a number, got {value!r}", *where)
        value = float(value)
        if not math.isfinite(value):
            raise ConfigError("must be finite", *where)
        return value
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"expected an integer, got {value!r}", *where)
        return value
    if kind is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"expected true or false, got {value!r}", *where)
        return value
    if kind is str:
        if not isinstance(value, str):
            raise ConfigError(f"expected a string, got {value!r}", *where)
        return value
    if kind is list:
        if not isinstance(value, list):
            raise ConfigError(f"expected a list, got {value!r}", *where)
        return value
    raise AssertionError(kind)


def load_values(text: str, command: str, seed_override: int | None = None) -> dict[str, Any]:
    """Parse ``text`` and return the resolved key/value mapping for ``command``."""
    if command not in _KEYS:
        raise ConfigError(f"unknown command {command!r}; expected one of {COMMANDS}")
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    schema = _KEYS[command]
    values: dict[str, Any] = {}
    for key, value in raw.items():
        where = (key, _line_of(text, key))
        if isinstance(value, dict):
            raise ConfigError("tables are not supported; use flat key = value lines", *where)
        if key not in schema:
            raise ConfigError(f"unknown key for {command}; allowed: {sorted(schema)}", *where)
        values[key] = _coerce(key, value, schema[key][0], where)
    for key, (_, default) in schema.items():
        if key not in values:
            if default is _MISSING:
                raise ConfigError("missing required key", key)
            values[key] = default
    if seed_override is not None and "seed" in values:
        values["seed"] = int(seed_override)
    return {key: values[key] for key in schema}


def _check(condition: bool, message: str, key: str, text: str) -> None:
    if not condition:
        raise ConfigError(message, key, _line_of(text, key))


def _build_model(values: dict, text: str, n: int) -> ModelSpec:
    _check(values["f"] in CATALOG, f"unknown test function; catalog: {sorted(CATALOG)}", "f", text)
    _check(values["b"] > 0, "b must be positive", "b", text)
    _check(values["sigma"] >= 0, "sigma must be nonnegative", "sigma", text)
    _check(0 <= values["seed"] < 2**64, "seed must be a 64-bit unsigned integer", "seed", text)
    _check(values["noise"] in ("iid", "lm"), "noise must be 'iid' or 'lm'", "noise", text)
    for key in ("alpha1", "alpha2"):
        _check(0 < values[key] <= 1, f"{key} must lie in (0,1]", key, text)

    fn = test_function(values["f"])
    grid = np.linspace(0.0, values["b"], 10001)
    _check(
        bool(np.all(fn(grid, values["b"]) <= fn.m2 + 1e-12)),
        f"f exceeds its declared upper bound M_2={fn.m2} on [0, b]", "f", text,
    )
    g = DesignDensity(values["design"], values["design_rate"])
    try:
        g.validate(values["b"])
    except ValueError as exc:
        key = "design" if values["design"] not in ("uniform", "truncexp") else "design_rate"
        raise ConfigError(str(exc), key, _line_of(text, key)) from None
    noise = NoiseSpec(NoiseKind(values["noise"]), values["alpha1"], values["alpha2"], values["seed"])
    return ModelSpec(values["f"], g, values["sigma"], values["b"], n, noise)


def _build_cfg(values: dict, text: str) -> EstimatorConfig:
    if values["regime"] is None:
        values["regime"] = values["noise"]
    _check(values["regime"] in ("iid", "lm"), "regime must be 'iid' or 'lm'", "regime", text)
    for key in ("gamma", "gamma1", "gamma2"):
        if values[key] is not None:
            _check(values[key] > 0, f"{key} must be positive", key, text)
    _check(values["m_cap"] >= 1, "m_cap must be positive", "m_cap", text)
    _check(values["grid_order"] >= 2, "grid_order must be >= 2", "grid_order", text)
    return EstimatorConfig(
        regime=Regime(values["regime"]),
        gamma=values["gamma"],
        sigma=values["sigma"],
        alpha1=values["alpha1"],
        alpha2=values["alpha2"],
        m_cap=values["m_cap"],
        clamp_nonnegative=values["clamp_nonnegative"],
        gamma1=values["gamma1"],
        gamma2=values["gamma2"],
        grid_order=values["grid_order"],
    )


def parse_text(text: str, command: str, seed_override: int | None = None) -> RunSettings:
    values = load_values(text, command, seed_override)

    if command == "noise-check":
        alphas = values["alphas"]
        _check(all(isinstance(a, (int, float)) and not isinstance(a, bool) and 0 < a <= 1 for a in alphas),
               "every alpha must lie in (0,1]", "alphas", text)
        values["alphas"] = [float(a) for a in alphas]
        _check(values["n"] >= 2, "n must be >= 2", "n", text)
        _check(values["paths"] >= 2, "paths must be >= 2", "paths", text)
        _check(0 <= values["max_lag"] < values["n"], "max_lag must lie in [0, n)", "max_lag", text)
        return RunSettings(command, values)
    if command == "basis-check":
        _check(values["b_gram"] > 0, "b_gram must be positive", "b_gram", text)
        _check(values["order"] >= 2, "order must be >= 2", "order", text)
        return RunSettings(command, values)

    if command in ("simulate", "estimate"):
        _check(values["n"] >= 2, "n must be >= 2", "n", text)
        model = _build_model(values, text, values["n"])
        cfg = _build_cfg(values, text) if command == "estimate" else None
        return RunSettings(command, values, model, cfg)

    n_grid = values["n_grid"]
    _check(all(isinstance(n, int) and not isinstance(n, bool) for n in n_grid),
           "n_grid entries must be integers", "n_grid", text)
    _check(len(n_grid) >= 3, "n_grid needs at least 3 sample sizes for a slope fit", "n_grid", text)
    _check(all(b > a for a, b in zip(n_grid, n_grid[1:])), "n_grid must be strictly increasing", "n_grid", text)
    _check(n_grid[0] >= 64, "n_grid entries must be >= 64", "n_grid", text)
    _check(values["replications"] >= 30, "replications must be >= 30", "replications", text)
    model = _build_model(values, text, n_grid[0])
    cfg = _build_cfg(values, text)
    if values["smoothness"] is None:
        values["smoothness"] = model.function.smoothness
    if command == "risk-study":
        sweep = values["gamma_sweep"]
        _check(all(isinstance(g, (int, float)) and not isinstance(g, bool) and g > 0 for g in sweep),
               "gamma_sweep entries must be positive numbers", "gamma_sweep", text)
        values["gamma_sweep"] = [float(g) for g in sweep]
    if command == "variance-study":
        _check(values["coefficient"] >= 0, "coefficient must be nonnegative", "coefficient", text)
    plan = StudyPlan(
        model, cfg, tuple(n_grid), values["replications"], values["seed"],
        values["smoothness"], values["oracle_order"], values["noiseless"],
    )
    return RunSettings(command, values, model, cfg, plan)


def parse_config(path, command: str, seed_override: int | None = None) -> RunSettings:
    """Read and validate the config file at ``path`` for ``command``."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from None
    return parse_text(text, command, seed_override)
