"""Scenario files: a JSON object naming a space, a state and the tests to run.

Example::

    {
      "space": {"sector": 100},
      "state": {"type": "relative_phase", "N": 100, "p": 0},
      "tests": {"max_power": 2}
    }

``space`` is optional and is either ``{"n_max": M}`` or ``{"sector": N}``.
State types: fock, noon, relative_phase, coherent_product, css, twisted,
separable, dephased.  Complex numbers are written as a number, ``[re, im]``
or ``{"re": .., "im": ..}``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, UsageError
from .fock import FockSpace, SingleModeDensity, State, build_space, sector_space
from .states import (
    SeparableEnsemble,
    SSRMode,
    assemble_separable,
    coherent_product,
    css_state,
    fock_state,
    noon_state,
    one_axis_twist,
    relative_phase_state,
    required_n_max,
    ssr_dephase_global,
    ssr_dephase_local,
)
from .witnesses import ALL_TESTS, ReportConfig

STATE_TYPES = (
    "fock",
    "noon",
    "relative_phase",
    "coherent_product",
    "css",
    "twisted",
    "separable",
    "dephased",
)


class ScenarioError(UsageError):
    """Malformed scenario file or field."""


def _require(d: dict, key: str, where: str):
    if not isinstance(d, dict):
        raise ScenarioError(f"{where} must be an object")
    if key not in d:
        raise ScenarioError(f"{where} is missing '{key}'")
    return d[key]


def _int(d: dict, key: str, where: str, default=None) -> int:
    value = d.get(key, default) if default is not None else _require(d, key, where)
    if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
        raise ScenarioError(f"{where}.{key} must be an integer, got {value!r}")
    return int(value)


def _float(d: dict, key: str, where: str, default=None) -> float:
    value = d.get(key, default) if default is not None else _require(d, key, where)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(f"{where}.{key} must be a number, got {value!r}")
    return float(value)


def parse_complex(value, where: str = "value") -> complex:
    if isinstance(value, bool):
        raise ScenarioError(f"{where} must be a complex number")
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2:
        re, im = value
    elif isinstance(value, dict) and set(value) <= {"re", "im"}:
        re, im = value.get("re", 0.0), value.get("im", 0.0)
    else:
        raise ScenarioError(f"{where} must be a number, [re, im] or {{re, im}}, got {value!r}")
    if not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in (re, im)):
        raise ScenarioError(f"{where} has non-numeric parts")
    return complex(re, im)


def _factor(spec, where: str) -> SingleModeDensity:
    if not isinstance(spec, dict) or len(spec) != 1:
        raise ScenarioError(f"{where} must be one of {{probabilities | amplitudes | matrix}}")
    (kind, data), = spec.items()
    if not isinstance(data, list) or not data:
        raise ScenarioError(f"{where}.{kind} must be a non-empty list")
    if kind == "probabilities":
        probs = np.array([_float({"p": p}, "p", where) for p in data])
        return SingleModeDensity.from_probabilities(probs)
    if kind == "amplitudes":
        return SingleModeDensity.from_amplitudes([parse_complex(a, where) for a in data])
    if kind == "matrix":
        rows = [[parse_complex(x, where) for x in row] for row in data]
        return SingleModeDensity(np.array(rows))
    raise ScenarioError(f"{where}: unknown factor kind {kind!r}")


def _fixed_n(spec: dict) -> int | None:
    """Total boson number of fixed-N state specs, None otherwise."""
    kind = spec.get("type")
    if kind == "fock":
        return _int(spec, "n_a", "state") + _int(spec, "n_b", "state")
    if kind in ("noon", "relative_phase", "css"):
        return _int(spec, "N", "state")
    if kind == "twisted":
        return _fixed_n(spec.get("base", {**spec, "type": "css"}))
    if kind == "dephased":
        return _fixed_n(_require(spec, "state", "state"))
    return None


def _default_space(spec: dict) -> FockSpace:
    kind = spec.get("type")
    n = _fixed_n(spec)
    if n is not None:
        return sector_space(n)
    if kind == "coherent_product":
        alpha = parse_complex(_require(spec, "alpha", "state"), "state.alpha")
        beta = parse_complex(_require(spec, "beta", "state"), "state.beta")
        return build_space(required_n_max(abs(alpha) ** 2 + abs(beta) ** 2))
    if kind == "separable":
        terms = _require(spec, "terms", "state")
        if not isinstance(terms, list) or not terms:
            raise ScenarioError("state.terms must be a non-empty list")
        top = 0
        for i, term in enumerate(terms):
            where = f"state.terms[{i}]"
            a = _factor(_require(term, "a", where), f"{where}.a")
            b = _factor(_require(term, "b", where), f"{where}.b")
            top = max(top, a.max_occupation + b.max_occupation)
        return build_space(top)
    if kind == "dephased":
        return _default_space(_require(spec, "state", "state"))
    raise ScenarioError(f"unknown state type {kind!r}; expected one of {STATE_TYPES}")


def build_state(spec: dict, space: FockSpace) -> State:
    where = "state"
    kind = _require(spec, "type", where)
    if kind == "fock":
        return fock_state(space, _int(spec, "n_a", where), _int(spec, "n_b", where))
    if kind == "noon":
        return noon_state(space, _int(spec, "N", where))
    if kind == "relative_phase":
        return relative_phase_state(_int(spec, "N", where), _int(spec, "p", where, 0), space)
    if kind == "css":
        return css_state(
            _int(spec, "N", where), _float(spec, "theta", where), _float(spec, "phi", where, 0.0), space
        )
    if kind == "twisted":
        base_spec = spec.get("base", {**spec, "type": "css"})
        base = build_state(base_spec, space)
        return one_axis_twist(base, _float(spec, "chi_t", where))
    if kind == "coherent_product":
        alpha = parse_complex(_require(spec, "alpha", where), "state.alpha")
        beta = parse_complex(_require(spec, "beta", where), "state.beta")
        return coherent_product(space, alpha, beta)
    if kind == "separable":
        terms = _require(spec, "terms", where)
        if not isinstance(terms, list) or not terms:
            raise ScenarioError("state.terms must be a non-empty list")
        parsed = []
        for i, term in enumerate(terms):
            w = _float(term, "weight", f"state.terms[{i}]")
            parsed.append(
                (
                    w,
                    _factor(_require(term, "a", f"state.terms[{i}]"), f"state.terms[{i}].a"),
                    _factor(_require(term, "b", f"state.terms[{i}]"), f"state.terms[{i}].b"),
                )
            )
        mode = SSRMode.parse(spec.get("ssr_mode", "local_ssr"))
        return assemble_separable(SeparableEnsemble(tuple(parsed), mode), space)
    if kind == "dephased":
        inner = build_state(_require(spec, "state", where), space)
        which = spec.get("map", "local")
        if which == "local":
            return ssr_dephase_local(inner)
        if which == "global":
            return ssr_dephase_global(inner)
        raise ScenarioError(f"state.map must be 'local' or 'global', got {which!r}")
    raise ScenarioError(f"unknown state type {kind!r}; expected one of {STATE_TYPES}")


@dataclass
class Scenario:
    raw: dict
    space: FockSpace
    state_spec: dict
    config: ReportConfig
    seed: int = 0

    def build(self) -> State:
        return build_state(self.state_spec, self.space)


def parse_scenario(raw, n_max: int | None = None, max_power: int | None = None) -> Scenario:
    if not isinstance(raw, dict):
        raise ScenarioError("scenario must be a JSON object")
    unknown = set(raw) - {"space", "state", "tests", "seed", "name"}
    if unknown:
        raise ScenarioError(f"unknown scenario keys: {sorted(unknown)}")
    state_spec = _require(raw, "state", "scenario")
    if not isinstance(state_spec, dict):
        raise ScenarioError("scenario.state must be an object")
    space_spec = raw.get("space")
    try:
        if n_max is not None:
            space = build_space(n_max)
        elif space_spec is None:
            space = _default_space(state_spec)
        elif isinstance(space_spec, dict) and set(space_spec) == {"n_max"}:
            space = build_space(_int(space_spec, "n_max", "space"))
        elif isinstance(space_spec, dict) and set(space_spec) == {"sector"}:
            space = sector_space(_int(space_spec, "sector", "space"))
        else:
            raise ScenarioError("space must be {\"n_max\": M} or {\"sector\": N}")
    except ConfigurationError as exc:
        raise ScenarioError(str(exc)) from exc
    tests = raw.get("tests", {})
    if not isinstance(tests, dict):
        raise ScenarioError("scenario.tests must be an object")
    enabled = tests.get("enabled", list(ALL_TESTS))
    config = ReportConfig(
        enabled=tuple(enabled),
        max_power=max_power if max_power is not None else _int(tests, "max_power", "tests", 2),
        tolerance=_float(tests, "tolerance", "tests", 1e-10),
    )
    seed = _int(raw, "seed", "scenario", 0)
    return Scenario(raw, space, state_spec, config, seed)


def load_scenario(path, n_max: int | None = None, max_power: int | None = None) -> Scenario:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario {path}: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"scenario {path} is not valid JSON: {exc}") from exc
    return parse_scenario(raw, n_max, max_power)
