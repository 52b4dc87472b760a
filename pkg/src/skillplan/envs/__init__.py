"""Deterministic object-centric simulators and demonstration tooling."""

from __future__ import annotations

from skillplan.envs.base import Environment
from skillplan.envs.cover import CoverEnv
from skillplan.envs.stick_button import StickButtonEnv

_ENVS: dict[str, type[Environment]] = {
    "cover": CoverEnv,
    "stick_button": StickButtonEnv,
}

_CACHE: dict[str, Environment] = {}


def get_env(name: str) -> Environment:
    """Look up an environment by name (instances are stateless, so cached)."""
    if name not in _ENVS:
        raise KeyError(f"unknown environment {name!r}; have {sorted(_ENVS)}")
    if name not in _CACHE:
        _CACHE[name] = _ENVS[name]()
    return _CACHE[name]


def env_names() -> list[str]:
    return sorted(_ENVS)
