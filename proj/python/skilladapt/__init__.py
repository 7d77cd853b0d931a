"""Python bindings for the skilladapt skill-adaptation core.

Numeric objects (models, time profiles, tanks, coverage) are native classes.
Engine services and tool calls take and return plain dicts.
"""

from __future__ import annotations

import json
import os
from typing import Any

from . import _core
from ._core import (
    EnergyTankBank,
    ErgodicController,
    Error,
    KmpModel,
    TimeProfile,
    dtw_align,
    fit_model,
    record_demonstration,
    repulsion_via_points,
)

__all__ = [
    "Engine",
    "EnergyTankBank",
    "ErgodicController",
    "Error",
    "KmpModel",
    "TimeProfile",
    "dtw_align",
    "envelope_roundtrip",
    "fit_model",
    "mock_respond",
    "record_demonstration",
    "repulsion_via_points",
    "run_scenario",
    "tool_schemas",
    "validate_tool_call",
]


class Engine:
    """Single-threaded engine exposing the bridge services as ``call``."""

    def __init__(self, config: dict[str, Any] | None = None, base_dir: str | os.PathLike = "."):
        self._engine = _core._Engine(json.dumps(config or {}), os.fspath(base_dir))

    def call(self, service: str, payload: dict[str, Any] | None = None) -> Any:
        return json.loads(self._engine.call(service, json.dumps(payload or {})))

    def tick(self, steps: int = 1) -> None:
        self._engine.tick(steps)

    @property
    def active(self) -> bool:
        return self._engine.active()

    def status(self) -> dict[str, Any]:
        return json.loads(self._engine.status())


def tool_schemas() -> list[dict[str, Any]]:
    return json.loads(_core._tool_schemas())


def validate_tool_call(tool: str, args: dict[str, Any]) -> tuple[bool, str]:
    return _core._validate_tool_call(tool, json.dumps(args))


def mock_respond(request: dict[str, Any]) -> dict[str, Any]:
    """Chat-completions style response from the deterministic mock backend."""
    return json.loads(_core._mock_respond(json.dumps(request)))


def envelope_roundtrip(text: str) -> str:
    return _core._envelope_roundtrip(text)


def run_scenario(path: str | os.PathLike, seed: int | None = None, out_dir: str | os.PathLike = ".") -> tuple[int, str]:
    code, message, _log = _core._run_scenario(os.fspath(path), seed, os.fspath(out_dir))
    return code, message
