"""JSON system definitions built on the expression language.

Schema (all expressions are strings in the grammar of :mod:`holomenta.exprlang`)::

    {
      "name": "particle",
      "coordinates": ["x", "y", "z"],
      "metric": [["1", "0", "0"], ...],          # n x n
      "potential": "0",                           # optional
      "distribution": [["0", "1", "0"], ...],     # r rows of n entries, frame of D
      "vertical_complement": [["0", "0", "1"]],   # n - r rows, frame of W
      "action_generators": [["1", "0", "0"], ...],# s rows, generators of the action
      "sample_points": [[0.0, 1.0, 0.0], ...],    # optional
      "chart_box": [[-1, 1], ...],                # optional, per coordinate
      "params": {"R": 1.0}                        # optional, substituted into expressions
    }
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from . import exprlang
from .mechanics import MechanicalSystem
from .symmetry import LieAlgebraAction


class ConfigError(ValueError):
    pass


@dataclass
class SystemConfig:
    name: str
    coordinates: list[str]
    metric: list[list[str]]
    distribution: list[list[str]]
    vertical_complement: list[list[str]]
    action_generators: list[list[str]]
    potential: str = "0"
    sample_points: list[list[float]] | None = None
    chart_box: list[list[float]] | None = None
    params: dict[str, float] = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "SystemConfig":
        required = ("name", "coordinates", "metric", "distribution", "vertical_complement", "action_generators")
        missing = [k for k in required if k not in data]
        if missing:
            raise ConfigError(f"missing fields: {', '.join(missing)}")
        known = set(required) | {"potential", "sample_points", "chart_box", "params"}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown fields: {', '.join(sorted(unknown))}")
        cfg = cls(
            name=str(data["name"]),
            coordinates=[str(c) for c in data["coordinates"]],
            metric=_str_matrix(data["metric"], "metric"),
            distribution=_str_matrix(data["distribution"], "distribution"),
            vertical_complement=_str_matrix(data["vertical_complement"], "vertical_complement"),
            action_generators=_str_matrix(data["action_generators"], "action_generators"),
            potential=str(data.get("potential", "0")),
            sample_points=data.get("sample_points"),
            chart_box=data.get("chart_box"),
            params={str(k): float(v) for k, v in data.get("params", {}).items()},
        )
        cfg.check_shapes()
        return cfg

    @classmethod
    def load(cls, path: str | Path) -> "SystemConfig":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(data)

    def check_shapes(self) -> None:
        n = len(self.coordinates)
        if n == 0 or len(set(self.coordinates)) != n:
            raise ConfigError("coordinates must be nonempty and distinct")
        if len(self.metric) != n or any(len(row) != n for row in self.metric):
            raise ConfigError(f"metric must be {n} x {n}")
        r = len(self.distribution)
        for key, rows in (
            ("distribution", self.distribution),
            ("vertical_complement", self.vertical_complement),
            ("action_generators", self.action_generators),
        ):
            if any(len(row) != n for row in rows):
                raise ConfigError(f"every {key} row needs {n} entries")
        if len(self.vertical_complement) != n - r:
            raise ConfigError(f"vertical_complement needs {n - r} rows")
        if self.sample_points is not None and any(len(p) != n for p in self.sample_points):
            raise ConfigError(f"sample_points entries must have length {n}")
        if self.chart_box is not None:
            if len(self.chart_box) != n or any(len(b) != 2 or not b[0] < b[1] for b in self.chart_box):
                raise ConfigError(f"chart_box must hold {n} [low, high] pairs with low < high")

    def build(self) -> tuple[MechanicalSystem, LieAlgebraAction]:
        names = list(self.coordinates)
        n, r = len(names), len(self.distribution)
        try:
            metric = _compile_matrix(self.metric, names, self.params)
            frame = _compile_matrix(self.distribution, names, self.params)
            comp = _compile_matrix(self.vertical_complement, names, self.params)
            gens = _compile_matrix(self.action_generators, names, self.params)
            pot = _compile_matrix([[self.potential]], names, self.params)
        except exprlang.ParseError as exc:
            raise ConfigError(str(exc)) from exc
        s = len(self.action_generators)
        system = MechanicalSystem(
            coord_names=tuple(names),
            metric=lambda q: metric(q).reshape(n, n),
            d_basis=lambda q: frame(q).reshape(r, n).T,
            w_basis=lambda q: comp(q).reshape(n - r, n).T,
            r=r,
            potential=lambda q: float(pot(q)[0]),
            name=self.name,
        )
        action = LieAlgebraAction(s, lambda q: gens(q).reshape(s, n).T)
        return system, action


def _str_matrix(rows: Any, key: str) -> list[list[str]]:
    if not isinstance(rows, Sequence) or isinstance(rows, str):
        raise ConfigError(f"{key} must be a list of rows")
    out = []
    for row in rows:
        if not isinstance(row, Sequence) or isinstance(row, str):
            raise ConfigError(f"{key} rows must be lists")
        out.append([str(x) for x in row])
    return out


def _compile_matrix(rows: Sequence[Sequence[str]], names: Sequence[str], params: Mapping[str, float]):
    exprs = []
    for row in rows:
        for src in row:
            e = exprlang.substitute(exprlang.parse(src), params)
            unbound = e.variables() - set(names)
            if unbound:
                raise ConfigError(f"expression {src!r} uses unknown names: {', '.join(sorted(unbound))}")
            exprs.append(e)
    fn = exprlang.compile_vector(exprs, names)
    return lambda q: fn(np.asarray(q, dtype=float))
