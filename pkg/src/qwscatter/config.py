"""Experiment configuration stored as JSON with explicit re/im pairs."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .lattice import BUILTIN_COINS, CoinField

__all__ = ["ConfigError", "DEFAULT_TOLERANCES", "ExperimentConfig", "load_config"]

DEFAULT_TOLERANCES = {
    "unitarity": 1e-10,
    "corridor": 1e-12,
    "residual": 1e-10,
    "agreement": 1e-8,
    "coin_unitarity": 1e-12,
    "det_floor": 1e-10,
}


class ConfigError(ValueError):
    """Malformed configuration (maps to exit code 1 in the CLI)."""


def _encode_matrix(m: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(m)]


def _decode_matrix(rows) -> np.ndarray:
    try:
        a = np.array(rows, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"coin matrix is not numeric: {exc}") from None
    if a.shape != (4, 4, 2):
        raise ConfigError(f"each coin must be 4x4 of [re, im] pairs, got shape {a.shape}")
    return a[..., 0] + 1j * a[..., 1]


@dataclass
class ExperimentConfig:
    """Everything needed to rerun an experiment.

    The coin is either ``builtin`` (a name from :data:`BUILTIN_COINS`) or
    ``matrices``, a list of ``(2n0+1)^2`` 4x4 matrices in lexicographic
    ``(x1, x2)`` order over D. ``thetas`` is an explicit list; ``theta_grid``
    ``N`` means ``2 pi k / N`` for ``k < N``; an explicit list wins.
    """

    n0: int = 1
    builtin: str | None = "example1"
    matrices: list | None = None
    window: int | None = None
    thetas: list | None = None
    theta_grid: int | None = 8
    output_dir: str = "out"
    tolerances: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if not isinstance(self.n0, int) or isinstance(self.n0, bool) or self.n0 < 1:
            raise ConfigError(f"n0 must be a positive integer, got {self.n0!r}")
        if (self.builtin is None) == (self.matrices is None):
            raise ConfigError("specify exactly one of 'builtin' or 'matrices'")
        if self.builtin is not None and self.builtin not in BUILTIN_COINS:
            raise ConfigError(f"unknown builtin coin {self.builtin!r}; choose from {sorted(BUILTIN_COINS)}")
        if self.matrices is not None and len(self.matrices) != (2 * self.n0 + 1) ** 2:
            raise ConfigError(f"expected {(2 * self.n0 + 1) ** 2} coin matrices for n0={self.n0}, "
                              f"got {len(self.matrices)}")
        if self.window is not None and self.window < self.n0 + 2:
            raise ConfigError(f"window {self.window} must be at least n0 + 2 = {self.n0 + 2}")
        if self.thetas is None and (self.theta_grid is None or self.theta_grid < 1):
            raise ConfigError("need 'thetas' or a positive 'theta_grid'")
        unknown = set(self.tolerances) - set(DEFAULT_TOLERANCES)
        if unknown:
            raise ConfigError(f"unknown tolerance keys: {sorted(unknown)}")

    @property
    def L(self) -> int:
        return self.n0 + 20 if self.window is None else self.window

    def theta_values(self) -> list[float]:
        if self.thetas is not None:
            return [float(t) % (2 * math.pi) for t in self.thetas]
        return [2 * math.pi * k / self.theta_grid for k in range(self.theta_grid)]

    def tol(self, key: str) -> float:
        return float(self.tolerances.get(key, DEFAULT_TOLERANCES[key]))

    def coin(self) -> CoinField:
        if self.builtin is not None:
            return CoinField.builtin(self.builtin, self.n0)
        n = 2 * self.n0 + 1
        mats = np.stack([_decode_matrix(m) for m in self.matrices]).reshape(n, n, 4, 4)
        return CoinField(self.n0, mats, name="custom")

    @classmethod
    def from_coin(cls, c: CoinField, **kw) -> "ExperimentConfig":
        mats = [_encode_matrix(m) for m in c.coins.reshape(-1, 4, 4)]
        return cls(n0=c.n0, builtin=None, matrices=mats, **kw)

    def to_dict(self) -> dict:
        return {
            "n0": self.n0, "builtin": self.builtin, "matrices": self.matrices, "window": self.window,
            "thetas": self.thetas, "theta_grid": self.theta_grid, "output_dir": self.output_dir,
            "tolerances": dict(self.tolerances), "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        if not isinstance(d, dict):
            raise ConfigError("configuration must be a JSON object")
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown configuration keys: {sorted(extra)}")
        d = dict(d)
        if "matrices" in d and d["matrices"] is not None and "builtin" not in d:
            d["builtin"] = None
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}") from None
        return cls.from_dict(d)


def load_config(path) -> ExperimentConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {p}: {exc.strerror}") from None
    return ExperimentConfig.from_json(text)
