"""Re-ranking configuration shared by the adaptation, k-reciprocal, and pipeline layers."""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

from .errors import ConfigError

METHODS = ("none", "krnn", "a3r")

# JSON key -> dataclass field ("lambda" is a Python keyword).
_JSON_KEYS = {
    "method": "method",
    "pool": "pool",
    "tol": "tol",
    "max_iter": "max_iter",
    "clamp_nonnegative": "clamp_nonnegative",
    "k1": "k1",
    "k2": "k2",
    "lambda": "lam",
}


@dataclass(frozen=True)
class KrConfig:
    """k-reciprocal parameters: neighborhood size k1, local-expansion size k2,
    and blend weight lam of the original probe distance."""

    k1: int = 20
    k2: int = 6
    lam: float = 0.3

    def validate(self, pool_size: int) -> None:
        if not (1 <= self.k2 <= self.k1):
            raise ConfigError(f"need 1 <= k2 <= k1, got k1={self.k1} k2={self.k2}")
        if self.k1 > pool_size:
            raise ConfigError(f"k1={self.k1} exceeds pool size {pool_size}")
        if not (0.0 <= self.lam <= 1.0):
            raise ConfigError(f"lambda must be in [0, 1], got {self.lam}")

    def clamped(self, pool_size: int) -> "KrConfig":
        """Shrink k1/k2 to fit a small candidate pool."""
        k1 = max(1, min(self.k1, pool_size))
        k2 = max(1, min(self.k2, k1))
        return KrConfig(k1=k1, k2=k2, lam=self.lam)


@dataclass(frozen=True)
class RerankConfig:
    """Full pipeline configuration.

    ``pool`` is the shortlist size over which adaptation and re-ranking run
    (0 means the full gallery).  ``tol`` / ``max_iter`` control the power
    iteration; ``clamp_nonnegative`` zeroes negative query-candidate
    similarities before weighting.
    """

    method: str = "a3r"
    pool: int = 100
    tol: float = 1e-7
    max_iter: int = 1000
    clamp_nonnegative: bool = False
    k1: int = 20
    k2: int = 6
    lam: float = 0.3

    def validate(self) -> None:
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.pool < 0:
            raise ConfigError(f"pool must be >= 0, got {self.pool}")
        if self.tol <= 0:
            raise ConfigError(f"tol must be > 0, got {self.tol}")
        if self.max_iter < 1:
            raise ConfigError(f"max_iter must be >= 1, got {self.max_iter}")
        if self.method in ("krnn", "a3r"):
            if not (1 <= self.k2 <= self.k1):
                raise ConfigError(f"need 1 <= k2 <= k1, got k1={self.k1} k2={self.k2}")
            if not (0.0 <= self.lam <= 1.0):
                raise ConfigError(f"lambda must be in [0, 1], got {self.lam}")

    @property
    def kr(self) -> KrConfig:
        return KrConfig(k1=self.k1, k2=self.k2, lam=self.lam)

    def to_json(self) -> dict:
        return {
            "method": self.method,
            "pool": self.pool,
            "tol": self.tol,
            "max_iter": self.max_iter,
            "clamp_nonnegative": self.clamp_nonnegative,
            "k1": self.k1,
            "k2": self.k2,
            "lambda": self.lam,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "RerankConfig":
        if not isinstance(obj, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(obj) - set(_JSON_KEYS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**{_JSON_KEYS[k]: v for k, v in obj.items()})
        cfg.validate()
        return cfg

    def override(self, **fields) -> "RerankConfig":
        """Apply non-None overrides (flag > file > default precedence)."""
        updates = {k: v for k, v in fields.items() if v is not None}
        return replace(self, **updates)


def load_config(path) -> RerankConfig:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc.msg})") from exc
    return RerankConfig.from_json(obj)
