"""SIR model with an externally supplied vaccination rate."""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ValidationError


@dataclass(frozen=True)
class ModelParams:
    """Rates in 1/week.  ``delta = gamma + mu`` is derived, never stored."""

    beta: float
    gamma: float
    mu: float
    v_nat: float = 0.0

    def __post_init__(self):
        for name in ("beta", "gamma", "mu"):
            val = getattr(self, name)
            if not (math.isfinite(val) and val > 0.0):
                raise ValidationError(f"{name} must be finite and > 0, got {val}")
        if not (math.isfinite(self.v_nat) and self.v_nat >= 0.0):
            raise ValidationError(f"v_nat must be finite and >= 0, got {self.v_nat}")

    @property
    def delta(self):
        return self.gamma + self.mu

    @property
    def S_star(self):
        return self.delta / self.beta

    @property
    def R0(self):
        return r0(self)

    @classmethod
    def from_dict(cls, obj):
        """Build from a mapping with beta, mu, v_nat and exactly one of gamma, delta."""
        if not isinstance(obj, dict):
            raise ValidationError("params must be an object")
        has_g, has_d = "gamma" in obj, "delta" in obj
        if has_g == has_d:
            raise ValidationError("params: give exactly one of 'gamma' or 'delta'")
        try:
            beta = float(obj["beta"])
            mu = float(obj["mu"])
        except KeyError as exc:
            raise ValidationError(f"params: missing field '{exc.args[0]}'") from None
        except (TypeError, ValueError):
            raise ValidationError("params: beta and mu must be numbers") from None
        v_nat = float(obj.get("v_nat", 0.0))
        gamma = float(obj["gamma"]) if has_g else float(obj["delta"]) - mu
        unknown = set(obj) - {"beta", "mu", "v_nat", "gamma", "delta"}
        if unknown:
            raise ValidationError(f"params: unknown field(s) {sorted(unknown)}")
        return cls(beta, gamma, mu, v_nat)

    def to_dict(self):
        return {"beta": self.beta, "gamma": self.gamma, "mu": self.mu, "v_nat": self.v_nat}


@dataclass(frozen=True)
class SirState:
    I: float
    S: float

    @property
    def R(self):
        return 1.0 - self.I - self.S


def r0(p: ModelParams) -> float:
    return p.beta * p.mu / (p.delta * (p.mu + p.v_nat))


def vector_field(x: SirState, v: float, p: ModelParams):
    """(dI/dt, dS/dt) for the given vaccination rate ``v``."""
    I, S = x.I, x.S
    inf = p.beta * I * S
    return inf - p.delta * I, -inf - v * S - p.mu * S + p.mu


def recovered_rate(x: SirState, v: float, p: ModelParams):
    """dR/dt = gamma I + v S - mu R."""
    return p.gamma * x.I + v * x.S - p.mu * x.R


def in_domain(x: SirState) -> bool:
    """Closure of {I > 0, S > 0, S + I <= 1}."""
    return x.I >= 0.0 and x.S >= 0.0 and x.I + x.S <= 1.0
