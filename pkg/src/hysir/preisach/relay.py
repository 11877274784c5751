"""Non-ideal relays and finite relay banks."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .._backend import kernels
from ..errors import DomainError, ValidationError

OFF = 0
ON = 1


@dataclass(frozen=True)
class Thresholds:
    """Switch-off level ``a1`` and switch-on level ``a2`` with 0 <= a1 < a2 <= 1."""

    a1: float
    a2: float

    def __post_init__(self):
        if not (0.0 <= self.a1 < self.a2 <= 1.0):
            raise DomainError(f"thresholds ({self.a1}, {self.a2}) outside 0 <= a1 < a2 <= 1")


def relay_step(th: Thresholds, state: int, x: float) -> int:
    """Relay state after the input moves (monotonically) to ``x``.

    Thresholds are closed: ``x >= a2`` switches on, ``x <= a1`` switches off.
    """
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"relay input {x} outside [0, 1]")
    if x >= th.a2:
        return ON
    if x <= th.a1:
        return OFF
    return state


class RelayBank:
    """Finite weighted family of relays driven by a common input.

    State is a uint8 array; ``current`` is the last committed input.
    """

    def __init__(self, a1, a2, w, state, current):
        self.a1 = np.ascontiguousarray(a1, dtype=float)
        self.a2 = np.ascontiguousarray(a2, dtype=float)
        self.w = np.ascontiguousarray(w, dtype=float)
        self.state = np.ascontiguousarray(state, dtype=np.uint8)
        self.current = float(current)
        self.validate()

    @classmethod
    def from_relays(cls, relays, current):
        """``relays`` is an iterable of (Thresholds, weight, state)."""
        relays = list(relays)
        a1 = [t.a1 for t, _, _ in relays]
        a2 = [t.a2 for t, _, _ in relays]
        return cls(a1, a2, [w for _, w, _ in relays], [s for _, _, s in relays], current)

    def validate(self):
        n = self.a1.shape[0]
        if not (self.a2.shape == (n,) and self.w.shape == (n,) and self.state.shape == (n,)):
            raise ValidationError("relay bank arrays have inconsistent shapes")
        if n and not (np.all(self.a1 >= 0.0) and np.all(self.a1 < self.a2) and np.all(self.a2 <= 1.0)):
            raise ValidationError("relay thresholds outside 0 <= a1 < a2 <= 1")
        if n and not np.all(self.w >= 0.0):
            raise ValidationError("relay weights must be >= 0")
        if np.any(self.state > 1):
            raise ValidationError("relay states must be 0 or 1")
        if not 0.0 <= self.current <= 1.0:
            raise ValidationError("current input outside [0, 1]")
        x = self.current
        if np.any((x >= self.a2) & (self.state == 0)) or np.any((x <= self.a1) & (self.state == 1)):
            raise ValidationError("relay states incompatible with the current input")

    def __len__(self):
        return self.a1.shape[0]

    def copy(self):
        return RelayBank(self.a1, self.a2, self.w, self.state.copy(), self.current)

    def output(self):
        """Weighted sum of ON relays (excluding any baseline rate)."""
        return float(self.w[self.state != 0].sum())

    def update(self, x):
        """Commit a move of the input to ``x`` in place; returns the number of switches."""
        if not 0.0 <= x <= 1.0:
            raise DomainError(f"input {x} outside [0, 1]")
        n = kernels.bank_apply(self.a1, self.a2, self.state, float(x))
        self.current = float(x)
        return n

    def swept_output(self, x):
        """Output after a virtual move to ``x`` without touching the state."""
        return kernels.bank_swept_mass(self.a1, self.a2, self.w, self.state, float(x))

    def to_json(self):
        return {
            "type": "relay_bank",
            "current": self.current,
            "relays": [[float(a), float(b), float(c), int(s)]
                       for a, b, c, s in zip(self.a1, self.a2, self.w, self.state)],
        }

    @classmethod
    def from_json(cls, obj):
        rel = np.array(obj.get("relays", []), dtype=float).reshape(-1, 4)
        return cls(rel[:, 0], rel[:, 1], rel[:, 2], rel[:, 3].astype(np.uint8), obj["current"])

    def __eq__(self, other):
        if not isinstance(other, RelayBank):
            return NotImplemented
        return (self.current == other.current and np.array_equal(self.a1, other.a1)
                and np.array_equal(self.a2, other.a2) and np.array_equal(self.w, other.w)
                and np.array_equal(self.state, other.state))

    def __repr__(self):
        return f"RelayBank(n={len(self)}, on={int(self.state.sum())}, current={self.current!r})"
