"""Staircase memory of the continuous Preisach operator.

The ON region of the relay plane is determined by the alternating sequence of
dominant input extrema.  It is stored as the dominant maxima (decreasing), the
dominant minima (increasing) and the current input.  Along the a2 axis the
ON region is a set of pieces ``lo < a2 <= hi`` on which a relay is ON iff
``a1 < min(cap, a2)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .._backend import kernels
from ..errors import DomainError, ValidationError
from .relay import RelayBank

TREND_TOL = 1e-14
TRENDS = ("rising", "falling", "flat")


@dataclass
class MemoryStaircase:
    maxima: list = field(default_factory=list)
    minima: list = field(default_factory=list)
    current: float = 0.0
    trend: str = "flat"

    def __post_init__(self):
        self.maxima = [float(x) for x in self.maxima]
        self.minima = [float(x) for x in self.minima]
        self.current = float(self.current)
        self.validate()

    @property
    def falling(self):
        return len(self.maxima) == len(self.minima) + 1

    def validate(self):
        M, m, x = self.maxima, self.minima, self.current
        if self.trend not in TRENDS:
            raise ValidationError(f"trend must be one of {TRENDS}")
        if len(M) - len(m) not in (0, 1):
            raise ValidationError("need len(maxima) - len(minima) in {0, 1}")
        if self.trend == "rising" and len(M) != len(m):
            raise ValidationError("a rising staircase has as many maxima as minima")
        if self.trend == "falling" and len(M) != len(m) + 1:
            raise ValidationError("a falling staircase has one more maximum than minima")
        if not 0.0 <= x <= 1.0:
            raise ValidationError("current input outside [0, 1]")
        # interleaved history M1 > ... , m1 < M2, M2 < M1, m1 < m2, ...
        seq = []
        for k in range(len(M)):
            seq.append(M[k])
            if k < len(m):
                seq.append(m[k])
        for k, val in enumerate(seq):
            if not 0.0 <= val <= 1.0:
                raise ValidationError("extrema outside [0, 1]")
        for k in range(1, len(M)):
            if not M[k] < M[k - 1]:
                raise ValidationError("maxima must be strictly decreasing")
        for k in range(1, len(m)):
            if not m[k] > m[k - 1]:
                raise ValidationError("minima must be strictly increasing")
        for k in range(len(m)):
            if not m[k] < M[k]:
                raise ValidationError("each minimum must lie below the preceding maximum")
            if k + 1 < len(M) and not m[k] < M[k + 1]:
                raise ValidationError("each maximum must lie above the preceding minimum")
        lo = m[-1] if m else 0.0
        hi = M[-1] if M else 1.0
        if not lo <= x <= hi:
            raise ValidationError(
                f"current input {x} not between the last dominant extrema [{lo}, {hi}]")

    # --- construction ----------------------------------------------------

    @classmethod
    def virgin(cls, I0):
        """Memory after the input rose monotonically from 0 to ``I0``."""
        if not 0.0 <= I0 <= 1.0:
            raise DomainError("I0 outside [0, 1]")
        return cls([], [], I0, "flat")

    def copy(self):
        out = MemoryStaircase.__new__(MemoryStaircase)
        out.maxima = list(self.maxima)
        out.minima = list(self.minima)
        out.current = self.current
        out.trend = self.trend
        return out

    # --- dynamics --------------------------------------------------------

    def buffers(self):
        """Flat kernel buffers (M, p, m, r, cur, falling) with one spare slot."""
        p, r = len(self.maxima), len(self.minima)
        M = np.zeros(p + 2)
        m = np.zeros(r + 2)
        M[:p] = self.maxima
        m[:r] = self.minima
        return M, p, m, r, self.current, self.falling

    def update(self, x):
        """In-place monotone move of the input to ``x`` (wiping-out applied)."""
        if not 0.0 <= x <= 1.0:
            raise DomainError(f"input {x} outside [0, 1]")
        M, p, m, r, cur, falling = self.buffers()
        old = self.current
        p, r, cur, falling = kernels.sweep(M, p, m, r, cur, falling, float(x))
        self.maxima = M[:p].tolist()
        self.minima = m[:r].tolist()
        self.current = float(cur)
        if x > old + TREND_TOL:
            self.trend = "rising"
        elif x < old - TREND_TOL:
            self.trend = "falling"
        return self

    def updated(self, x):
        return self.copy().update(x)

    # --- geometry --------------------------------------------------------

    def pieces(self):
        """List of (lo, hi, cap) describing the ON region along the a2 axis."""
        M, m, cur = self.maxima, self.minima, self.current
        out = []
        if self.falling:
            p = len(M)
            for j in range(p):
                lo = M[j + 1] if j + 1 < p else 0.0
                cap = m[j] if j < len(m) else cur
                out.append((lo, M[j], cap))
        else:
            p = len(M)
            for j in range(p):
                lo = M[j + 1] if j + 1 < p else cur
                out.append((lo, M[j], m[j]))
            out.append((0.0, cur, math.inf))
        return [pc for pc in out if pc[1] > pc[0]]

    def is_on(self, a1, a2):
        """Relay state at points of the plane (vectorised)."""
        a1 = np.asarray(a1, dtype=float)
        a2 = np.asarray(a2, dtype=float)
        on = np.zeros(np.broadcast(a1, a2).shape, dtype=bool)
        for lo, hi, cap in self.pieces():
            on |= (a2 > lo) & (a2 <= hi) & (a1 < min(cap, 1.0)) & (a1 < a2)
        return on

    # --- serialisation ---------------------------------------------------

    def to_json(self):
        return {"type": "staircase", "maxima": list(self.maxima), "minima": list(self.minima),
                "current": self.current, "trend": self.trend}

    @classmethod
    def from_json(cls, obj):
        try:
            return cls(obj["maxima"], obj["minima"], obj["current"], obj.get("trend", "flat"))
        except KeyError as exc:
            raise ValidationError(f"memory field missing: {exc.args[0]}") from None


def staircase_init(I0, mode="virgin", memory=None):
    """Initial memory compatible with ``I0``.

    ``mode`` is "virgin" or "explicit"; the latter validates ``memory`` and
    checks that its current input equals ``I0``.
    """
    if mode == "virgin":
        return MemoryStaircase.virgin(I0)
    if mode == "explicit":
        if memory is None:
            raise ValidationError("explicit initialisation needs a memory")
        mem = memory.copy()
        mem.validate()
        if abs(mem.current - I0) > TREND_TOL:
            raise ValidationError(f"memory current {mem.current} differs from I0 = {I0}")
        return mem
    raise ValidationError(f"unknown memory mode {mode!r}")


def staircase_update(mem, x):
    """Pure version of :meth:`MemoryStaircase.update`."""
    return mem.updated(x)


def preisach_output(mem, density):
    """Vaccination rate v = v_nat + q-mass of the ON region."""
    if isinstance(mem, RelayBank):
        return density.v_nat + mem.output()
    M, p, m, r, cur, falling = mem.buffers()
    return density.v_nat + kernels.profile_mass(M, p, m, r, cur, falling, *density.kernel_args)


class Branch:
    """Output along the monotone branch leaving a fixed memory state.

    ``Branch(mem, d)(x)`` is the output after a single monotone move from
    ``mem.current`` to ``x`` (in either direction).  Nondecreasing in ``x``.
    """

    def __init__(self, mem, density):
        self.density = density
        self.v_nat = density.v_nat
        if isinstance(mem, RelayBank):
            self._bank = mem
        else:
            self._bank = None
            self._buf = mem.buffers()
            n = max(len(self._buf[0]), len(self._buf[2]))
            self._sM = np.zeros(n)
            self._sm = np.zeros(n)
            self._kargs = density.kernel_args
        self.breakpoints = self._breakpoints(mem)

    @staticmethod
    def _breakpoints(mem):
        # inputs where the branch may have a kink
        if isinstance(mem, RelayBank):
            return sorted(set(mem.a1.tolist()) | set(mem.a2.tolist()) | {mem.current})
        return sorted(set(mem.maxima) | set(mem.minima) | {mem.current})

    def __call__(self, x):
        if np.ndim(x):
            return np.array([self(float(v)) for v in np.ravel(x)]).reshape(np.shape(x))
        x = float(x)
        if self._bank is not None:
            return self.v_nat + self._bank.swept_output(x)
        M, p, m, r, cur, falling = self._buf
        return self.v_nat + kernels.swept_mass(M, p, m, r, cur, falling, x,
                                               self._sM, self._sm, *self._kargs)


def branch_eval(mem, density, x):
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"input {x} outside [0, 1]")
    return Branch(mem, density)(x)


def _cap_at(pieces, a, b):
    # cap of the piece covering (a, b], or None when the interval is OFF
    for lo, hi, cap in pieces:
        if lo <= a and b <= hi:
            return cap
    return None


def state_distance(a, b, density):
    """q-measure of the symmetric difference of two ON regions."""
    if isinstance(a, RelayBank) or isinstance(b, RelayBank):
        if not (isinstance(a, RelayBank) and isinstance(b, RelayBank)):
            raise TypeError("cannot compare a relay bank with a staircase")
        if not (np.array_equal(a.a1, b.a1) and np.array_equal(a.a2, b.a2)
                and np.array_equal(a.w, b.w)):
            raise ValidationError("relay banks have different relays")
        return float(a.w[a.state != b.state].sum())
    pa, pb = a.pieces(), b.pieces()
    cuts = sorted({0.0} | {v for pc in pa + pb for v in pc[:2]})
    total = 0.0
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        ca = _cap_at(pa, lo, hi)
        cb = _cap_at(pb, lo, hi)
        if ca == cb:
            continue
        if ca is None or cb is None:
            total += density.piece(lo, hi, ca if cb is None else cb)
            continue
        lo_cap, hi_cap = min(ca, cb), max(ca, cb)
        total += density.piece(lo, hi, hi_cap) - density.piece(lo, hi, lo_cap)
    return max(total, 0.0)
