"""Relay weight densities on the Preisach triangle {0 <= a1 < a2 <= 1}."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np
from scipy import integrate

from .._backend import kernels
from ..errors import DomainError, ValidationError

KIND_CODES = {"uniform": 0, "gaussian": 1, "discrete": 2}

_EMPTY = np.zeros(0)
_NO_ATOMS = np.zeros((0, 3))


@dataclass(frozen=True)
class Density:
    """Weight measure q of the relays plus the baseline rate ``v_nat``.

    Use the constructors :func:`gaussian_density`, :func:`uniform_density`
    and :func:`discrete_density` rather than building this directly.
    """

    kind: str
    v_nat: float = 0.0
    alpha_m1: float | None = None
    alpha_m2: float | None = None
    sigma: float | None = None
    A: float | None = None
    c: float | None = None
    atoms: tuple = field(default=())

    def __post_init__(self):
        if self.kind not in KIND_CODES:
            raise ValidationError(f"unknown density kind {self.kind!r}")
        if not (self.v_nat >= 0.0 and math.isfinite(self.v_nat)):
            raise ValidationError("v_nat must be finite and >= 0")
        if self.kind == "uniform" and not (self.c is not None and self.c >= 0.0):
            raise ValidationError("uniform density needs c >= 0")
        if self.kind == "gaussian":
            if self.sigma is None or not self.sigma > 0.0:
                raise DomainError("gaussian density needs sigma > 0")
            if self.A is None or not self.A > 0.0:
                raise ValidationError("gaussian density needs a positive normalisation A")
        if self.kind == "discrete":
            for a1, a2, w in self.atoms:
                if not (0.0 <= a1 < a2 <= 1.0):
                    raise ValidationError(f"atom thresholds ({a1}, {a2}) outside 0 <= a1 < a2 <= 1")
                if not w >= 0.0:
                    raise ValidationError("atom weights must be >= 0")

    # --- kernel plumbing -------------------------------------------------

    @cached_property
    def kernel_args(self):
        """(kind code, par, tab, atoms) as consumed by the kernels."""
        code = KIND_CODES[self.kind]
        if self.kind == "uniform":
            return code, np.array([float(self.c)]), _EMPTY, _NO_ATOMS
        if self.kind == "discrete":
            atoms = np.ascontiguousarray(np.array(self.atoms, dtype=float).reshape(-1, 3))
            return code, _EMPTY, _EMPTY, atoms
        h, tab = _triangle_table(self.A, self.alpha_m1, self.alpha_m2, self.sigma)
        par = np.array([self.A, self.alpha_m1, self.alpha_m2, self.sigma, h])
        return code, par, tab, _NO_ATOMS

    # --- measures --------------------------------------------------------

    def rect(self, a_lo, a_hi, b_lo, b_hi):
        """Mass of {a_lo <= a1 < a_hi, b_lo < a2 <= b_hi}; the box must sit inside the triangle."""
        return kernels.rect_mass(a_lo, a_hi, b_lo, b_hi, *self.kernel_args)

    def tri(self, x):
        """Mass of {0 <= a1 < a2 <= x}."""
        return kernels.tri_mass(x, *self.kernel_args)

    def piece(self, lo, hi, cap):
        return kernels.piece_mass(lo, hi, cap, *self.kernel_args)

    def total(self):
        """Total mass over the triangle (the maximal hysteretic rate)."""
        return self.tri(1.0)

    def q(self, a1, a2):
        """Pointwise density (continuous kinds only); zero outside the triangle."""
        a1 = np.asarray(a1, dtype=float)
        a2 = np.asarray(a2, dtype=float)
        inside = (a1 >= 0.0) & (a1 < a2) & (a2 <= 1.0)
        if self.kind == "uniform":
            return np.where(inside, self.c, 0.0)
        if self.kind == "gaussian":
            s2 = 2.0 * self.sigma ** 2
            val = self.A * np.exp(-((a1 - self.alpha_m1) ** 2 + (a2 - self.alpha_m2) ** 2) / s2)
            return np.where(inside, val, 0.0)
        raise TypeError("a discrete density has no pointwise value")

    @property
    def is_zero(self):
        if self.kind == "uniform":
            return self.c == 0.0
        if self.kind == "discrete":
            return all(w == 0.0 for _, _, w in self.atoms)
        return False

    def with_v_nat(self, v_nat):
        new = replace(self, v_nat=float(v_nat))
        if "kernel_args" in self.__dict__:
            new.__dict__["kernel_args"] = self.kernel_args
        return new

    # --- serialisation ---------------------------------------------------

    def to_json(self):
        out = {"kind": self.kind, "v_nat": self.v_nat}
        if self.kind == "gaussian":
            out.update(alpha_m1=self.alpha_m1, alpha_m2=self.alpha_m2, sigma=self.sigma, A=self.A)
        elif self.kind == "uniform":
            out["c"] = self.c
        else:
            out["atoms"] = [list(a) for a in self.atoms]
        return out

    @classmethod
    def from_json(cls, obj):
        if not isinstance(obj, dict) or "kind" not in obj:
            raise ValidationError("density must be an object with a 'kind' field")
        kind = obj["kind"]
        v_nat = float(obj.get("v_nat", 0.0))
        try:
            if kind == "gaussian":
                return gaussian_density(float(obj["alpha_m1"]), float(obj["alpha_m2"]),
                                        float(obj["sigma"]), v_nat=v_nat)
            if kind == "uniform":
                return uniform_density(float(obj["c"]), v_nat=v_nat)
            if kind == "discrete":
                return discrete_density(obj["atoms"], v_nat=v_nat)
        except KeyError as exc:
            raise ValidationError(f"density field missing: {exc.args[0]}") from None
        raise ValidationError(f"unknown density kind {kind!r}")


def _unnormalised_gauss_mass(m1, m2, sigma):
    def f(a):
        d = (a - m2) / sigma
        return math.exp(-0.5 * d * d) * kernels.gauss_int(0.0, a, m1, sigma)

    pts = sorted({min(max(x, 0.0), 1.0) for x in (m2 - 6 * sigma, m2, m2 + 6 * sigma, m1)} - {0.0, 1.0})
    val, _ = integrate.quad(f, 0.0, 1.0, points=pts or None, epsabs=0.0, epsrel=1e-12, limit=400)
    return val


def _triangle_table(A, m1, m2, sigma):
    n = int(math.ceil(1.0 / min(sigma / 4.0, 1.0 / 256.0))) + 1
    h = 1.0 / (n - 1)
    par = np.array([A, m1, m2, sigma, h])
    panels = np.array([kernels.gauss_panel(i * h, (i + 1) * h, par) for i in range(n - 1)])
    tab = np.concatenate(([0.0], np.cumsum(panels)))
    return h, tab


def gaussian_density(alpha_m1, alpha_m2, sigma, v_nat=0.0):
    """Truncated Gaussian relay density normalised to unit mass on the triangle.

    q(a1, a2) = A exp(-((a1 - alpha_m1)^2 + (a2 - alpha_m2)^2) / (2 sigma^2)).
    The constant A is found by adaptive quadrature of the inner-integrated
    density (rel. tol 1e-12).
    """
    if not sigma > 0.0:
        raise DomainError("sigma must be positive")
    z = _unnormalised_gauss_mass(alpha_m1, alpha_m2, sigma)
    if not z > 0.0:
        raise DomainError("gaussian has no mass on the Preisach triangle")
    return Density("gaussian", v_nat=v_nat, alpha_m1=alpha_m1, alpha_m2=alpha_m2,
                   sigma=sigma, A=1.0 / z)


def uniform_density(c, v_nat=0.0):
    return Density("uniform", v_nat=v_nat, c=float(c))


def discrete_density(atoms, v_nat=0.0):
    """Finite set of weighted relays; ``atoms`` is an iterable of (a1, a2, weight)."""
    return Density("discrete", v_nat=v_nat,
                   atoms=tuple((float(a1), float(a2), float(w)) for a1, a2, w in atoms))
