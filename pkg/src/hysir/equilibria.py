"""Infection-free and endemic equilibria."""
from __future__ import annotations

from dataclasses import dataclass

from scipy import optimize

from .errors import NoEquilibriumError, ValidationError
from .preisach import Branch


@dataclass(frozen=True)
class EndemicEquilibrium:
    I_star: float
    S_star: float
    v0: float


def infection_free(p):
    """(I, S) of the disease-free steady state; the Preisach state is virgin."""
    return 0.0, p.mu / (p.mu + p.v_nat)


def endemic_from_v0(p, v0):
    """Member of the endemic family with frozen vaccination rate ``v0``."""
    if v0 < p.v_nat:
        raise ValidationError(f"v0 = {v0} below v_nat = {p.v_nat}")
    S = p.delta / p.beta
    I = p.mu / p.delta - (p.mu + v0) / p.beta
    if not I > 0.0:
        raise NoEquilibriumError(f"no endemic equilibrium for v0 = {v0}")
    return EndemicEquilibrium(I, S, v0)


def _residual(p, branch):
    S = p.delta / p.beta
    return lambda I: p.mu * (1.0 - S) - p.beta * S * I - S * branch(I)


def endemic_on_branch(p, mem, d, direction=None, xtol=1e-12):
    """Endemic equilibrium consistent with the monotone branch leaving ``mem``.

    Solves mu (1 - S*) - beta S* I = S* v(I) with v the branch output.
    ``direction`` "ascending" searches I >= mem.current, "descending"
    I <= mem.current, and None the whole bracket [0, mu/delta].
    """
    d = d.with_v_nat(p.v_nat)
    branch = Branch(mem, d)
    f = _residual(p, branch)
    top = p.mu / p.delta
    cur = mem.current
    if direction == "ascending":
        lo, hi = cur, top
    elif direction == "descending":
        lo, hi = 0.0, min(cur, top)
    elif direction is None:
        lo, hi = 0.0, top
    else:
        raise ValidationError(f"direction must be 'ascending' or 'descending', got {direction!r}")
    if hi < lo:
        raise NoEquilibriumError("no endemic equilibrium on this branch")
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        I = lo
    elif fhi == 0.0:
        I = hi
    elif flo > 0.0 > fhi:
        I = optimize.brentq(f, lo, hi, xtol=xtol, rtol=1e-15, maxiter=500)
    else:
        raise NoEquilibriumError("no endemic equilibrium on this branch")
    if not I > 0.0:
        raise NoEquilibriumError("no endemic equilibrium on this branch")
    return EndemicEquilibrium(I, p.delta / p.beta, branch(I))
