"""Branch-dependent Lyapunov functions and the global-stability diagnostic.

Along a monotone branch v(I) with endemic equilibrium (I*, S*),

    V(I, S) = S - S* ln(S/S*) + I - I* ln(I/I*) + (1/beta) int_{I*}^{I} (v(i) - v(I*)) / i di

decreases along the flow at rate mu (S - S*)^2 / (S* S).
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import integrate

from .errors import DomainError
from .preisach import lipschitz_K, loop_ratio_L
from .sir import r0

_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)


def _integral_term(I, eq, branch, p, epsrel=1e-10):
    if I == eq.I_star:
        return 0.0
    v_star = branch(eq.I_star)
    # substitute i = exp(s): the integrand becomes v(e^s) - v(I*), bounded
    f = lambda s: branch(math.exp(s)) - v_star
    lo, hi = sorted((math.log(eq.I_star), math.log(I)))
    kinks = [math.log(x) for x in getattr(branch, "breakpoints", ()) if x > 0.0]
    kinks = [x for x in kinks if lo < x < hi][:100]
    val, _ = integrate.quad(f, lo, hi, points=kinks or None, epsabs=1e-16,
                            epsrel=epsrel, limit=400)
    return (val if I > eq.I_star else -val) / p.beta


def lyapunov_value(I, S, eq, branch, p):
    """V(I, S) for the branch ``branch`` (a callable I -> v) and its equilibrium ``eq``."""
    if not (I > 0.0 and S > 0.0):
        raise DomainError("the Lyapunov function needs I > 0 and S > 0")
    Ss, Is = eq.S_star, eq.I_star
    return (S - Ss * math.log(S / Ss) + I - Is * math.log(I / Is)
            + _integral_term(I, eq, branch, p))


def _log_panel(branch, v_star, a, b):
    # 8-point Gauss-Legendre of v(e^s) - v* over s in [a, b]
    half, mid = 0.5 * (b - a), 0.5 * (a + b)
    return half * sum(w * (branch(math.exp(mid + half * x)) - v_star) for x, w in zip(_GL_X, _GL_W))


def lyapunov_increment(x1, x2, eq, branch, p):
    """V(x2) - V(x1) for nearby points, without cancellation against V itself."""
    (I1, S1), (I2, S2) = x1, x2
    if min(I1, I2, S1, S2) <= 0.0:
        raise DomainError("the Lyapunov function needs I > 0 and S > 0")
    dS = (S2 - S1) - eq.S_star * math.log1p((S2 - S1) / S1)
    dI = (I2 - I1) - eq.I_star * math.log1p((I2 - I1) / I1)
    v_star = branch(eq.I_star)
    return dS + dI + _log_panel(branch, v_star, math.log(I1), math.log(I2)) / p.beta


def lyapunov_arc(I, S, eq, branch, p):
    """Vectorised V along a sampled arc.

    The integral term is accumulated over Gauss-Legendre panels (in ln I)
    between consecutive sample values, starting from a quadrature value at
    the first sample.
    """
    I = np.asarray(I, dtype=float)
    S = np.asarray(S, dtype=float)
    if np.any(I <= 0.0) or np.any(S <= 0.0):
        raise DomainError("the Lyapunov function needs I > 0 and S > 0")
    v_star = branch(eq.I_star)
    s = np.log(I)
    acc = np.empty_like(I)
    acc[0] = _integral_term(float(I[0]), eq, branch, p) * p.beta
    for k in range(1, len(I)):
        acc[k] = acc[k - 1] + _log_panel(branch, v_star, s[k - 1], s[k])
    Ss, Is = eq.S_star, eq.I_star
    return S - Ss * np.log(S / Ss) + I - Is * np.log(I / Is) + acc / p.beta


def dissipation(I, S, eq, branch, p):
    """dV/dt along the flow with v = branch(I): -mu (S - S*)^2 / (S* S)."""
    return -p.mu * (S - eq.S_star) ** 2 / (eq.S_star * S)


# --- level-set convexity -----------------------------------------------------

@dataclass
class ConvexityReport:
    min_value: float
    n_points: int
    n_violations: int
    violations: list = field(default_factory=list)

    @property
    def ok(self):
        return self.n_violations == 0


def convexity_check(branch, eq, region, grid, p, direction="ascending", h=1e-6, max_report=20):
    """Evaluate the level-set curvature inequality on a grid.

    ``region`` is (I_lo, I_hi, S_lo, S_hi) and ``grid`` (nI, nS).  The value
    (S*/S^2) V_I^2 + ((beta I* + I v'(I) - v(I) + v(I*)) / (beta I^2)) V_S^2
    must be positive away from the equilibrium.  For descending branches the
    check is restricted to I <= I*.
    """
    I_lo, I_hi, S_lo, S_hi = region
    nI, nS = grid
    if direction == "descending":
        I_hi = min(I_hi, eq.I_star)
    if not (0.0 < I_lo < I_hi and 0.0 < S_lo < S_hi):
        raise DomainError("convexity region must be a nonempty box in I > 0, S > 0")
    Is, Ss, beta = eq.I_star, eq.S_star, p.beta
    v_star = branch(Is)
    I_grid = np.linspace(I_lo, I_hi, nI)
    S_grid = np.linspace(S_lo, S_hi, nS)
    report = ConvexityReport(math.inf, 0, 0)
    for I in I_grid:
        hh = min(h, 0.5 * I)
        v = branch(I)
        dv = (branch(I + hh) - branch(I - hh)) / (2.0 * hh)
        V_I = 1.0 - Is / I + (v - v_star) / (beta * I)
        G2 = (beta * Is + I * dv - v + v_star) / (beta * I * I)
        for S in S_grid:
            if I == Is and S == Ss:
                continue
            V_S = 1.0 - Ss / S
            val = Ss / (S * S) * V_I * V_I + G2 * V_S * V_S
            report.n_points += 1
            report.min_value = min(report.min_value, val)
            if not val > 0.0:
                report.n_violations += 1
                if len(report.violations) < max_report:
                    report.violations.append((float(I), float(S), float(val)))
    return report


# --- global stability diagnostic -----------------------------------------------

@dataclass
class StabilityReport:
    K: float
    L: float
    v_max: float
    rho0: float
    rho1: float
    S_m_lb: float
    lhs: float
    rhs: float
    no_periodic_orbit_guaranteed: bool
    ln_lhs: float = math.nan
    ln_rhs: float = math.nan
    L_tol: float = 0.0
    status: str = "ok"
    note: str = ""

    def to_json(self):
        out = asdict(self)
        for k, v in out.items():
            if isinstance(v, float) and not math.isfinite(v):
                out[k] = str(v)
        return out


MARGIN = 1e-12


def rho0(p, K):
    """Lower bound (mu (1 - S*) - v_nat S*) / ((beta + K) S*) for the turning values of I."""
    Ss = p.delta / p.beta
    return (p.mu * (1.0 - Ss) - p.v_nat * Ss) / ((p.beta + K) * Ss)


def theorem2_condition(p, d):
    """Sufficient condition excluding periodic orbits.

    Tests  rho1 (beta/L) (1 - L/beta)^2 > (4 sqrt(2) delta / mu)(1 + 1/sqrt(S_m_lb))
    with rho1 and S_m_lb the computable lower bounds for the smallest turning
    value of I and the smallest S.  Everything is evaluated in log space since
    rho1 routinely underflows.
    """
    d = d.with_v_nat(p.v_nat)
    K = lipschitz_K(d)
    Lr = loop_ratio_L(d)
    L = Lr.value
    v_max = d.total()
    beta, mu, delta = p.beta, p.mu, p.delta
    Ss = delta / beta
    nan = math.nan
    if r0(p) <= 1.0:
        return StabilityReport(K, L, v_max, nan, nan, nan, nan, nan, True, L_tol=Lr.tol,
                               status="proposition1",
                               note="R0 <= 1: the infection-free state is the global attractor")
    if L >= beta:
        return StabilityReport(K, L, v_max, nan, nan, nan, nan, nan, False, L_tol=Lr.tol,
                               status="inapplicable", note="L >= beta: the test does not apply")
    r = rho0(p, K)
    ln_rho0 = math.log(r)
    excess = max(v_max * Ss - mu * (1.0 - Ss), 0.0)
    ln_rho1 = ln_rho0 - 1.0 / r + ln_rho0 / (beta * Ss * r) * excess
    ln_Sm = math.log(Ss) - 1.0 + mu * (1.0 - Ss) / (beta * Ss * Ss) * ln_rho1
    ln_rhs = math.log(4.0 * math.sqrt(2.0) * delta / mu) + np.logaddexp(0.0, -0.5 * ln_Sm)
    if L == 0.0:
        ln_lhs = math.inf
        note = "no hysteresis: classical globally stable endemic equilibrium"
    else:
        ln_lhs = ln_rho1 + math.log(beta / L) + 2.0 * math.log1p(-L / beta)
        note = ""
    ok = bool(ln_lhs > float(ln_rhs) + MARGIN)
    return StabilityReport(K, L, v_max, r, math.exp(ln_rho1), math.exp(ln_Sm),
                           math.exp(ln_lhs) if ln_lhs < 700 else math.inf, math.exp(min(float(ln_rhs), 700.0)),
                           ok, ln_lhs, float(ln_rhs), Lr.tol, "ok", note)


def uniform_threshold(p, c_hi=1e3, rtol=1e-10):
    """Largest c for which a uniform density q = c passes :func:`theorem2_condition` (bisection)."""
    from .preisach import uniform_density

    passes = lambda c: theorem2_condition(p, uniform_density(c)).no_periodic_orbit_guaranteed
    if not passes(0.0):
        return 0.0
    lo, hi = 0.0, c_hi
    if passes(hi):
        return math.inf
    # K, L and v_max all grow with c, so the condition is monotone in c
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if passes(mid):
            lo = mid
        else:
            hi = mid
    return lo


def monotone_arcs(traj):
    """Index ranges [a, b] of the arcs between consecutive turning points, with the arc-start memory."""
    from .simulate import NULLCLINE

    cuts = [(0, traj.initial_memory)]
    for e in traj.events:
        if e.kind == NULLCLINE:
            k = int(np.searchsorted(traj.t, e.t))
            cuts.append((k, e.memory))
    ends = [k for k, _ in cuts[1:]] + [len(traj.t) - 1]
    return [(a, b, mem) for (a, mem), b in zip(cuts, ends) if b > a]


def arc_lyapunov_increase(traj, d):
    """Largest sample-to-sample increase of the matching-branch V over all arcs.

    Returns (max_increase, n_arcs_checked).  Arcs whose samples touch I = 0
    are skipped.
    """
    from .equilibria import endemic_on_branch
    from .preisach import Branch

    p = traj.params
    d = d.with_v_nat(p.v_nat)
    worst, n = -math.inf, 0
    for a, b, mem in monotone_arcs(traj):
        I = traj.I[a:b + 1]
        S = traj.S[a:b + 1]
        if np.any(I <= 0.0):
            continue
        eq = endemic_on_branch(p, mem, d, None)
        V = lyapunov_arc(I, S, eq, Branch(mem, d), p)
        worst = max(worst, float(np.max(np.diff(V))))
        n += 1
    return worst, n
