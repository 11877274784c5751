"""Event-detecting integration of the SIR-Preisach system and attractor classification.

The state is integrated as (u, S) with u = ln I: the narrow-density cycle has troughs
of I around 1e-16 that an absolute tolerance on I cannot resolve, and in log
form the relative accuracy of I is controlled directly.  Each accepted step
is monotone in I (turning points of I are events), so the Preisach output at
every Runge-Kutta stage is a tentative monotone sweep from the memory
committed at the start of the step.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import trapezoid

from ._backend import kernels
from .errors import DomainError, IntegratorFault, ValidationError
from .preisach import MemoryStaircase, RelayBank
from .preisach.staircase import TREND_TOL
from .sir import ModelParams, SirState

NULLCLINE = "nullcline_crossing"
RELAY = "relay_switch"

# dense output of the Dormand-Prince pair (Shampine's free interpolant)
DENSE_P = np.array([
    [1, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0, 0, 0, 0],
    [0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])

_EMPTY = np.zeros(0)
_EMPTY_U8 = np.zeros(0, dtype=np.uint8)
_NO_ATOMS = np.zeros((0, 3))
_DOMAIN_TOL = 1e-9
_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class SolverSpec:
    """Step-size control.

    ``rtol_I`` bounds the local error of ln I, i.e. the relative error of I.
    The error on S is measured against ``atol_S + rtol_S |S|``.
    """

    rtol_I: float = 1e-8
    atol_S: float = 1e-10
    rtol_S: float = 1e-8
    max_step: float = 0.5
    first_step: float = 1e-3
    event_tol: float = 1e-10
    max_steps: int = 20_000_000

    def __post_init__(self):
        for name in ("rtol_I", "atol_S", "max_step", "first_step", "event_tol"):
            if not getattr(self, name) > 0.0:
                raise ValidationError(f"solver.{name} must be > 0")
        if self.rtol_S < 0.0:
            raise ValidationError("solver.rtol_S must be >= 0")

    def scaled(self, factor):
        """Tolerances multiplied by ``factor`` (for self-convergence checks)."""
        return SolverSpec(self.rtol_I * factor, self.atol_S * factor, self.rtol_S * factor,
                          self.max_step, self.first_step, self.event_tol, self.max_steps)


@dataclass(frozen=True)
class Event:
    t: float
    I: float
    S: float
    kind: str
    memory: object = field(default=None, repr=False, compare=False)


@dataclass
class Trajectory:
    t: np.ndarray
    I: np.ndarray
    S: np.ndarray
    v: np.ndarray
    is_event: np.ndarray
    events: list
    final_memory: object
    params: ModelParams
    initial_memory: object = None
    status: str = "ok"
    message: str = ""
    n_steps: int = 0
    n_rejected: int = 0

    @property
    def R(self):
        return 1.0 - self.I - self.S

    @property
    def t_end(self):
        return float(self.t[-1])


class Integrator:
    """Resumable integrator; call :meth:`advance` repeatedly to extend a run."""

    def __init__(self, p: ModelParams, d, init: SirState, mem0, ctrl: SolverSpec | None = None):
        self.p = p
        self.d = d.with_v_nat(p.v_nat)
        self.ctrl = ctrl or SolverSpec()
        if not (init.I >= 0.0 and init.S > 0.0 and init.I + init.S <= 1.0):
            raise DomainError(f"initial state ({init.I}, {init.S}) outside the domain")
        self.bank = isinstance(mem0, RelayBank)
        if abs(mem0.current - init.I) > 1e-14:
            raise ValidationError("initial memory is not compatible with I0")
        kind, par, tab, atoms = self.d.kernel_args
        if self.bank:
            self._bk = mem0.copy()
            self._args = (kind, par, tab, atoms)
            self.M = np.zeros(2)
            self.m = np.zeros(2)
            self.p_, self.r_, self.falling = 0, 0, False
        else:
            if not isinstance(mem0, MemoryStaircase):
                raise TypeError("mem0 must be a MemoryStaircase or RelayBank")
            mem0.validate()
            self._bk = None
            self._args = (kind, par, tab, atoms)
            cap = max(64, 2 * (len(mem0.maxima) + 2))
            self.M = np.zeros(cap)
            self.m = np.zeros(cap)
            self.p_, self.r_ = len(mem0.maxima), len(mem0.minima)
            self.M[:self.p_] = mem0.maxima
            self.m[:self.r_] = mem0.minima
            self.falling = mem0.falling
        self._trend = getattr(mem0, "trend", "flat")
        self._moved = False
        self.sM = np.zeros_like(self.M)
        self.sm = np.zeros_like(self.m)
        self.cur = float(init.I)
        self.t = 0.0
        self.u = math.log(init.I) if init.I > 0.0 else -math.inf
        self.S = float(init.S)
        self.v = self._output()
        self.fu, self.fS = self._rhs(self.u, self.S, self.v)
        self.h = min(self.ctrl.first_step, self.ctrl.max_step)
        self.K = np.zeros((7, 2))
        self.S_star = p.delta / p.beta
        self._side = self._gsign(self.S)
        self._t = [0.0]
        self._I = [init.I]
        self._S = [self.S]
        self._v = [self.v]
        self._ev = [False]
        self.events = []
        self.status = "ok"
        self.message = ""
        self.n_steps = 0
        self.n_rejected = 0
        self.initial_memory = mem0.copy()

    # --- helpers -----------------------------------------------------------

    def _gsign(self, S):
        g = S - self.S_star
        return 1 if g > 0.0 else (-1 if g < 0.0 else 0)

    def _output(self):
        if self.bank:
            return self.p.v_nat + self._bk.output()
        return self.p.v_nat + kernels.profile_mass(self.M, self.p_, self.m, self.r_, self.cur,
                                                   self.falling, *self._args)

    def _rhs(self, u, S, v):
        p = self.p
        I = math.exp(u)
        return p.beta * S - p.delta, -p.beta * I * S - v * S - p.mu * S + p.mu

    def _step(self, h):
        p = self.p
        if self.bank:
            b = self._bk
            return kernels.dp5_step(self.u, self.S, self.fu, self.fS, h, p.beta, p.delta, p.mu, p.v_nat,
                                    self.M, 0, self.m, 0, self.cur, False, self.sM, self.sm,
                                    *self._args, True, b.a1, b.a2, b.w, b.state, self.K)
        return kernels.dp5_step(self.u, self.S, self.fu, self.fS, h, p.beta, p.delta, p.mu, p.v_nat,
                                self.M, self.p_, self.m, self.r_, self.cur, self.falling,
                                self.sM, self.sm, *self._args, False, _EMPTY, _EMPTY, _EMPTY,
                                _EMPTY_U8, self.K)

    def _dense(self, h, theta, col):
        q = theta * np.array([1.0, theta, theta * theta, theta ** 3])
        y0 = self.u if col == 0 else self.S
        return y0 + h * float(self.K[:, col] @ (DENSE_P @ q))

    @staticmethod
    def _bisect(g, span, tol):
        # g > 0 before the event and g(1) <= 0; returns the crossing fraction
        lo, hi = 0.0, 1.0
        while (hi - lo) * span > tol:
            mid = 0.5 * (lo + hi)
            if g(mid) > 0.0:
                lo = mid
            else:
                hi = mid
        return hi

    def _commit(self, x):
        if self.bank:
            kernels.bank_apply(self._bk.a1, self._bk.a2, self._bk.state, x)
            self.cur = x
            return
        if abs(x - self.cur) > TREND_TOL:
            self._moved = True
        if self.p_ + 2 >= len(self.M) or self.r_ + 2 >= len(self.m):
            self._grow()
        self.p_, self.r_, self.cur, self.falling = kernels.sweep(
            self.M, self.p_, self.m, self.r_, self.cur, self.falling, x)
        self.cur = float(self.cur)

    def _grow(self):
        for name in ("M", "m", "sM", "sm"):
            old = getattr(self, name)
            new = np.zeros(2 * len(old))
            new[:len(old)] = old
            setattr(self, name, new)

    def _relay_target(self, I0, I1):
        # nearest threshold strictly crossed on the way from I0 to I1
        b = self._bk
        if I1 > I0:
            sel = (b.state == 0) & (b.a2 > I0) & (b.a2 <= I1)
            return float(b.a2[sel].min()) if sel.any() else None
        if I1 < I0:
            sel = (b.state != 0) & (b.a1 < I0) & (b.a1 >= I1)
            return float(b.a1[sel].max()) if sel.any() else None
        return None

    # --- main loop ---------------------------------------------------------

    def advance(self, t_end):
        """Integrate up to ``t_end`` (weeks)."""
        c = self.ctrl
        while self.t < t_end and self.status == "ok":
            if self.n_steps >= c.max_steps:
                self.status, self.message = "max_steps", f"step budget {c.max_steps} exhausted"
                break
            h = min(self.h, c.max_step, t_end - self.t)
            if h < 1e-14 * max(1.0, abs(self.t)):
                self.status, self.message = "step_underflow", f"step size underflow at t={self.t}"
                break
            u1, S1, eu, eS, v1 = self._step(h)
            tol_S = c.atol_S + c.rtol_S * max(abs(self.S), abs(S1))
            err = max(abs(eu) / c.rtol_I if math.isfinite(eu) else 0.0, abs(eS) / tol_S)
            if not (err <= 1.0) or not math.isfinite(S1):
                self.n_rejected += 1
                fac = 0.2 if not math.isfinite(err) else max(0.2, 0.9 * err ** -0.2)
                self.h = h * fac
                continue
            fac = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
            self._accept(h, u1, S1, v1)
            self.h = h * fac
        return self

    def _accept(self, h, u1, S1, v1):
        c = self.ctrl
        theta, kind, x_thr = 1.0, None, None
        if self.u > -math.inf:
            s1 = self._gsign(S1)
            if s1 != 0 and s1 != self._side and self._side != 0:
                side0 = self._side
                theta = self._bisect(lambda th: (self._dense(h, th, 1) - self.S_star) * side0,
                                     h, c.event_tol)
                kind = NULLCLINE
            if self.bank:
                I_end = math.exp(self._dense(h, theta, 0)) if kind else math.exp(u1)
                x_thr = self._relay_target(self.cur, I_end)
                if x_thr is not None:
                    lt = math.log(x_thr)
                    sgn = 1.0 if I_end > self.cur else -1.0
                    th_r = theta * self._bisect(lambda s: (lt - self._dense(h, s * theta, 0)) * sgn,
                                                h * theta, c.event_tol)
                    if th_r <= theta:
                        theta, kind = th_r, RELAY
        if kind is not None and theta < 1.0:
            h_full = h
            h = h * theta
            u1, S1, _, _, v1 = self._step(h)
            if kind == NULLCLINE:
                # the step map differs from the dense output by the local error;
                # a few Newton steps on h put the sample on S = S* itself
                for _ in range(4):
                    g = S1 - self.S_star
                    dS = self.K[6, 1]
                    if abs(g) <= 4.0 * _EPS * self.S_star or dS == 0.0:
                        break
                    h_new = h - g / dS
                    if not 0.0 < h_new <= h_full:
                        break
                    h = h_new
                    u1, S1, _, _, v1 = self._step(h)
        I1 = math.exp(u1)
        if not (S1 >= -_DOMAIN_TOL and I1 + S1 <= 1.0 + _DOMAIN_TOL):
            raise IntegratorFault(f"left the domain at t={self.t + h}: I={I1}, S={S1}")
        self.t += h
        self.n_steps += 1
        if kind == RELAY:
            # force the located relay(s) across the threshold
            kernels.bank_apply(self._bk.a1, self._bk.a2, self._bk.state, x_thr)
        self._commit(I1)
        self.u, self.S = u1, S1
        if kind is None:
            self.v = v1
            self.fu, self.fS = self.K[6, 0], self.K[6, 1]
        else:
            self.v = self._output()
            self.fu, self.fS = self._rhs(u1, S1, self.v)
        if kind == NULLCLINE:
            self._side = -self._side
        elif self._side == 0:
            self._side = self._gsign(S1)
        self._t.append(self.t)
        self._I.append(I1)
        self._S.append(S1)
        self._v.append(self.v)
        self._ev.append(kind is not None)
        if kind is not None:
            snap = self.memory() if kind == NULLCLINE else None
            self.events.append(Event(self.t, I1, S1, kind, snap))

    # --- results -----------------------------------------------------------

    def memory(self):
        if self.bank:
            b = self._bk
            return RelayBank(b.a1, b.a2, b.w, b.state.copy(), self.cur)
        trend = self._trend
        if self._moved:
            trend = "falling" if self.falling else "rising"
        return MemoryStaircase(self.M[:self.p_].tolist(), self.m[:self.r_].tolist(), self.cur, trend)

    def trajectory(self):
        return Trajectory(np.array(self._t), np.array(self._I), np.array(self._S), np.array(self._v),
                          np.array(self._ev, dtype=bool), list(self.events), self.memory(), self.p,
                          self.initial_memory, self.status, self.message, self.n_steps, self.n_rejected)


def integrate(p, d, init, mem0, t_end, ctrl=None):
    return Integrator(p, d, init, mem0, ctrl).advance(t_end).trajectory()


def turning_points(traj):
    """Nullcline events (t_k, I_k) in time order."""
    return [(e.t, e.I) for e in traj.events if e.kind == NULLCLINE]


# --- classification ------------------------------------------------------------

@dataclass(frozen=True)
class ClassifierSpec:
    eps_free: float = 1e-10
    eps_S_free: float = 1e-8
    eps_per: float = 1e-6
    eps_amp: float = 1e-5
    eps_eq: float = 1e-6
    pairs: int = 4
    window: float = 0.1
    periods: int = 3


@dataclass
class AttractorClass:
    kind: str
    I_star: float | None = None
    S_star: float | None = None
    v_star: float | None = None
    I_lo: float | None = None
    I_hi: float | None = None
    period: float | None = None
    averages: tuple | None = None
    witness: dict = field(default_factory=dict)

    def to_json(self):
        out = {"kind": self.kind}
        if self.kind == "endemic_equilibrium":
            out.update(I_star=self.I_star, S_star=self.S_star, v_star=self.v_star)
        elif self.kind == "periodic_orbit":
            out.update(I_lo=self.I_lo, I_hi=self.I_hi, period=self.period,
                       averages=dict(zip(("I_bar", "S_bar", "v_bar"), self.averages)))
        elif self.kind == "infection_free":
            out.update(I_star=self.I_star, S_star=self.S_star, v_star=self.v_star)
        out["witness"] = self.witness
        return out


def _window(traj, frac, discard=None):
    t0 = traj.t[-1] - frac * (traj.t[-1] - traj.t[0])
    if discard is not None and discard < traj.t[-1]:
        t0 = discard
    return traj.t >= t0


def _periodic(traj, tp, spec):
    n = 2 * spec.pairs
    if len(tp) < n + 2:
        return None
    Ik = np.array([x for _, x in tp])
    tk = np.array([t for t, _ in tp])
    diffs = np.abs(Ik[2:] - Ik[:-2])[-n:]
    if not np.all(diffs < spec.eps_per):
        return None
    lo, hi = sorted(Ik[-2:])
    if not hi - lo > spec.eps_amp:
        return None
    period = float(np.mean((tk[2:] - tk[:-2])[-n:]))
    return float(lo), float(hi), period, float(diffs.max())


def classify(traj, tol: ClassifierSpec | None = None, discard=None):
    """Decide the omega-limit behaviour of a finished run.

    The final window is the last ``tol.window`` fraction of the run, or
    everything after ``discard`` weeks when given.
    """
    spec = tol or ClassifierSpec()
    p = traj.params
    win = _window(traj, spec.window, discard)
    I_w, S_w, v_w = traj.I[win], traj.S[win], traj.v[win]
    S_free = p.mu / (p.mu + p.v_nat)
    wit = {"t_end": float(traj.t[-1]), "window_start": float(traj.t[win][0]),
           "I_max_window": float(I_w.max()), "I_min_window": float(I_w.min())}
    if I_w.max() < spec.eps_free and abs(traj.S[-1] - S_free) < spec.eps_S_free:
        wit["S_error"] = float(abs(traj.S[-1] - S_free))
        return AttractorClass("infection_free", 0.0, S_free, p.v_nat, witness=wit)
    tp = turning_points(traj)
    per = _periodic(traj, tp, spec)
    if per is not None:
        lo, hi, period, drift = per
        wit.update(max_turning_drift=drift, n_turning_points=len(tp))
        avg = orbit_averages(traj, spec.periods)
        return AttractorClass("periodic_orbit", I_lo=lo, I_hi=hi, period=period,
                              averages=avg, witness=wit)
    # an endemic equilibrium sits on the nullcline S = delta/beta; a flat stretch
    # deep in an epidemic trough does not
    S_off = abs(float(S_w.mean()) - p.delta / p.beta)
    if (I_w.max() - I_w.min() < spec.eps_eq and v_w.max() - v_w.min() < spec.eps_eq
            and S_off < spec.eps_eq):
        wit["v_range_window"] = float(v_w.max() - v_w.min())
        wit["S_offset"] = S_off
        return AttractorClass("endemic_equilibrium", float(I_w.mean()), float(S_w.mean()),
                              float(v_w.mean()), witness=wit)
    wit["n_turning_points"] = len(tp)
    return AttractorClass("undecided", witness=wit)


def orbit_averages(traj, window=3):
    """Time averages of (I, S, v) over the last ``window`` complete periods.

    A period spans two consecutive turning points of the same type.  A
    constant signal averages to itself.
    """
    tp = turning_points(traj)
    if len(tp) < 2 * window + 1:
        if np.ptp(traj.I) == 0.0 and np.ptp(traj.S) == 0.0 and np.ptp(traj.v) == 0.0:
            return float(traj.I[0]), float(traj.S[0]), float(traj.v[0])
        raise DomainError(f"need {2 * window + 1} turning points for {window} period(s), have {len(tp)}")
    t_a, t_b = tp[-2 * window - 1][0], tp[-1][0]
    sel = (traj.t >= t_a) & (traj.t <= t_b)
    t = traj.t[sel]
    span = t_b - t_a
    return tuple(float(trapezoid(x[sel], t) / span) for x in (traj.I, traj.S, traj.v))


def run(p, d, init, mem0, t_end, ctrl=None, tol=None, max_doublings=2, discard=None):
    """Integrate and classify, doubling ``t_end`` while the result is undecided."""
    integ = Integrator(p, d, init, mem0, ctrl)
    integ.advance(t_end)
    traj = integ.trajectory()
    cls = classify(traj, tol, discard)
    doublings = 0
    while cls.kind == "undecided" and doublings < max_doublings and integ.status == "ok":
        t_end *= 2.0
        doublings += 1
        integ.advance(t_end)
        traj = integ.trajectory()
        cls = classify(traj, tol, discard)
    cls.witness["doublings"] = doublings
    return traj, cls
