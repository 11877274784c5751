"""Pure-Python reference kernels.

Line-for-line twin of ``_ckernels.pyx``.  The staircase and stepping kernels
return the same floating point results as their compiled counterparts (same
libm calls, same operation order); the relay-bank helpers are vectorised with
numpy here, so their sums may differ in the last bits.

Staircase memory is passed as flat buffers::

    M[0:p]   dominant maxima, strictly decreasing
    m[0:r]   dominant minima, strictly increasing
    cur      current input
    falling  True when the current excursion goes down (then p == r + 1)

Densities are passed as ``(kind, par, tab, atoms)``; see ``density.py``.
"""
import math

UNIFORM = 0
GAUSSIAN = 1
DISCRETE = 2

TREND_TOL = 1e-14

_SQRT2 = math.sqrt(2.0)
_SQRT_HALF_PI = math.sqrt(0.5 * math.pi)

GL_X = (-0.9602898564975362, -0.7966664774136267, -0.525532409916329,
        -0.18343464249564978, 0.18343464249564978, 0.525532409916329,
        0.7966664774136267, 0.9602898564975362)
GL_W = (0.10122853629037669, 0.22238103445337434, 0.31370664587788705,
        0.36268378337836177, 0.36268378337836177, 0.31370664587788705,
        0.22238103445337434, 0.10122853629037669)

# Dormand-Prince 5(4)
_C2, _C3, _C4, _C5 = 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0
_A21 = 1.0 / 5.0
_A31, _A32 = 3.0 / 40.0, 9.0 / 40.0
_A41, _A42, _A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
_A51, _A52, _A53, _A54 = (19372.0 / 6561.0, -25360.0 / 2187.0,
                          64448.0 / 6561.0, -212.0 / 729.0)
_A61, _A62, _A63, _A64, _A65 = (9017.0 / 3168.0, -355.0 / 33.0,
                                46732.0 / 5247.0, 49.0 / 176.0,
                                -5103.0 / 18656.0)
_B1, _B3, _B4, _B5, _B6 = (35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0,
                           -2187.0 / 6784.0, 11.0 / 84.0)
_E1, _E3, _E4, _E5, _E6, _E7 = (-71.0 / 57600.0, 71.0 / 16695.0,
                                -71.0 / 1920.0, 17253.0 / 339200.0,
                                -22.0 / 525.0, 1.0 / 40.0)


def gauss_int(a, b, mean, s):
    """Integral of exp(-(x - mean)^2 / (2 s^2)) over [a, b]."""
    if b <= a:
        return 0.0
    k = s * _SQRT_HALF_PI
    za = (a - mean) / (s * _SQRT2)
    zb = (b - mean) / (s * _SQRT2)
    if za > 0.0:
        return k * (math.erfc(za) - math.erfc(zb))
    if zb < 0.0:
        return k * (math.erfc(-zb) - math.erfc(-za))
    return k * (math.erf(zb) - math.erf(za))


def _gauss_tri_density(a, par):
    # d/dx of the triangle mass at x = a
    s = par[3]
    d = (a - par[2]) / s
    return par[0] * math.exp(-0.5 * d * d) * gauss_int(0.0, a, par[1], s)


def gauss_panel(a, b, par):
    """8-point Gauss-Legendre integral of the triangle-mass derivative."""
    if b <= a:
        return 0.0
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    acc = 0.0
    for i in range(8):
        acc += GL_W[i] * _gauss_tri_density(mid + half * GL_X[i], par)
    return half * acc


def tri_mass(x, kind, par, tab, atoms):
    """Mass of {0 <= a1 < a2 <= x}."""
    if x <= 0.0:
        return 0.0
    if x > 1.0:
        x = 1.0
    if kind == UNIFORM:
        return 0.5 * par[0] * x * x
    if kind == GAUSSIAN:
        h = par[4]
        i = int(x / h)
        n = tab.shape[0]
        if i > n - 1:
            i = n - 1
        return tab[i] + gauss_panel(i * h, x, par)
    total = 0.0
    for k in range(atoms.shape[0]):
        if atoms[k, 1] <= x:
            total += atoms[k, 2]
    return total


def rect_mass(a_lo, a_hi, b_lo, b_hi, kind, par, tab, atoms):
    """Mass of {a_lo <= a1 < a_hi, b_lo < a2 <= b_hi} (a rectangle inside the triangle)."""
    if a_hi <= a_lo or b_hi <= b_lo:
        return 0.0
    if kind == UNIFORM:
        return par[0] * (a_hi - a_lo) * (b_hi - b_lo)
    if kind == GAUSSIAN:
        return (par[0] * gauss_int(a_lo, a_hi, par[1], par[3])
                * gauss_int(b_lo, b_hi, par[2], par[3]))
    total = 0.0
    for k in range(atoms.shape[0]):
        a1 = atoms[k, 0]
        a2 = atoms[k, 1]
        if a_lo <= a1 < a_hi and b_lo < a2 <= b_hi:
            total += atoms[k, 2]
    return total


def piece_mass(lo, hi, cap, kind, par, tab, atoms):
    """Mass of {lo < a2 <= hi, 0 <= a1 < min(cap, a2)}."""
    if hi <= lo:
        return 0.0
    if cap >= hi:
        return tri_mass(hi, kind, par, tab, atoms) - tri_mass(lo, kind, par, tab, atoms)
    if cap <= lo:
        return rect_mass(0.0, cap, lo, hi, kind, par, tab, atoms)
    return (tri_mass(cap, kind, par, tab, atoms) - tri_mass(lo, kind, par, tab, atoms)
            + rect_mass(0.0, cap, cap, hi, kind, par, tab, atoms))


def profile_mass(M, p, m, r, cur, falling, kind, par, tab, atoms):
    """Mass of the ON region induced by a staircase."""
    total = 0.0
    if falling:
        for j in range(p):
            hi = M[j]
            lo = M[j + 1] if j + 1 < p else 0.0
            cap = m[j] if j < r else cur
            total += piece_mass(lo, hi, cap, kind, par, tab, atoms)
    else:
        for j in range(p + 1):
            if j < p:
                hi = M[j]
                lo = M[j + 1] if j + 1 < p else cur
                cap = m[j]
            else:
                hi = cur
                lo = 0.0
                cap = math.inf
            total += piece_mass(lo, hi, cap, kind, par, tab, atoms)
    return total


def sweep(M, p, m, r, cur, falling, x):
    """Monotone move of the input from ``cur`` to ``x``; edits M, m in place.

    Continued motion is always tracked; a reversal registers only when it
    exceeds TREND_TOL.  Buffers need room for one extra entry.  Returns
    (p, r, cur, falling).
    """
    if falling:
        if x <= cur:
            cur = x
            while r > 0 and x <= m[r - 1]:
                r -= 1
                p -= 1
        elif x > cur + TREND_TOL:
            m[r] = cur
            r += 1
            falling = False
            cur = x
            while p > 0 and x >= M[p - 1]:
                p -= 1
                r -= 1
    else:
        if x >= cur:
            cur = x
            while p > 0 and x >= M[p - 1]:
                p -= 1
                r -= 1
        elif x < cur - TREND_TOL:
            M[p] = cur
            p += 1
            falling = True
            cur = x
            while r > 0 and x <= m[r - 1]:
                r -= 1
                p -= 1
    return p, r, cur, falling


def swept_mass(M, p, m, r, cur, falling, x, sM, sm, kind, par, tab, atoms):
    """ON-region mass after a virtual sweep to ``x``; scratch buffers sM, sm."""
    for i in range(p):
        sM[i] = M[i]
    for i in range(r):
        sm[i] = m[i]
    p2, r2, cur2, falling2 = sweep(sM, p, sm, r, cur, falling, x)
    return profile_mass(sM, p2, sm, r2, cur2, falling2, kind, par, tab, atoms)


def bank_swept_mass(a1, a2, w, state, x):
    """Relay-bank output after a monotone move to ``x`` (states compatible)."""
    on = (x >= a2) | ((state != 0) & (x > a1))
    return float(w[on].sum())


def bank_apply(a1, a2, state, x):
    """Commit a monotone move to ``x`` into a relay bank; returns switch count."""
    up = (x >= a2) & (state == 0)
    down = (x <= a1) & (state != 0)
    state[up] = 1
    state[down] = 0
    return int(up.sum() + down.sum())


def _stage_v(u, vnat, M, p, m, r, cur, falling, sM, sm, kind, par, tab, atoms,
             bank, a1, a2, w, state):
    x = math.exp(u)
    if bank:
        return vnat + bank_swept_mass(a1, a2, w, state, x)
    return vnat + swept_mass(M, p, m, r, cur, falling, x, sM, sm, kind, par, tab, atoms)


def dp5_step(u0, S0, fu0, fS0, h, beta, delta, mu, vnat,
             M, p, m, r, cur, falling, sM, sm, kind, par, tab, atoms,
             bank, a1, a2, w, state, K):
    """One Dormand-Prince step of the log-infected SIR system.

    State is (u, S) with u = ln I.  At every stage the vaccination rate is the
    Preisach output after a tentative monotone sweep from the committed memory
    to the stage input.  Fills K (7 x 2 stage slopes, FSAL last row) and
    returns (u1, S1, err_u, err_S, v1).  With ``bank`` set, the relay arrays
    (a1, a2, w, state) replace the staircase.
    """
    K[0, 0] = fu0
    K[0, 1] = fS0

    u = u0 + h * _A21 * K[0, 0]
    S = S0 + h * _A21 * K[0, 1]
    v = _stage_v(u, vnat, M, p, m, r, cur, falling, sM, sm, kind, par, tab, atoms, bank, a1, a2, w, state)
    I = math.exp(u)
    K[1, 0] = beta * S - delta
    K[1, 1] = -beta * I * S - v * S - mu * S + mu

    u = u0 + h * (_A31 * K[0, 0] + _A32 * K[1, 0])
    S = S0 + h * (_A31 * K[0, 1] + _A32 * K[1, 1])
    v = _stage_v(u, vnat, M, p, m, r, cur, falling, sM, sm, kind, par, tab, atoms, bank, a1, a2, w, state)
    I = math.exp(u)
    K[2, 0] = beta * S - delta
    K[2, 1] = -beta * I * S - v * S - mu * S + mu

    u = u0 + h * (_A41 * K[0, 0] + _A42 * K[1, 0] + _A43 * K[2, 0])
    S = S0 + h * (_A41 * K[0, 1] + _A42 * K[1, 1] + _A43 * K[2, 1])
    v = _stage_v(u, vnat, M, p, m, r, cur, falling, sM, sm, kind, par, tab, atoms, bank, a1, a2, w, state)
    I = math.exp(u)
    K[3, 0] = beta * S - delta
    K[3, 1] = -beta * I * S - v * S - mu * S + mu

    u = u0 + h * (_A51 * K[0, 0] + _A52 * K[1, 0] + _A53 * K[2, 0] + _A54 * K[3, 0])
    S = S0 + h * (_A51 * K[0, 1] + _A52 * K[1, 1] + _A53 * K[2, 1] + _A54 * K[3, 1])
    v = _stage_v(u, vnat, M, p, m, r, cur, falling, sM, sm, kind, par, tab, atoms, bank, a1, a2, w, state)
    I = math.exp(u)
    K[4, 0] = beta * S - delta
    K[4, 1] = -beta * I * S - v * S - mu * S + mu

    u = u0 + h * (_A61 * K[0, 0] + _A62 * K[1, 0] + _A63 * K[2, 0] + _A64 * K[3, 0]
                  + _A65 * K[4, 0])
    S = S0 + h * (_A61 * K[0, 1] + _A62 * K[1, 1] + _A63 * K[2, 1] + _A64 * K[3, 1]
                  + _A65 * K[4, 1])
    v = _stage_v(u, vnat, M, p, m, r, cur, falling, sM, sm, kind, par, tab, atoms, bank, a1, a2, w, state)
    I = math.exp(u)
    K[5, 0] = beta * S - delta
    K[5, 1] = -beta * I * S - v * S - mu * S + mu

    u1 = u0 + h * (_B1 * K[0, 0] + _B3 * K[2, 0] + _B4 * K[3, 0] + _B5 * K[4, 0]
                   + _B6 * K[5, 0])
    S1 = S0 + h * (_B1 * K[0, 1] + _B3 * K[2, 1] + _B4 * K[3, 1] + _B5 * K[4, 1]
                   + _B6 * K[5, 1])
    v1 = _stage_v(u1, vnat, M, p, m, r, cur, falling, sM, sm, kind, par, tab, atoms, bank, a1, a2, w, state)
    I = math.exp(u1)
    K[6, 0] = beta * S1 - delta
    K[6, 1] = -beta * I * S1 - v1 * S1 - mu * S1 + mu

    eu = h * (_E1 * K[0, 0] + _E3 * K[2, 0] + _E4 * K[3, 0] + _E5 * K[4, 0]
              + _E6 * K[5, 0] + _E7 * K[6, 0])
    eS = h * (_E1 * K[0, 1] + _E3 * K[2, 1] + _E4 * K[3, 1] + _E5 * K[4, 1]
              + _E6 * K[5, 1] + _E7 * K[6, 1])
    return u1, S1, eu, eS, v1
