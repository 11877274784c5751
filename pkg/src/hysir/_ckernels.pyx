# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels; see ``_pykernels.py`` for the reference twin."""
from libc.math cimport erf, erfc, exp, sqrt, M_PI, INFINITY

DEF NGL = 8

cdef int UNIFORM = 0
cdef int GAUSSIAN = 1
cdef int DISCRETE = 2

cdef double TREND_TOL = 1e-14
cdef double _SQRT2 = sqrt(2.0)
cdef double _SQRT_HALF_PI = sqrt(0.5 * M_PI)

cdef double[8] GL_X = [-0.9602898564975362, -0.7966664774136267, -0.525532409916329,
                       -0.18343464249564978, 0.18343464249564978, 0.525532409916329,
                       0.7966664774136267, 0.9602898564975362]
cdef double[8] GL_W = [0.10122853629037669, 0.22238103445337434, 0.31370664587788705,
                       0.36268378337836177, 0.36268378337836177, 0.31370664587788705,
                       0.22238103445337434, 0.10122853629037669]

cdef double _A21 = 1.0 / 5.0
cdef double _A31 = 3.0 / 40.0
cdef double _A32 = 9.0 / 40.0
cdef double _A41 = 44.0 / 45.0
cdef double _A42 = -56.0 / 15.0
cdef double _A43 = 32.0 / 9.0
cdef double _A51 = 19372.0 / 6561.0
cdef double _A52 = -25360.0 / 2187.0
cdef double _A53 = 64448.0 / 6561.0
cdef double _A54 = -212.0 / 729.0
cdef double _A61 = 9017.0 / 3168.0
cdef double _A62 = -355.0 / 33.0
cdef double _A63 = 46732.0 / 5247.0
cdef double _A64 = 49.0 / 176.0
cdef double _A65 = -5103.0 / 18656.0
cdef double _B1 = 35.0 / 384.0
cdef double _B3 = 500.0 / 1113.0
cdef double _B4 = 125.0 / 192.0
cdef double _B5 = -2187.0 / 6784.0
cdef double _B6 = 11.0 / 84.0
cdef double _E1 = -71.0 / 57600.0
cdef double _E3 = 71.0 / 16695.0
cdef double _E4 = -71.0 / 1920.0
cdef double _E5 = 17253.0 / 339200.0
cdef double _E6 = -22.0 / 525.0
cdef double _E7 = 1.0 / 40.0


cdef inline double _gauss_int(double a, double b, double mean, double s) nogil:
    cdef double k, za, zb
    if b <= a:
        return 0.0
    k = s * _SQRT_HALF_PI
    za = (a - mean) / (s * _SQRT2)
    zb = (b - mean) / (s * _SQRT2)
    if za > 0.0:
        return k * (erfc(za) - erfc(zb))
    if zb < 0.0:
        return k * (erfc(-zb) - erfc(-za))
    return k * (erf(zb) - erf(za))


cdef inline double _gauss_tri_density(double a, const double[::1] par) nogil:
    cdef double s = par[3]
    cdef double d = (a - par[2]) / s
    return par[0] * exp(-0.5 * d * d) * _gauss_int(0.0, a, par[1], s)


cdef double _gauss_panel(double a, double b, const double[::1] par) nogil:
    cdef double half, mid, acc
    cdef int i
    if b <= a:
        return 0.0
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    acc = 0.0
    for i in range(NGL):
        acc += GL_W[i] * _gauss_tri_density(mid + half * GL_X[i], par)
    return half * acc


cdef double _tri_mass(double x, int kind, const double[::1] par, const double[::1] tab,
                      const double[:, ::1] atoms) nogil:
    cdef double h, total
    cdef Py_ssize_t i, n, k
    if x <= 0.0:
        return 0.0
    if x > 1.0:
        x = 1.0
    if kind == UNIFORM:
        return 0.5 * par[0] * x * x
    if kind == GAUSSIAN:
        h = par[4]
        i = <Py_ssize_t>(x / h)
        n = tab.shape[0]
        if i > n - 1:
            i = n - 1
        return tab[i] + _gauss_panel(i * h, x, par)
    total = 0.0
    for k in range(atoms.shape[0]):
        if atoms[k, 1] <= x:
            total += atoms[k, 2]
    return total


cdef double _rect_mass(double a_lo, double a_hi, double b_lo, double b_hi, int kind,
                       const double[::1] par, const double[::1] tab,
                       const double[:, ::1] atoms) nogil:
    cdef double total, a1, a2
    cdef Py_ssize_t k
    if a_hi <= a_lo or b_hi <= b_lo:
        return 0.0
    if kind == UNIFORM:
        return par[0] * (a_hi - a_lo) * (b_hi - b_lo)
    if kind == GAUSSIAN:
        return (par[0] * _gauss_int(a_lo, a_hi, par[1], par[3])
                * _gauss_int(b_lo, b_hi, par[2], par[3]))
    total = 0.0
    for k in range(atoms.shape[0]):
        a1 = atoms[k, 0]
        a2 = atoms[k, 1]
        if a_lo <= a1 and a1 < a_hi and b_lo < a2 and a2 <= b_hi:
            total += atoms[k, 2]
    return total


cdef double _piece_mass(double lo, double hi, double cap, int kind, const double[::1] par,
                        const double[::1] tab, const double[:, ::1] atoms) nogil:
    if hi <= lo:
        return 0.0
    if cap >= hi:
        return _tri_mass(hi, kind, par, tab, atoms) - _tri_mass(lo, kind, par, tab, atoms)
    if cap <= lo:
        return _rect_mass(0.0, cap, lo, hi, kind, par, tab, atoms)
    return (_tri_mass(cap, kind, par, tab, atoms) - _tri_mass(lo, kind, par, tab, atoms)
            + _rect_mass(0.0, cap, cap, hi, kind, par, tab, atoms))


cdef double _profile_mass(const double[::1] M, Py_ssize_t p, const double[::1] m, Py_ssize_t r,
                          double cur, bint falling, int kind, const double[::1] par,
                          const double[::1] tab, const double[:, ::1] atoms) nogil:
    cdef double total = 0.0
    cdef double hi, lo, cap
    cdef Py_ssize_t j
    if falling:
        for j in range(p):
            hi = M[j]
            lo = M[j + 1] if j + 1 < p else 0.0
            cap = m[j] if j < r else cur
            total += _piece_mass(lo, hi, cap, kind, par, tab, atoms)
    else:
        for j in range(p + 1):
            if j < p:
                hi = M[j]
                lo = M[j + 1] if j + 1 < p else cur
                cap = m[j]
            else:
                hi = cur
                lo = 0.0
                cap = INFINITY
            total += _piece_mass(lo, hi, cap, kind, par, tab, atoms)
    return total


cdef struct SweepResult:
    Py_ssize_t p
    Py_ssize_t r
    double cur
    bint falling


cdef SweepResult _sweep(double[::1] M, Py_ssize_t p, double[::1] m, Py_ssize_t r,
                        double cur, bint falling, double x) nogil:
    cdef SweepResult res
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
    res.p = p
    res.r = r
    res.cur = cur
    res.falling = falling
    return res


cdef double _swept_mass(const double[::1] M, Py_ssize_t p, const double[::1] m, Py_ssize_t r,
                        double cur, bint falling, double x, double[::1] sM, double[::1] sm,
                        int kind, const double[::1] par, const double[::1] tab,
                        const double[:, ::1] atoms) nogil:
    cdef Py_ssize_t i
    cdef SweepResult s
    for i in range(p):
        sM[i] = M[i]
    for i in range(r):
        sm[i] = m[i]
    s = _sweep(sM, p, sm, r, cur, falling, x)
    return _profile_mass(sM, s.p, sm, s.r, s.cur, s.falling, kind, par, tab, atoms)


cdef double _bank_swept_mass(const double[::1] a1, const double[::1] a2, const double[::1] w,
                             const unsigned char[::1] state, double x) nogil:
    cdef double total = 0.0
    cdef Py_ssize_t k
    for k in range(w.shape[0]):
        if x >= a2[k] or (state[k] and x > a1[k]):
            total += w[k]
    return total


# Python-visible wrappers -------------------------------------------------

def gauss_int(double a, double b, double mean, double s):
    return _gauss_int(a, b, mean, s)


def gauss_panel(double a, double b, const double[::1] par):
    return _gauss_panel(a, b, par)


def tri_mass(double x, int kind, const double[::1] par, const double[::1] tab,
             const double[:, ::1] atoms):
    return _tri_mass(x, kind, par, tab, atoms)


def rect_mass(double a_lo, double a_hi, double b_lo, double b_hi, int kind,
              const double[::1] par, const double[::1] tab, const double[:, ::1] atoms):
    return _rect_mass(a_lo, a_hi, b_lo, b_hi, kind, par, tab, atoms)


def piece_mass(double lo, double hi, double cap, int kind, const double[::1] par,
               const double[::1] tab, const double[:, ::1] atoms):
    return _piece_mass(lo, hi, cap, kind, par, tab, atoms)


def profile_mass(const double[::1] M, Py_ssize_t p, const double[::1] m, Py_ssize_t r,
                 double cur, bint falling, int kind, const double[::1] par,
                 const double[::1] tab, const double[:, ::1] atoms):
    return _profile_mass(M, p, m, r, cur, falling, kind, par, tab, atoms)


def sweep(double[::1] M, Py_ssize_t p, double[::1] m, Py_ssize_t r, double cur,
          bint falling, double x):
    cdef SweepResult s = _sweep(M, p, m, r, cur, falling, x)
    return s.p, s.r, s.cur, bool(s.falling)


def swept_mass(const double[::1] M, Py_ssize_t p, const double[::1] m, Py_ssize_t r,
               double cur, bint falling, double x, double[::1] sM, double[::1] sm,
               int kind, const double[::1] par, const double[::1] tab,
               const double[:, ::1] atoms):
    return _swept_mass(M, p, m, r, cur, falling, x, sM, sm, kind, par, tab, atoms)


def bank_swept_mass(const double[::1] a1, const double[::1] a2, const double[::1] w,
                    const unsigned char[::1] state, double x):
    return _bank_swept_mass(a1, a2, w, state, x)


def bank_apply(const double[::1] a1, const double[::1] a2, unsigned char[::1] state, double x):
    cdef Py_ssize_t k
    cdef long n = 0
    for k in range(state.shape[0]):
        if x >= a2[k]:
            if not state[k]:
                state[k] = 1
                n += 1
        elif x <= a1[k]:
            if state[k]:
                state[k] = 0
                n += 1
    return n


cdef inline double _stage_v(double u, double vnat, const double[::1] M, Py_ssize_t p,
                            const double[::1] m, Py_ssize_t r, double cur, bint falling,
                            double[::1] sM, double[::1] sm, int kind, const double[::1] par,
                            const double[::1] tab, const double[:, ::1] atoms, bint bank,
                            const double[::1] a1, const double[::1] a2, const double[::1] w,
                            const unsigned char[::1] state) nogil:
    cdef double x = exp(u)
    if bank:
        return vnat + _bank_swept_mass(a1, a2, w, state, x)
    return vnat + _swept_mass(M, p, m, r, cur, falling, x, sM, sm, kind, par, tab, atoms)


def dp5_step(double u0, double S0, double fu0, double fS0, double h, double beta,
             double delta, double mu, double vnat,
             const double[::1] M, Py_ssize_t p, const double[::1] m, Py_ssize_t r,
             double cur, bint falling, double[::1] sM, double[::1] sm,
             int kind, const double[::1] par, const double[::1] tab,
             const double[:, ::1] atoms, bint bank, const double[::1] a1,
             const double[::1] a2, const double[::1] w, const unsigned char[::1] state,
             double[:, ::1] K):
    cdef double u, S, v, I, u1, S1, v1, eu, eS
    K[0, 0] = fu0
    K[0, 1] = fS0

    u = u0 + h * _A21 * K[0, 0]
    S = S0 + h * _A21 * K[0, 1]
    v = _stage_v(u, vnat, M, p, m, r, cur, falling, sM, sm, kind, par, tab, atoms, bank, a1, a2, w, state)
    I = exp(u)
    K[1, 0] = beta * S - delta
    K[1, 1] = -beta * I * S - v * S - mu * S + mu

    u = u0 + h * (_A31 * K[0, 0] + _A32 * K[1, 0])
    S = S0 + h * (_A31 * K[0, 1] + _A32 * K[1, 1])
    v = _stage_v(u, vnat, M, p, m, r, cur, falling, sM, sm, kind, par, tab, atoms, bank, a1, a2, w, state)
    I = exp(u)
    K[2, 0] = beta * S - delta
    K[2, 1] = -beta * I * S - v * S - mu * S + mu

    u = u0 + h * (_A41 * K[0, 0] + _A42 * K[1, 0] + _A43 * K[2, 0])
    S = S0 + h * (_A41 * K[0, 1] + _A42 * K[1, 1] + _A43 * K[2, 1])
    v = _stage_v(u, vnat, M, p, m, r, cur, falling, sM, sm, kind, par, tab, atoms, bank, a1, a2, w, state)
    I = exp(u)
    K[3, 0] = beta * S - delta
    K[3, 1] = -beta * I * S - v * S - mu * S + mu

    u = u0 + h * (_A51 * K[0, 0] + _A52 * K[1, 0] + _A53 * K[2, 0] + _A54 * K[3, 0])
    S = S0 + h * (_A51 * K[0, 1] + _A52 * K[1, 1] + _A53 * K[2, 1] + _A54 * K[3, 1])
    v = _stage_v(u, vnat, M, p, m, r, cur, falling, sM, sm, kind, par, tab, atoms, bank, a1, a2, w, state)
    I = exp(u)
    K[4, 0] = beta * S - delta
    K[4, 1] = -beta * I * S - v * S - mu * S + mu

    u = u0 + h * (_A61 * K[0, 0] + _A62 * K[1, 0] + _A63 * K[2, 0] + _A64 * K[3, 0]
                  + _A65 * K[4, 0])
    S = S0 + h * (_A61 * K[0, 1] + _A62 * K[1, 1] + _A63 * K[2, 1] + _A64 * K[3, 1]
                  + _A65 * K[4, 1])
    v = _stage_v(u, vnat, M, p, m, r, cur, falling, sM, sm, kind, par, tab, atoms, bank, a1, a2, w, state)
    I = exp(u)
    K[5, 0] = beta * S - delta
    K[5, 1] = -beta * I * S - v * S - mu * S + mu

    u1 = u0 + h * (_B1 * K[0, 0] + _B3 * K[2, 0] + _B4 * K[3, 0] + _B5 * K[4, 0]
                   + _B6 * K[5, 0])
    S1 = S0 + h * (_B1 * K[0, 1] + _B3 * K[2, 1] + _B4 * K[3, 1] + _B5 * K[4, 1]
                   + _B6 * K[5, 1])
    v1 = _stage_v(u1, vnat, M, p, m, r, cur, falling, sM, sm, kind, par, tab, atoms, bank, a1, a2, w, state)
    I = exp(u1)
    K[6, 0] = beta * S1 - delta
    K[6, 1] = -beta * I * S1 - v1 * S1 - mu * S1 + mu

    eu = h * (_E1 * K[0, 0] + _E3 * K[2, 0] + _E4 * K[3, 0] + _E5 * K[4, 0]
              + _E6 * K[5, 0] + _E7 * K[6, 0])
    eS = h * (_E1 * K[0, 1] + _E3 * K[2, 1] + _E4 * K[3, 1] + _E5 * K[4, 1]
              + _E6 * K[5, 1] + _E7 * K[6, 1])
    return u1, S1, eu, eS, v1
