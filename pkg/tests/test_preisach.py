"""Relays, staircase memory, densities and loop geometry."""
import math

import numpy as np
import pytest
from scipy import integrate, optimize

from hysir.errors import DomainError, ValidationError
from hysir.preisach import (OFF, ON, Branch, Density, MemoryStaircase, RelayBank, Thresholds,
                            branch_eval, discrete_density, discretize, gaussian_density,
                            lipschitz_K, loop_ratio_L, loop_width, preisach_output, relay_step,
                            staircase_init, staircase_update, state_distance, uniform_density)


def swept(path, I0=0.0):
    mem = MemoryStaircase.virgin(I0)
    for x in path:
        mem.update(x)
    return mem


# --- relay --------------------------------------------------------------------

@pytest.mark.parametrize("state, x, expected", [(OFF, 0.1, OFF), (OFF, 0.5, ON), (ON, 0.3, ON)])
def test_relay_step_examples(state, x, expected):
    assert relay_step(Thresholds(0.2, 0.5), state, x) == expected


def test_relay_closed_thresholds():
    th = Thresholds(0.2, 0.5)
    assert relay_step(th, ON, 0.2) == OFF
    assert relay_step(th, OFF, 0.2) == OFF
    assert relay_step(th, ON, 0.49999) == ON


@pytest.mark.parametrize("a1, a2", [(0.5, 0.2), (0.3, 0.3), (-0.1, 0.5), (0.2, 1.5)])
def test_thresholds_validated(a1, a2):
    with pytest.raises(DomainError):
        Thresholds(a1, a2)


# --- staircase ----------------------------------------------------------------

def test_virgin_init():
    mem = staircase_init(1e-5, "virgin")
    assert mem.maxima == [] and mem.minima == [] and mem.current == 1e-5


def test_virgin_on_mass_negligible(gauss_cycle):
    # the virgin state counts relays with a2 <= I0 as ON; at I0 = 1e-5 that mass is tiny
    assert preisach_output(staircase_init(1e-5), gauss_cycle) < 1e-12
    assert preisach_output(staircase_init(0.0), gauss_cycle) == 0.0


def test_explicit_init():
    mem = staircase_init(0.3, "explicit", MemoryStaircase([0.6], [0.1], 0.3, "rising"))
    assert mem.maxima == [0.6] and mem.minima == [0.1]
    with pytest.raises(ValidationError):
        staircase_init(0.3, "explicit", MemoryStaircase.__new__(MemoryStaircase).__class__([0.2], [], 0.3))


def test_explicit_init_errors():
    bad = MemoryStaircase.__new__(MemoryStaircase)
    bad.maxima, bad.minima, bad.current, bad.trend = [0.2], [], 0.3, "falling"
    with pytest.raises(ValidationError):
        staircase_init(0.3, "explicit", bad)
    with pytest.raises(ValidationError):
        staircase_init(0.3, "explicit", MemoryStaircase([0.6], [0.1], 0.25, "rising"))
    with pytest.raises(ValidationError):
        staircase_init(0.3, "bogus")


@pytest.mark.parametrize("M, m, cur, trend", [
    ([0.5, 0.6], [], 0.3, "flat"),
    ([0.6], [0.7], 0.65, "rising"),
    ([0.6, 0.4], [0.3, 0.2], 0.35, "rising"),
    ([0.6], [], 0.3, "rising"),
    ([], [], 0.3, "sideways"),
    ([0.6], [0.1], 1.3, "rising"),
])
def test_staircase_invariants(M, m, cur, trend):
    with pytest.raises(ValidationError):
        MemoryStaircase(M, m, cur, trend)


def test_update_wipes_out(brute_bank):
    mem = swept([0.5, 0.2, 0.4])
    assert mem.maxima == [0.5] and mem.minima == [0.2] and mem.current == 0.4
    mem2 = staircase_update(mem, 0.6)
    assert mem2.maxima == [] and mem2.minima == [] and mem2.current == 0.6
    assert mem.current == 0.4  # pure
    bank = brute_bank(200)
    for x in (0.5, 0.2, 0.4, 0.6):
        bank.feed(x)
    assert np.array_equal(mem2.is_on(bank.a1, bank.a2), bank.state)
    # an all-ON field up to 0.6 is exactly the virgin state at 0.6
    assert np.array_equal(MemoryStaircase.virgin(0.6).is_on(bank.a1, bank.a2), bank.state)


def test_update_identity():
    mem = swept([0.5, 0.2])
    assert staircase_update(mem, 0.2) == mem


def test_update_falling(brute_bank):
    mem = swept([0.5, 0.3])
    assert mem.maxima == [0.5] and mem.minima == [] and mem.current == 0.3 and mem.trend == "falling"
    bank = brute_bank(200)
    for x in (0.5, 0.3):
        bank.feed(x)
    assert np.array_equal(mem.is_on(bank.a1, bank.a2), bank.state)


def test_trend_tolerance():
    mem = swept([0.5, 0.2])
    mem.update(0.2 + 1e-15)
    assert mem.trend == "falling" and mem.minima == []
    mem.update(0.2 - 5e-15)  # continued motion is always recorded
    assert mem.current == 0.2 - 5e-15


def test_staircase_json_roundtrip():
    mem = swept([0.5, 0.2, 0.4, 0.3])
    back = MemoryStaircase.from_json(mem.to_json())
    assert back == mem
    with pytest.raises(ValidationError):
        MemoryStaircase.from_json({"maxima": [0.5]})


# --- output ---------------------------------------------------------------------

def test_output_virgin_and_saturated(gauss_cycle, gauss_wide):
    for d in (gauss_cycle, gauss_wide):
        assert preisach_output(staircase_init(0.0), d) == 0.0
        assert preisach_output(swept([1.0]), d) == pytest.approx(1.0, abs=1e-10)


def test_output_includes_v_nat(gauss_wide):
    d = gauss_wide.with_v_nat(0.01)
    assert preisach_output(swept([1.0]), d) == pytest.approx(1.01, abs=1e-10)


def test_output_uniform_vs_bank(brute_bank):
    c, I2, I = 1.3, 0.7, 0.35
    mem = swept([I2, I])
    # ON region: triangle under a2 <= I plus the strip a1 < I, I < a2 <= I2
    area = I * I / 2 + I * (I2 - I)
    assert preisach_output(mem, uniform_density(c)) == pytest.approx(c * area, rel=1e-14)
    n = 300
    bank = brute_bank(n)
    bank.feed(I2)
    bank.feed(I)
    assert abs(c * bank.state.sum() / n ** 2 - preisach_output(mem, uniform_density(c))) < 2e-3 * c


def test_output_discrete_density():
    d = discrete_density([(0.1, 0.4, 0.25), (0.2, 0.8, 0.5)])
    assert preisach_output(swept([0.5]), d) == 0.25
    assert preisach_output(swept([0.9, 0.25]), d) == 0.75
    assert preisach_output(swept([0.9, 0.15]), d) == 0.25
    assert preisach_output(swept([0.9, 0.1]), d) == 0.0


# --- branches -------------------------------------------------------------------

def test_branch_at_current(gauss_wide):
    mem = swept([0.5, 0.2, 0.4])
    assert branch_eval(mem, gauss_wide, 0.4) == pytest.approx(preisach_output(mem, gauss_wide), abs=1e-15)


def test_branch_uniform_virgin():
    c = 0.8
    b = Branch(staircase_init(0.0), uniform_density(c))
    for I in (0.1, 0.37, 0.9):
        assert b(I) == pytest.approx(c * I * I / 2, rel=1e-14)


def test_branch_loop_width(gauss_wide):
    I2 = 0.01
    up = Branch(staircase_init(0.0), gauss_wide)
    down = Branch(swept([I2]), gauss_wide)
    for I in np.linspace(0.0, I2, 11):
        assert down(I) - up(I) == pytest.approx(loop_width(gauss_wide, 0.0, I, I2), abs=1e-15)


def test_branch_leaves_memory_alone(gauss_wide):
    mem = swept([0.5, 0.2])
    snap = mem.to_json()
    Branch(mem, gauss_wide)(0.45)
    assert mem.to_json() == snap


def test_branch_bank():
    bank = discretize(uniform_density(1.0), 20, memory=swept([0.6, 0.3]))
    b = Branch(bank, uniform_density(1.0))
    probe = bank.copy()
    probe.update(0.5)
    assert b(0.5) == pytest.approx(probe.output(), abs=1e-14)
    assert b.breakpoints[0] == bank.a1.min()


# --- loop width ----------------------------------------------------------------

def test_loop_width_endpoints(gauss_wide):
    assert loop_width(gauss_wide, 0.0, 0.0, 0.01) == 0.0
    assert loop_width(gauss_wide, 0.0, 0.01, 0.01) == 0.0


def test_loop_width_uniform():
    c = 2.5
    assert loop_width(uniform_density(c), 0.1, 0.3, 0.7) == pytest.approx(c * 0.2 * 0.4, rel=1e-14)


def test_loop_width_quadrature(gauss_wide):
    d = gauss_wide
    ref, _ = integrate.dblquad(lambda a1, a2: float(d.q(a1, a2)), 0.005, 0.01, 0.0, 0.005,
                               epsabs=0.0, epsrel=1e-12)
    assert loop_width(d, 0.0, 0.005, 0.01) == pytest.approx(ref, rel=1e-8)


def test_loop_width_ordering(gauss_wide):
    with pytest.raises(DomainError):
        loop_width(gauss_wide, 0.3, 0.2, 0.5)
    with pytest.raises(DomainError):
        loop_width(gauss_wide, 0.1, 0.2, 1.5)


# --- K and L -------------------------------------------------------------------

def test_K_simple():
    assert lipschitz_K(uniform_density(3.0)) == 3.0
    assert lipschitz_K(uniform_density(0.0)) == 0.0


def test_K_quadrature(gauss_wide):
    d = gauss_wide

    def col(a1):
        return integrate.quad(lambda a2: float(d.q(a1, a2)) if a2 > a1 else 0.0, a1, 1.0,
                              epsabs=0.0, epsrel=1e-12, limit=200)[0]

    grid = np.linspace(0.0, 1.0, 401)
    vals = [col(a) for a in grid]
    k = int(np.argmax(vals))
    res = optimize.minimize_scalar(lambda a: -col(a), bounds=(grid[max(k - 1, 0)], grid[k + 1]),
                                   method="bounded", options={"xatol": 1e-12})
    ref = max(vals[k], -res.fun)
    assert lipschitz_K(d) == pytest.approx(ref, rel=1e-6)


def test_L_uniform():
    assert loop_ratio_L(uniform_density(2.0)).value == pytest.approx(0.5, rel=1e-8)
    assert loop_ratio_L(uniform_density(0.0)).value == 0.0


def _brute_L(d, n=200):
    # plain grid over (I1, I, I2) clustered where the density lives
    base = np.linspace(0.0, 1.0, n)
    fine = np.linspace(0.0, min(1.0, d.alpha_m2 + 8 * d.sigma), n)
    g = np.unique(np.concatenate((base, fine)))
    best = 0.0
    for i, I1 in enumerate(g):
        for I2 in g[i + 1:]:
            inner = np.linspace(I1, I2, 33)
            w = max(loop_width(d, I1, I, I2) for I in inner)
            best = max(best, w / (I2 - I1))
    return best


def test_L_decreases_with_sigma(gauss_cycle, gauss_mid, gauss_wide):
    Ls = [loop_ratio_L(d).value for d in (gauss_cycle, gauss_mid, gauss_wide)]
    assert Ls[0] > Ls[1] > Ls[2] > 0.0
    for d, L in zip((gauss_cycle, gauss_mid, gauss_wide), Ls):
        assert L <= lipschitz_K(d) * (1 + 1e-12)


@pytest.mark.slow
def test_L_not_below_grid(gauss_mid, gauss_wide):
    for d in (gauss_mid, gauss_wide):
        assert loop_ratio_L(d).value >= _brute_L(d, 60) * (1 - 1e-12)


def test_L_discrete():
    d = discrete_density([(0.2, 0.4, 0.5)])
    # best loop just encloses the relay: I1 = 0.2, I2 = 0.4, width 0.5
    assert loop_ratio_L(d).value == pytest.approx(0.5 / 0.2, rel=1e-9)
    assert math.isinf(lipschitz_K(d))


# --- densities -----------------------------------------------------------------

@pytest.mark.parametrize("m1, m2, s", [(0.0002, 0.0055, 0.01), (0.0002, 0.0055, 0.1), (0.3, 0.6, 0.05)])
def test_gaussian_normalised(m1, m2, s):
    d = gaussian_density(m1, m2, s)
    hi = min(1.0, m2 + 12 * s)
    total, _ = integrate.dblquad(lambda a2, a1: float(d.q(a1, a2)), 0.0, hi, lambda a1: a1,
                                 lambda a1: hi, epsabs=0.0, epsrel=1e-11)
    assert total == pytest.approx(1.0, abs=1e-8)
    assert d.total() == pytest.approx(1.0, abs=1e-10)


def test_gaussian_accepted(gauss_cycle):
    assert gauss_cycle.total() == pytest.approx(1.0, abs=1e-10)
    narrow, _ = integrate.dblquad(lambda a2, a1: float(gauss_cycle.q(a1, a2)), 0.0, 0.02,
                                  lambda a1: a1, lambda a1: 0.02, epsabs=0.0, epsrel=1e-11)
    assert narrow == pytest.approx(1.0, abs=1e-8)


def test_gaussian_wide_limit():
    assert gaussian_density(0.0002, 0.0055, 100.0).A == pytest.approx(2.0, rel=0.01)


@pytest.mark.parametrize("s", [0.0, -0.1])
def test_gaussian_bad_sigma(s):
    with pytest.raises(DomainError):
        gaussian_density(0.1, 0.2, s)


@pytest.mark.parametrize("d", [gaussian_density(0.3, 0.6, 0.1), uniform_density(1.5, v_nat=0.2),
                               discrete_density([(0.1, 0.2, 0.3)])], ids=lambda d: d.kind)
def test_density_json_roundtrip(d):
    back = Density.from_json(d.to_json())
    assert back == d


def test_density_json_errors():
    with pytest.raises(ValidationError):
        Density.from_json({"kind": "lognormal"})
    with pytest.raises(ValidationError):
        Density.from_json({"kind": "gaussian", "alpha_m1": 0.1})
    with pytest.raises(ValidationError):
        Density.from_json([1, 2])


# --- discretisation ------------------------------------------------------------

def test_discretize_single_atom():
    q0, th = 0.7, (0.2, 0.5)
    d = discrete_density([(*th, q0)], v_nat=0.01)
    bank = discretize(d, 1, memory=staircase_init(0.0))
    assert len(bank) == 1
    for x, want in [(0.4, 0), (0.5, 1), (0.3, 1), (0.2, 0), (0.6, 1)]:
        bank.update(x)
        assert preisach_output(bank, d) == pytest.approx(0.01 + q0 * want)
        assert bank.state[0] == relay_step(Thresholds(*th), 1 - want if x in (0.5, 0.2) else want, x)


@pytest.mark.parametrize("N", [1, 7, 50])
def test_discretize_total_weight(N, gauss_wide):
    for d in (gauss_wide, uniform_density(1.2)):
        assert discretize(d, N).w.sum() == pytest.approx(d.total(), rel=1e-12)


def test_discretize_first_order():
    ext = [0.51234, 0.20711, 0.41421, 0.27183, 0.33333]
    xs, prev = [], 0.0
    for e in ext:
        xs += list(np.linspace(prev, e, 400)[1:])
        prev = e
    for d in (uniform_density(1.0), gaussian_density(0.3, 0.6, 0.1)):
        errs = []
        for N in (50, 100, 200):
            mem = staircase_init(0.0)
            bank = discretize(d, N, memory=staircase_init(0.0))
            err = 0.0
            for x in xs:
                mem.update(x)
                bank.update(x)
                err = max(err, abs(bank.output() - preisach_output(mem, d)))
            errs.append(err)
        for a, b in zip(errs, errs[1:]):
            assert 1.6 < a / b < 2.5


def test_discretize_follows_memory():
    mem = swept([0.6, 0.2, 0.45])
    bank = discretize(uniform_density(1.0), 40, memory=mem)
    assert bank.current == 0.45
    assert np.array_equal(bank.state.astype(bool), mem.is_on(bank.a1, bank.a2))


def test_bank_json_roundtrip():
    bank = discretize(gaussian_density(0.3, 0.6, 0.1), 10, memory=swept([0.7, 0.35]))
    assert RelayBank.from_json(bank.to_json()) == bank


def test_bank_incompatible_state():
    with pytest.raises(ValidationError):
        RelayBank([0.1], [0.3], [1.0], [0], 0.5)
    with pytest.raises(ValidationError):
        RelayBank([0.1], [0.3], [-1.0], [1], 0.5)


# --- state distance ------------------------------------------------------------

def test_state_distance_examples(gauss_wide):
    d = gaussian_density(0.3, 0.6, 0.1)
    a = swept([0.6, 0.1])
    assert state_distance(a, a.copy(), d) == 0.0
    assert state_distance(staircase_init(0.0), swept([1.0]), d) == pytest.approx(1.0, abs=1e-10)
    b = swept([0.5, 0.1])
    ref, _ = integrate.dblquad(lambda a1, a2: float(d.q(a1, a2)), 0.5, 0.6, 0.0, 0.1,
                               epsabs=0.0, epsrel=1e-12)
    assert state_distance(a, b, d) == pytest.approx(ref, rel=1e-9)
    assert state_distance(b, a, d) == state_distance(a, b, d)


def test_state_distance_banks():
    d = uniform_density(1.0)
    a = discretize(d, 30, memory=swept([0.6, 0.1]))
    b = discretize(d, 30, memory=swept([0.5, 0.1]))
    assert state_distance(a, b, d) == pytest.approx(abs(a.output() - b.output()))
    with pytest.raises(TypeError):
        state_distance(a, swept([0.6, 0.1]), d)
