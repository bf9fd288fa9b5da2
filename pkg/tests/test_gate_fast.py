import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kerrgate.errors import DomainError
from kerrgate.gate_fast import (
    FastKerrParams,
    amplitude_11,
    amplitude_integral,
    fast_terms,
    fidelity_fast,
    fidelity_slow,
    log_abs_term_fast,
    output_grid,
    output_state_fast,
    psi_n_fast,
    retained_orders,
    term_fast,
    theta,
)
from kerrgate.jsa import GriddedAmplitude, analytic_overlap, evaluate, input_state, schmidt, to_grid


def series_reference(X: float, eta: float, dps: int = 60) -> complex:
    """The raw series summed in extended precision."""
    with mpmath.workdps(dps):
        X, eta = mpmath.mpf(X), mpmath.mpf(eta)
        total, n = mpmath.mpc(0), 0
        while True:
            t = (-1j * X) ** n / mpmath.factorial(n) * eta / mpmath.sqrt(n + eta ** 2)
            total += t
            if n > abs(X) + 10 and abs(t) < mpmath.mpf(10) ** (-dps + 5):
                return complex(total)
            n += 1


def P(X, eta=0.01, sigma=1.0):
    return FastKerrParams.from_eta(X, eta, sigma=sigma)


# ---------------------------------------------------------------- params


def test_params_validation():
    for kw in ({"sigma": 0}, {"M": -1}, {"n_max": 0}, {"n_max": 1001}, {"tol": 0}):
        args = {"sigma": 1.0, "M": 100.0, "X": 1.0, **kw}
        with pytest.raises(DomainError):
            FastKerrParams(**args)
    assert P(1.0, 0.02).eta == pytest.approx(0.02)


# ---------------------------------------------------------------- term_fast


def test_term_zero():
    for X in (0.0, 3.0, -50.0):
        for eta in (1e-4, 1.0, 1e3):
            assert term_fast(0, X, eta) == 1


def test_term_one():
    assert term_fast(1, 1.0, 0.01) == pytest.approx(-1j * 0.01 / math.sqrt(1.0001), rel=1e-15)


def test_term_150_log_magnitude():
    ref = 150 * math.log(10) - math.lgamma(151) + math.log(0.01) - 0.5 * math.log(150.0001)
    assert log_abs_term_fast(150, 10.0, 0.01) == pytest.approx(ref, rel=1e-10)
    assert math.log(abs(term_fast(150, 10.0, 0.01))) == pytest.approx(ref, rel=1e-10)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.0, 100.0), st.sampled_from([1e-3, 1e-2, 0.1, 1.0]))
def test_recurrence_matches_direct(X, eta):
    rec = fast_terms(X, eta, 201)
    for n in range(201):
        d = term_fast(n, X, eta)
        if abs(d) < 1e-290:
            continue  # both underflow toward zero
        assert abs(rec[n] - d) <= 1e-10 * abs(d)


def test_term_bad_args():
    with pytest.raises(DomainError):
        term_fast(-1, 1.0, 0.1)
    with pytest.raises(DomainError):
        term_fast(1, 1.0, 0.0)


# ---------------------------------------------------------------- amplitude


def test_amplitude_identity():
    assert amplitude_11(P(0.0)).value == 1


def test_amplitude_large_eta_recovers_exponential():
    a = amplitude_11(P(math.pi, 1e6)).value
    assert abs(a - (-1)) < 1e-4


def test_amplitude_large_X_barely_changed():
    a = amplitude_11(P(100.0)).value
    assert 0.999 < abs(a) < 1.0001


@pytest.mark.parametrize("X", [0.5, 1.0, math.pi, 6.0, 10.0, 25.0, 60.0, 100.0])
@pytest.mark.parametrize("eta", [0.001, 0.01, 0.1])
def test_amplitude_against_extended_precision(X, eta):
    ref = series_reference(X, eta)
    a = amplitude_11(P(X, eta)).value
    assert abs(a - ref) < 1e-12


@pytest.mark.parametrize("X", [1.0, 5.0])
def test_integral_route_agrees_with_series(X):
    p = P(X, 0.05)
    s = amplitude_11(p)
    assert s.method == "series"
    assert abs(amplitude_integral(X, 0.05) - s.value) < 1e-13


def test_large_X_uses_integral():
    assert amplitude_11(P(100.0)).method == "integral"


# ---------------------------------------------------------------- fidelity


def test_fidelity_zero_at_identity():
    assert fidelity_fast(P(0.0)) <= np.finfo(float).eps


def _sweep_max(eta):
    return max(fidelity_fast(P(x, eta)) for x in np.linspace(0, 100, 201))


def test_fidelity_ceiling_eta_001():
    assert 1e-5 <= _sweep_max(0.01) <= 1e-3


def test_fidelity_ceiling_eta_0001():
    assert 1e-7 <= _sweep_max(0.001) <= 1e-5


def test_fidelity_eta_squared_scaling():
    assert 80 <= _sweep_max(0.01) / _sweep_max(0.001) <= 120


def test_large_eta_limit():
    assert fidelity_fast(P(math.pi, 1e3)) >= 0.999


@settings(max_examples=40, deadline=None)
@given(st.floats(0.0, 100.0), st.sampled_from([1e-3, 1e-2, 0.3]))
def test_time_reversal(X, eta):
    # terms at -X are the conjugates of those at X
    assert abs(fidelity_fast(P(-X, eta)) - fidelity_fast(P(X, eta))) <= 1e-12
    a, b = amplitude_11(P(X, eta)).value, amplitude_11(P(-X, eta)).value
    assert abs(a - b.conjugate()) <= 1e-12


# ---------------------------------------------------------------- theta


def test_theta_identity():
    assert theta(P(0.0)) == 0.0


def test_theta_first_order():
    assert theta(P(0.1)) == pytest.approx(-0.1 * 0.01, rel=0.05)


def test_theta_large_X_against_reference():
    ref = series_reference(100.0, 0.01)
    assert theta(P(100.0)) == pytest.approx(math.atan2(ref.imag, ref.real), abs=1e-12)


def test_theta_guard(monkeypatch):
    import kerrgate.gate_fast as gf
    from kerrgate.numerics import SeriesSum

    monkeypatch.setattr(gf, "amplitude_11", lambda p: SeriesSum(1e-13 + 0j, 1, 1.0, 0.0, True))
    with pytest.raises(DomainError):
        gf.theta(P(1.0))


# ---------------------------------------------------------------- slow limit


def test_slow_pi():
    assert abs(fidelity_slow(math.pi, 200) - 1) < 1e-12


def test_slow_zero():
    for nc in (1, 5, 200):
        assert fidelity_slow(0.0, nc) == 0


def test_slow_half_pi():
    assert abs(fidelity_slow(math.pi / 2, 200) - 0.5) < 1e-12


@settings(max_examples=40, deadline=None)
@given(st.floats(-20, 20))
def test_slow_closed_form(X):
    # rounding of individual terms limits accuracy to ~eps * sum |terms| = eps * e^|X|
    tol = 1e-12 + 50 * np.finfo(float).eps * math.exp(abs(X))
    assert fidelity_slow(X, 200) == pytest.approx(math.sin(X / 2) ** 2, abs=tol)


def test_slow_bad_cutoff():
    with pytest.raises(DomainError):
        fidelity_slow(1.0, 0)


# ---------------------------------------------------------------- psi_n_fast


def test_psi_zero_is_input():
    assert psi_n_fast(0, P(2.0, sigma=3e12)) == input_state(3e12)


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
@pytest.mark.parametrize("X, eta", [(1.0, 0.01), (math.pi, 0.01), (1.0, 0.1), (math.pi, 0.1)])
def test_overlap_equals_series_term(n, X, eta):
    p = P(X, eta, sigma=1e13)
    v = analytic_overlap(input_state(p.sigma), psi_n_fast(n, p))
    t = term_fast(n, X, eta)
    assert abs(v - t) <= 1e-10 * abs(t)


def test_cross_coefficient():
    p = FastKerrParams(sigma=1.0, M=100.0, X=1.0)
    assert psi_n_fast(1, p).c3.real == pytest.approx(1e4 / (2 * (2e4 + 1)), rel=1e-14)


def test_psi_bad_order():
    with pytest.raises(DomainError):
        psi_n_fast(-1, P(1.0))


# ---------------------------------------------------------------- output state


def test_output_identity_equals_input():
    p = P(0.0)
    g = output_grid(P(math.pi))
    out = output_state_fast(p, g)
    assert np.array_equal(out.values, to_grid(input_state(1.0), g).values)


def test_output_matches_direct_sum_on_small_grid():
    p = FastKerrParams.from_eta(1.0, 0.2)
    g = output_grid(p, spacing=0.5)
    x = g.nodes
    ip = np.arange(0, g.points_per_axis, 7)
    P_, S_ = np.meshgrid(x[ip], x[ip], indexing="ij")
    direct = sum(evaluate(psi_n_fast(n, p), P_, S_) for n in range(retained_orders(p)))
    fast = output_state_fast(p, g).values[np.ix_(ip, ip)]
    assert np.max(np.abs(direct - fast)) <= 1e-13 * np.max(np.abs(direct))


@pytest.mark.parametrize("X", [0.5, 1.0, math.pi])
def test_output_unitarity(X):
    assert output_state_fast(P(X)).norm() == pytest.approx(1.0, abs=1e-6)


def test_output_overlap_with_input_is_amplitude():
    p = P(math.pi)
    out = output_state_fast(p)
    inp = to_grid(input_state(1.0), out.grid)
    # the default grid drops tails below 2e-7 of the peak, worth ~1e-8 in norm
    assert inp.overlap(out) == pytest.approx(amplitude_11(p).value, abs=1e-7)


def analytic_purity(p: FastKerrParams) -> float:
    """Tr(rho_p^2) of sum_n psi_n from closed-form four-dimensional Gaussian integrals."""
    amps = [psi_n_fast(n, p) for n in range(retained_orders(p))]
    amps = [a for a in amps if abs(a.scale) > 1e-18]
    s = np.array([a.scale for a in amps])
    c = np.array([a.c1p for a in amps])
    e = np.array([a.c3 for a in amps])
    k = len(amps)
    i, j, m, l = (ix.ravel() for ix in np.meshgrid(*[np.arange(k)] * 4, indexing="ij"))
    # psi_i(a,b) psi_j*(c,b) psi_m(c,d) psi_l*(a,d), variables (a, b, c, d)
    Q = np.zeros((i.size, 4, 4), dtype=complex)
    Q[:, 0, 0] = c[i] + c[l].conj()
    Q[:, 1, 1] = c[i] + c[j].conj()
    Q[:, 2, 2] = c[j].conj() + c[m]
    Q[:, 3, 3] = c[m] + c[l].conj()
    for (r, q), v in {(0, 1): e[i], (1, 2): e[j].conj(), (2, 3): e[m], (0, 3): e[l].conj()}.items():
        Q[:, r, q] = Q[:, q, r] = v / 2
    root_det = np.prod(np.sqrt(np.linalg.eigvals(Q)), axis=1)
    tr = np.sum(s[i] * s[j].conj() * s[m] * s[l].conj() * math.pi ** 2 / root_det)
    i2, j2 = (ix.ravel() for ix in np.meshgrid(np.arange(k), np.arange(k), indexing="ij"))
    norm = sum(analytic_overlap(amps[a], amps[b]) for a, b in zip(i2, j2))
    return float(tr.real / norm.real ** 2)


@pytest.fixture(scope="module")
def output_pi():
    return output_state_fast(P(math.pi))


def test_output_purity_matches_closed_form(output_pi):
    grid_purity = schmidt(output_pi).purity
    assert grid_purity == pytest.approx(analytic_purity(P(math.pi)), abs=1e-6)


def test_output_entangled_remainder(output_pi):
    inp = to_grid(input_state(1.0), output_pi.grid)
    c = inp.overlap(output_pi)
    rest = GriddedAmplitude(output_pi.grid, output_pi.values - c * inp.values)
    s = schmidt(output_pi)
    # the dominant Schmidt weight is at least the input-state weight
    assert s.lambdas[0] >= abs(c) ** 2 - 1e-9
    assert s.purity >= abs(c) ** 4 - 1e-9
    assert schmidt(rest).purity < 1
