"""Checks on the time structure of the interaction.

Two experiments live here:

* discretized Hamiltonians H(t) on a two-photon frequency grid and the
  relative norm of [H(t1), H(t2)] for the filter, dispersion and
  combined kernels;
* a Monte Carlo comparison of the second-order time-ordered (Dyson)
  state with the second-order Taylor state for the filter kernel.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import DomainError, NonFiniteIntegrandError, ResourceError
from .gate_dispersion import physical_length
from .numerics import FrequencyGrid, derive_gamma, frequency_filter, gauss_legendre

MAX_DIMENSION = 64 * 64


# ---------------------------------------------------------------- kernels

@dataclass(frozen=True)
class GaussianFilter:
    """Response-filter kernel: one half-line filter per mode, summed (1 at zero detuning)."""

    M: float
    variant = "gaussian_filter"

    def __post_init__(self) -> None:
        if not self.M > 0:
            raise DomainError(f"M must be positive, got {self.M}")

    def __call__(self, dp: np.ndarray, ds: np.ndarray) -> np.ndarray:
        return frequency_filter(dp, self.M) + frequency_filter(ds, self.M)


def _phase_matching(L: float, kp: float, ks: float, dp: np.ndarray, ds: np.ndarray) -> np.ndarray:
    half = 0.5 * L * (kp * dp + ks * ds)
    return np.sinc(half / np.pi) * np.exp(1j * half)


@dataclass(frozen=True)
class Dispersion:
    """Phase-matching kernel sinc(L dk/2) exp(i L dk/2), dk = k'_p dp + k'_s ds."""

    L: float
    kp_prime: float
    ks_prime: float
    variant = "dispersion"

    def __post_init__(self) -> None:
        if not self.L > 0:
            raise DomainError(f"L must be positive, got {self.L}")
        if self.kp_prime == self.ks_prime:
            raise DomainError("k'_p and k'_s must differ")

    def __call__(self, dp: np.ndarray, ds: np.ndarray) -> np.ndarray:
        return _phase_matching(self.L, self.kp_prime, self.ks_prime, dp, ds)


@dataclass(frozen=True)
class Combined:
    """Filter times phase matching."""

    M: float
    L: float
    kp_prime: float
    ks_prime: float
    variant = "combined"

    def __post_init__(self) -> None:
        GaussianFilter(self.M)
        Dispersion(self.L, self.kp_prime, self.ks_prime)

    def __call__(self, dp: np.ndarray, ds: np.ndarray) -> np.ndarray:
        return GaussianFilter(self.M)(dp, ds) * _phase_matching(
            self.L, self.kp_prime, self.ks_prime, dp, ds
        )


KernelKind = Union[GaussianFilter, Dispersion, Combined]


@dataclass(frozen=True)
class PhysicalDefaults:
    """Parameter set used by the comparative commutator experiment.

    k' is split symmetrically (k'_p = -k'_s = dk/2): a common part of k'
    only multiplies the kernel by exp(i L kbar (dp + ds)/2), which is a
    shift of t and says nothing about commutation.
    """

    sigma: float = 1e13
    M: float = 1e17
    dk: float = 1e-8
    script_l: float = 100.0
    extent: float = 6.0  # grid half-width in sigma
    points: int = 48

    @property
    def L(self) -> float:
        return physical_length(self.script_l, self.sigma, derive_gamma(), self.dk)

    def basis(self, extent: float | None = None) -> "TwoPhotonBasis":
        half = (self.extent if extent is None else extent) * self.sigma
        return TwoPhotonBasis(FrequencyGrid.symmetric(half, self.points))

    def kernel(self, variant: str, M: float | None = None) -> KernelKind:
        m = self.M if M is None else M
        if variant == "gaussian_filter":
            return GaussianFilter(m)
        if variant == "dispersion":
            return Dispersion(self.L, self.dk / 2, -self.dk / 2)
        if variant == "combined":
            return Combined(m, self.L, self.dk / 2, -self.dk / 2)
        raise DomainError(f"unknown kernel variant {variant!r}")


@dataclass(frozen=True)
class TwoPhotonBasis:
    """One photon per mode on a shared grid; index k = i_p * N + i_s."""

    grid: FrequencyGrid

    @property
    def dimension(self) -> int:
        return self.grid.points_per_axis ** 2

    def index(self, i_p: int, i_s: int) -> int:
        n = self.grid.points_per_axis
        if not (0 <= i_p < n and 0 <= i_s < n):
            raise DomainError(f"index ({i_p}, {i_s}) outside {n}x{n} grid")
        return i_p * n + i_s

    def unravel(self, k: int) -> tuple[int, int]:
        if not 0 <= k < self.dimension:
            raise DomainError(f"basis index {k} outside [0, {self.dimension})")
        return divmod(k, self.grid.points_per_axis)

    def frequencies(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """nu_p, nu_s and quadrature weight for every basis index."""
        x, w = self.grid.nodes, self.grid.weights
        n = x.size
        return np.repeat(x, n), np.tile(x, n), np.outer(w, w).ravel()


def hamiltonian_matrix(kind: KernelKind, t: float, basis: TwoPhotonBasis, coupling: float = 1.0) -> np.ndarray:
    """H(t) with element (row +, col -) =
    coupling * K(w+ - w-) * exp(-i (dp + ds) t) * sqrt(weight+ weight-)."""
    if basis.dimension > MAX_DIMENSION:
        raise ResourceError(f"basis dimension {basis.dimension} exceeds {MAX_DIMENSION}")
    p, s, w = basis.frequencies()
    dp = p[:, None] - p[None, :]
    ds = s[:, None] - s[None, :]
    K = kind(dp, ds)
    sw = np.sqrt(w)
    return coupling * K * np.exp(-1j * (dp + ds) * t) * sw[:, None] * sw[None, :]


def commutator_norm_ratio(
    kind: KernelKind, t1: float, t2: float, basis: TwoPhotonBasis, coupling: float = 1.0
) -> float:
    """||[H(t1), H(t2)]||_F / (||H(t1)||_F ||H(t2)||_F)."""
    a = hamiltonian_matrix(kind, t1, basis, coupling)
    if t1 == t2:
        return 0.0 * float(np.linalg.norm(a))
    b = hamiltonian_matrix(kind, t2, basis, coupling)
    c = a @ b
    c -= b @ a
    return float(np.linalg.norm(c) / (np.linalg.norm(a) * np.linalg.norm(b)))


# ------------------------------------------------------- Dyson vs Taylor
#
# Units: sigma = 1 internally, m = M / sigma, times in 1/sigma.
# For the filter kernel, one factor H(t1) H(t2) acting on the input gives,
# at output detunings nu, four kernel pairings:
#   mixed (p filtered at t1, s filtered at t2) and its mirror, both smooth
#   in (t1, t2):  4 pi m^2 exp(-2 m^2 (t1-t2)^2) gh(t1) gh(t2)
#                 * exp(-i (nu_p t2 + nu_s t1))      [mirror: t1 <-> t2]
#   same-mode pairings, proportional to delta(t1 - t2) because the
#   unfiltered mode passes through both interactions unchanged.
# Dyson integrates over t2 < t1, Taylor takes half the full square. The
# delta terms sit on the ordering boundary; they are given half weight
# (the symmetric limit of any smooth regularization) in both.

_NG = (2 * math.pi) ** -0.25          # input amplitude normalization, sigma = 1
_CG = _NG * 2 * math.sqrt(math.pi)   # gh(t) = _CG exp(-t^2)


def taylor_norm_exact(M_over_sigma: float) -> float:
    """||psi_T2||^2 for an infinite window (coupling factors dropped).

    In the time domain the summed single-time kernel is the smooth
    multiplier 8 pi^(3/2) m exp(-m^2 (tp - ts)^2), so the Taylor state is
    half its square times the input; the norm follows in closed form.
    """
    m = M_over_sigma
    return 1024 * math.pi ** 6 * m ** 4 / math.sqrt(4 * m * m + 1)


def _gl_for(k_max: float, a: float, b: float, order: int = 16) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre rule on [a, b] resolving oscillation frequency k_max."""
    width = b - a
    panels = max(4, math.ceil(width / min(width / 4, 2.0 / max(k_max, 1e-12))))
    return gauss_legendre(a, b, panels, order)


def second_order_amplitudes(
    nu_p: np.ndarray, nu_s: np.ndarray, m: float, window: float
) -> tuple[np.ndarray, np.ndarray]:
    """Second-order Taylor and Dyson amplitudes at output detunings nu.

    Nested time integrals are done by Gauss-Legendre quadrature in
    tbar = (t1 + t2)/2 and d = t1 - t2; Dyson covers d > 0, Taylor the
    full range with weight 1/2. Returns (taylor, dyson) arrays.
    """
    nu_p = np.asarray(nu_p, dtype=float)
    nu_s = np.asarray(nu_s, dtype=float)
    T = float(window)
    A = 2 * m * m + 0.5
    a = min(T, 6.5)
    b = min(2 * T, 9.0 / math.sqrt(A))
    if a + b / 2 > T:
        return _second_order_masked(nu_p, nu_s, m, T)

    K = 4 * math.pi * m * m * _CG * _CG
    tot = nu_p + nu_s
    half_diff = 0.5 * (nu_s - nu_p)

    tb, wb = _gl_for(float(np.max(np.abs(tot))), -a, a)
    phi = (np.exp(-2 * tb * tb)[None, :] * np.exp(-1j * tot[:, None] * tb[None, :])) @ wb

    def mixed(lo: float, hi: float) -> np.ndarray:
        d, wd = _gl_for(float(np.max(np.abs(half_diff))), lo, hi)
        env = np.exp(-A * d * d)
        ph = np.exp(-1j * half_diff[:, None] * d[None, :])
        ps = (env[None, :] * ph) @ wd          # p filtered at the later time
        sp = (env[None, :] * np.conj(ph)) @ wd  # mirror pairing
        return ps + sp

    dyson_mixed = K * phi * mixed(0.0, b)
    taylor_mixed = 0.5 * K * phi * mixed(-b, b)

    same = _same_time(nu_p, nu_s, m, T)
    return taylor_mixed + same, dyson_mixed + same


def _same_time(nu_p: np.ndarray, nu_s: np.ndarray, m: float, T: float) -> np.ndarray:
    """Half-weighted delta(t1 - t2) pairings, shared by Dyson and Taylor.

    pi * int dt gh(t) [exp(-i nu_s t) P(nu_p, t) + exp(-i nu_p t) P(nu_s, t)]
    with P(x, t) = sqrt(2 pi) m int dD exp(-D^2/8m^2 - i D t) g(x - D)
    in closed form.
    """
    alpha = 1.0 / (8 * m * m) + 0.25
    c_p = math.sqrt(2 * math.pi) * m * _NG * math.sqrt(math.pi / alpha)
    tmax = min(T, 6.5)
    k = float(np.max(np.abs(nu_s + nu_p / (4 * alpha)))) + float(np.max(np.abs(nu_p + nu_s / (4 * alpha))))
    t, wt = _gl_for(k, -tmax, tmax)
    gh = _CG * np.exp(-t * t)

    def P(x: np.ndarray) -> np.ndarray:
        beta = 0.5 * x[:, None] - 1j * t[None, :]
        return c_p * np.exp(beta * beta / (4 * alpha) - 0.25 * x[:, None] ** 2)

    integrand = gh[None, :] * (
        np.exp(-1j * nu_s[:, None] * t[None, :]) * P(nu_p)
        + np.exp(-1j * nu_p[:, None] * t[None, :]) * P(nu_s)
    )
    return math.pi * (integrand @ wt)


def _second_order_masked(nu_p, nu_s, m, T):
    """Direct (t1, t2) quadrature with the window enforced pointwise.

    Used only when the window cuts into the support of the integrand.
    """
    A = 2 * m * m + 0.5
    K = 4 * math.pi * m * m * _CG * _CG
    tot = nu_p + nu_s
    half_diff = 0.5 * (nu_s - nu_p)
    a = min(T, 6.5)
    b = min(2 * T, 9.0 / math.sqrt(A))
    tb, wb = _gl_for(float(np.max(np.abs(tot))), -a, a)
    d, wd = _gl_for(float(np.max(np.abs(half_diff))), -b, b)
    TB, DD = np.meshgrid(tb, d, indexing="ij")
    inside = (np.abs(TB + DD / 2) <= T) & (np.abs(TB - DD / 2) <= T)
    W = (wb[:, None] * wd[None, :]) * inside * np.exp(-2 * TB * TB - A * DD * DD)
    later = DD > 0
    taylor = np.empty(nu_p.shape, dtype=complex)
    dyson = np.empty(nu_p.shape, dtype=complex)
    for i in range(nu_p.size):
        e = np.exp(-1j * tot[i] * TB)
        ps = e * np.exp(-1j * half_diff[i] * DD)
        sp = e * np.exp(1j * half_diff[i] * DD)
        taylor[i] = 0.5 * K * np.sum(W * (ps + sp))
        dyson[i] = K * np.sum(W * later * (ps + sp))
    same = _same_time(nu_p, nu_s, m, T)
    return taylor + same, dyson + same


@dataclass(frozen=True)
class DysonTaylorResult:
    value: float
    std_error: float
    samples: int
    seed: int
    unconverged: bool
    window: float              # T in units of 1/sigma
    window_shift: float        # |value(T) - value(T/2)| on the same samples
    taylor_norm: float         # Monte Carlo ||psi_T2||^2, sigma = 1 units
    taylor_norm_error: float


def _proposal(rng: np.random.Generator, n: int, m: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Samples concentrated on the anti-diagonal ridge, plus a round core.

    Returns nu_p, nu_s and the proposal density at each sample.
    """
    s_w, s_u, s_c = 1.5, 1.5 * math.sqrt(4 * m * m + 1), 1.5
    frac_ridge = 0.8
    ridge = rng.random(n) < frac_ridge
    z = rng.standard_normal((n, 2))
    w = np.where(ridge, s_w * z[:, 0], s_c * z[:, 0])
    u = np.where(ridge, s_u * z[:, 1], s_c * z[:, 1])
    nu_p = (w + u) / math.sqrt(2)
    nu_s = (w - u) / math.sqrt(2)
    g = lambda x, s: np.exp(-0.5 * (x / s) ** 2) / (s * math.sqrt(2 * math.pi))
    q = frac_ridge * g(w, s_w) * g(u, s_u) + (1 - frac_ridge) * g(w, s_c) * g(u, s_c)
    return nu_p, nu_s, q


def _fidelity_from_sums(a: complex, b: float, c: float) -> float:
    return abs(a) ** 2 / (b * c)


def dyson_taylor_second_order(
    sigma: float,
    M: float,
    samples: int = 100_000,
    seed: int = 0,
    window: float = 32.0,
    batches: int = 64,
    control: bool = False,
    chunk: int = 2048,
) -> DysonTaylorResult:
    """Monte Carlo overlap fidelity between second-order Dyson and Taylor states.

    F = |<T|D>|^2 / (<T|T> <D|D>), all three integrals over output
    detunings estimated from one importance-sampled set, each sample
    carrying nested time quadratures. ``window`` is T in units of
    1/sigma. ``control=True`` replaces the Dyson state by the Taylor
    state. The standard error is a delete-one-batch jackknife.
    """
    if samples < 10_000:
        raise DomainError(f"need at least 10^4 samples, got {samples}")
    if not (sigma > 0 and M > 0):
        raise DomainError("sigma and M must be positive")
    if not window > 0:
        raise DomainError("window must be positive")
    m = M / sigma
    rng = np.random.default_rng(seed)
    nu_p, nu_s, q = _proposal(rng, samples, m)

    def contributions(T: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        tt = np.empty(samples)
        dd = np.empty(samples)
        td = np.empty(samples, dtype=complex)
        for lo in range(0, samples, chunk):
            sl = slice(lo, min(lo + chunk, samples))
            tay, dys = second_order_amplitudes(nu_p[sl], nu_s[sl], m, T)
            if control:
                dys = tay
            bad = ~(np.isfinite(tay) & np.isfinite(dys))
            if bad.any():
                i = lo + int(np.argmax(bad))
                raise NonFiniteIntegrandError(
                    f"non-finite amplitude at nu_p={nu_p[i] * sigma:.6g}, nu_s={nu_s[i] * sigma:.6g}",
                    coordinates=(float(nu_p[i] * sigma), float(nu_s[i] * sigma)),
                )
            wq = 1.0 / q[sl]
            tt[sl] = np.abs(tay) ** 2 * wq
            dd[sl] = np.abs(dys) ** 2 * wq
            td[sl] = np.conj(tay) * dys * wq
        return tt, dd, td

    tt, dd, td = contributions(window)
    edges = np.linspace(0, samples, batches + 1).astype(int)
    bt = np.array([math.fsum(tt[i:j]) for i, j in zip(edges, edges[1:])])
    bd = np.array([math.fsum(dd[i:j]) for i, j in zip(edges, edges[1:])])
    btd = np.array([complex(math.fsum(td[i:j].real), math.fsum(td[i:j].imag)) for i, j in zip(edges, edges[1:])])
    St, Sd, Std = bt.sum(), bd.sum(), btd.sum()
    if control:
        # identical states: make the three sums literally the same numbers
        Sd, Std = St, complex(St)
    value = _fidelity_from_sums(Std, St, Sd)

    loo = np.array(
        [_fidelity_from_sums(Std - btd[k], St - bt[k], Sd - bd[k]) for k in range(batches)]
        if not control
        else np.full(batches, value)
    )
    se = math.sqrt((batches - 1) / batches * np.sum((loo - loo.mean()) ** 2))
    # the estimate cannot be resolved beyond float64 rounding of its sums
    se = max(se, 4 * np.finfo(float).eps * value)

    norm = St / samples
    norm_err = float(np.std(tt, ddof=1) / math.sqrt(samples))

    shift = 0.0
    if window / 2 < window:
        tt2, dd2, td2 = contributions(window / 2)
        v2 = _fidelity_from_sums(td2.sum(), tt2.sum(), dd2.sum() if not control else tt2.sum())
        shift = abs(value - v2)

    unconverged = se > 0.5 * abs(value)
    if unconverged:
        warnings.warn(f"Monte Carlo estimate unconverged: {value:.4g} +- {se:.2g}")
    return DysonTaylorResult(
        value=float(value),
        std_error=float(se),
        samples=samples,
        seed=seed,
        unconverged=bool(unconverged),
        window=float(window),
        window_shift=float(shift),
        taylor_norm=float(norm),
        taylor_norm_error=norm_err,
    )
