"""Cross-Kerr gate with a fast (non-instantaneous) response and no dispersion.

Per-order amplitudes are Gaussians whose anti-diagonal width grows with
the order n; the diagonal overlap with the input gives the fidelity
series F(X, eta) = 1/4 |1 - sum_n (-iX)^n/n! eta/sqrt(n + eta^2)|^2.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, GridTooSmallError
from .jsa import (
    COVERAGE_RATIO,
    FrequencyGrid,
    GaussianTwoPhotonAmplitude,
    GriddedAmplitude,
    _edge_ratio,
    evaluate,
    input_state,
)
from .numerics import DEFAULT_N_MAX, SeriesSum, gauss_legendre, sum_series

# The direct sum loses about log10(peak term) digits; past this peak the
# integral representation takes over.
SERIES_PEAK_LIMIT = 1e3
THETA_THRESHOLD = 1e-12
WIDE_GRID_WARNING = 1e4  # half-width in units of sigma


@dataclass(frozen=True)
class FastKerrParams:
    sigma: float
    M: float
    X: float
    n_max: int = DEFAULT_N_MAX
    tol: float = 1e-16

    def __post_init__(self) -> None:
        if not self.sigma > 0:
            raise DomainError(f"sigma must be positive, got {self.sigma}")
        if not self.M > 0:
            raise DomainError(f"M must be positive, got {self.M}")
        if not 1 <= self.n_max <= 1000:
            raise DomainError(f"n_max must lie in [1, 1000], got {self.n_max}")
        if not self.tol > 0:
            raise DomainError(f"tol must be positive, got {self.tol}")
        if not math.isfinite(self.X):
            raise DomainError(f"X must be finite, got {self.X}")

    @property
    def eta(self) -> float:
        return self.sigma / self.M

    @classmethod
    def from_eta(cls, X: float, eta: float, sigma: float = 1.0, **kw) -> "FastKerrParams":
        if not eta > 0:
            raise DomainError(f"eta must be positive, got {eta}")
        return cls(sigma=sigma, M=sigma / eta, X=X, **kw)


_MINUS_I_POW = (1 + 0j, -1j, -1 + 0j, 1j)


def _power_prefactor(n: int, X: float) -> complex:
    """(-iX)^n / n! via log-gamma."""
    if n == 0:
        return 1 + 0j
    if X == 0:
        return 0j
    mag = math.exp(n * math.log(abs(X)) - math.lgamma(n + 1))
    phase = _MINUS_I_POW[n % 4]
    if X < 0 and n % 2:
        phase = -phase
    return mag * phase


def term_fast(n: int, X: float, eta: float) -> complex:
    """n-th fidelity-series term (-iX)^n/n! * eta/sqrt(n + eta^2)."""
    if n < 0:
        raise DomainError(f"n must be >= 0, got {n}")
    if not eta > 0:
        raise DomainError(f"eta must be positive, got {eta}")
    if n == 0:
        return 1 + 0j
    return _power_prefactor(n, X) * (eta / math.sqrt(n + eta * eta))


def log_abs_term_fast(n: int, X: float, eta: float) -> float:
    """log |term_fast(n)|; -inf when the term vanishes."""
    if n == 0:
        return 0.0
    if X == 0:
        return -math.inf
    return n * math.log(abs(X)) - math.lgamma(n + 1) + math.log(eta) - 0.5 * math.log(n + eta * eta)


def fast_recurrence(X: float, eta: float):
    """term(n+1)/term(n) as a rule usable by sum_series."""
    e2 = eta * eta

    def step(n: int, t: complex) -> complex:
        return t * (-1j * X) / (n + 1) * math.sqrt((n + e2) / (n + 1 + e2))

    return step


def fast_terms(X: float, eta: float, count: int) -> np.ndarray:
    """First ``count`` terms generated by the recurrence."""
    step = fast_recurrence(X, eta)
    out = np.empty(count, dtype=complex)
    t = 1 + 0j
    for n in range(count):
        out[n] = t
        t = step(n, t)
    return out


def _peak_log_term(X: float) -> float:
    """log of the largest |X|^n/n!, attained near n = |X|."""
    if X == 0:
        return 0.0
    n = max(0, math.floor(abs(X)))
    return max(k * math.log(abs(X)) - math.lgamma(k + 1) for k in (n, n + 1))


def amplitude_integral(X: float, eta: float) -> complex:
    """<11|U|11> from its integral representation.

    eta/sqrt(n + eta^2) = (2 eta/sqrt(pi)) int_0^inf exp(-(n + eta^2) s^2) ds,
    so the series sums under the integral to an exponential:

        1 + (2 eta/sqrt(pi)) int_0^inf exp(-eta^2 s^2) (exp(-iX e^{-s^2}) - 1) ds.

    Every piece is O(1), unlike the alternating series whose terms reach
    e^|X| before cancelling.
    """
    if X == 0:
        return 1 + 0j
    ax = abs(X)
    s_max = math.sqrt(max(math.log(ax), 0.0) + 46.0)
    s_max = min(s_max, 9.0 / eta)
    # integrand oscillates with local frequency |X| 2 s e^{-s^2} <= 0.86 |X|
    panels = max(8, math.ceil(s_max / min(math.pi / ax, s_max / 8)))
    s, w = gauss_legendre(0.0, s_max, panels, 16)
    y = X * np.exp(-s * s)
    damp = np.exp(-(eta * s) ** 2)
    # exp(-iy) - 1 without cancellation for small y
    re = np.sum(w * damp * (-2.0 * np.sin(0.5 * y) ** 2))
    im = np.sum(w * damp * (-np.sin(y)))
    return 1 + (2 * eta / math.sqrt(math.pi)) * complex(re, im)


def amplitude_11(p: FastKerrParams) -> SeriesSum:
    """<11|U|11> = sum_n term_fast(n).

    Summed term by term while the largest term stays below
    SERIES_PEAK_LIMIT and the series converges inside n_max; otherwise
    evaluated from the integral representation (method="integral").
    """
    eta = p.eta
    if math.exp(_peak_log_term(p.X)) <= SERIES_PEAK_LIMIT:
        res = sum_series(fast_recurrence(p.X, eta), 1 + 0j, p.n_max, p.tol)
        if res.converged:
            return res
    value = amplitude_integral(p.X, eta)
    n_peak = max(0, math.floor(abs(p.X)))
    return SeriesSum(
        value=value,
        terms_used=p.n_max + 1,
        max_term_magnitude=math.exp(log_abs_term_fast(n_peak, p.X, eta)) if n_peak else 1.0,
        last_term_magnitude=0.0,
        converged=True,
        method="integral",
    )


def fidelity_fast(p: FastKerrParams) -> float:
    a = amplitude_11(p).value
    return 0.25 * abs(1 - a) ** 2


def theta(p: FastKerrParams) -> float:
    """Principal argument of <11|U|11>, in (-pi, pi]."""
    a = amplitude_11(p).value
    if abs(a) <= THETA_THRESHOLD:
        raise DomainError(f"argument undefined: |<11|U|11>| = {abs(a):.3g}")
    th = math.atan2(a.imag, a.real)
    return math.pi if th == -math.pi else th


def fidelity_slow(X: float, n_c: int) -> float:
    """Fidelity when the filter is negligible: truncated exponential series."""
    if n_c < 1:
        raise DomainError(f"n_c must be >= 1, got {n_c}")
    s = sum_series(lambda n, t: t * (-1j * X) / (n + 1), 1 + 0j, n_c, 1e-20)
    return 0.25 * abs(1 - s.value) ** 2


def psi_n_fast(n: int, p: FastKerrParams) -> GaussianTwoPhotonAmplitude:
    """n-th order output amplitude.

    The prefactor is written so that its overlap with the input equals
    term_fast(n) exactly:
        scale_n = (-iX)^n/n! / (sqrt(2 pi) sqrt(2 n M^2 + sigma^2)),
    which reduces to the input normalization 1/(sigma sqrt(2 pi)) at n = 0.
    """
    if n < 0:
        raise DomainError(f"n must be >= 0, got {n}")
    if n == 0:
        return input_state(p.sigma)
    s2, m2 = p.sigma ** 2, p.M ** 2
    D = 2 * n * m2 + s2
    c1 = (n * m2 + s2) / (4 * s2 * D)
    c3 = n * m2 / (2 * s2 * D)
    scale = _power_prefactor(n, p.X) / (math.sqrt(2 * math.pi) * math.sqrt(D))
    return GaussianTwoPhotonAmplitude(scale=scale, c1p=c1, c1s=c1, c3=c3)


def retained_orders(p: FastKerrParams) -> int:
    """Number of orders kept by the stopping rule (at least 1)."""
    res = sum_series(fast_recurrence(p.X, p.eta), 1 + 0j, p.n_max, p.tol)
    return res.terms_used


def output_grid(p: FastKerrParams, spacing: float = 1.0, rel: float = 2e-7) -> FrequencyGrid:
    """Grid that contains every retained order of the output state.

    In rotated coordinates u = (nu_p - nu_s)/sqrt2, w = (nu_p + nu_s)/sqrt2
    order n is a product of exp(-w^2/4 sigma^2) and
    exp(-u^2/(4 sigma^2 + 8 n M^2)); the half-width is chosen so that each
    order has dropped below ``rel`` times the input peak on the boundary.
    ``spacing`` is in units of sigma.
    """
    sig = p.sigma
    peak0 = 1.0 / (sig * math.sqrt(2 * math.pi))
    reach = 6.0 * sig  # input alone
    for n in range(1, retained_orders(p)):
        a = psi_n_fast(n, p)
        ratio = abs(a.scale) / (rel * peak0)
        if ratio <= 1:
            continue
        depth = math.log(ratio)
        alpha = 4 * sig * sig + 8 * n * p.M * p.M
        u = math.sqrt(alpha * depth)
        w = 2 * sig * math.sqrt(depth)
        reach = max(reach, (u + w) / math.sqrt(2))
    half = reach + 2 * sig
    if half > WIDE_GRID_WARNING * sig:
        warnings.warn(f"output grid half-width {half / sig:.3g} sigma exceeds {WIDE_GRID_WARNING:g} sigma")
    points = 2 * math.ceil(half / (spacing * sig)) + 1
    return FrequencyGrid.symmetric(half, max(points, 16))


def output_state_fast(p: FastKerrParams, grid: FrequencyGrid | None = None) -> GriddedAmplitude:
    """Sum of psi_n_fast over the retained orders, sampled on ``grid``
    (default: output_grid(p))."""
    if grid is None:
        grid = output_grid(p)
    if p.X == 0:
        return GriddedAmplitude(grid, evaluate(input_state(p.sigma), *grid.mesh()))
    res = sum_series(fast_recurrence(p.X, p.eta), 1 + 0j, p.n_max, p.tol)
    if not res.converged or res.max_term_magnitude > SERIES_PEAK_LIMIT:
        warnings.warn("order sum is not converged or cancels heavily; grid values lose precision")
    # Every order factorizes as exp(-w^2/(4 sigma^2)) h_n(u) with
    # w, u the diagonal and anti-diagonal coordinates. On a uniform grid
    # nu_p + nu_s and nu_p - nu_s depend only on i + j and i - j.
    N, h, x0 = grid.points_per_axis, grid.spacing, grid.nu_min
    k = np.arange(2 * N - 1)
    w2 = (2 * x0 + k * h) ** 2 / 2
    u2 = ((k - (N - 1)) * h) ** 2 / 2
    diag = np.exp(-w2 / (4 * p.sigma ** 2))
    anti = np.zeros(2 * N - 1, dtype=complex)
    for n in range(res.terms_used):
        a = psi_n_fast(n, p)
        if a.scale == 0:
            continue
        b = (a.c1p - 0.5 * a.c3).real  # = 1/(4 (2 n M^2 + sigma^2))
        anti += a.scale * np.exp(-b * u2)
    i = np.arange(N)
    values = diag[i[:, None] + i[None, :]] * anti[i[:, None] - i[None, :] + N - 1]
    ratio = _edge_ratio(values)
    if ratio >= COVERAGE_RATIO:
        raise GridTooSmallError(
            f"output state not contained by grid: edge/peak = {ratio:.3g}", edge_ratio=ratio
        )
    return GriddedAmplitude(grid, values)
