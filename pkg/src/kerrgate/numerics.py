"""Numerical foundation: compensated series sums, the medium response,
the Gaussian surrogate and tensor-product quadrature on frequency grids.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Literal

import numpy as np

from .errors import DomainError, NonFiniteIntegrandError, NumericalOverflowError

DEFAULT_N_MAX = 200


@dataclass(frozen=True)
class SeriesSum:
    """Result of a truncated complex series.

    ``method`` records how ``value`` was obtained: ``"series"`` for the
    term-by-term sum, or the name of an alternative route when a module
    has to bypass cancellation-prone summation.
    """

    value: complex
    terms_used: int
    max_term_magnitude: float
    last_term_magnitude: float
    converged: bool
    method: str = "series"


class _Neumaier:
    """Running compensated sum of real numbers."""

    __slots__ = ("s", "c")

    def __init__(self) -> None:
        self.s = 0.0
        self.c = 0.0

    def add(self, x: float) -> None:
        t = self.s + x
        if abs(self.s) >= abs(x):
            self.c += (self.s - t) + x
        else:
            self.c += (x - t) + self.s
        self.s = t

    @property
    def total(self) -> float:
        return self.s + self.c


def sum_series(
    term_recurrence: Callable[[int, complex], complex],
    first_term: complex,
    n_max: int = DEFAULT_N_MAX,
    tol: float = 1e-16,
) -> SeriesSum:
    """Sum ``t_0 + t_1 + ...`` where ``t_{n+1} = term_recurrence(n, t_n)``.

    Summation stops at the first n past the largest term seen so far with
    ``|t_n| < tol * max(1, |partial sum|)``, or after ``t_{n_max}``.
    Real and imaginary parts are accumulated with Neumaier compensation.
    """
    if n_max < 1:
        raise DomainError(f"n_max must be >= 1, got {n_max}")
    if not tol > 0:
        raise DomainError(f"tol must be positive, got {tol}")

    re, im = _Neumaier(), _Neumaier()
    term = complex(first_term)
    peak, n_peak = 0.0, 0
    n = 0
    while True:
        if not (math.isfinite(term.real) and math.isfinite(term.imag)):
            raise NumericalOverflowError(f"series term {n} is not finite: {term}", index=n)
        mag = abs(term)
        re.add(term.real)
        im.add(term.imag)
        if mag > peak:
            peak, n_peak = mag, n
        total = complex(re.total, im.total)
        if n > n_peak and mag < tol * max(1.0, abs(total)):
            break
        if n >= n_max:
            break
        term = complex(term_recurrence(n, term))
        n += 1

    return SeriesSum(
        value=total,
        terms_used=n + 1,
        max_term_magnitude=peak,
        last_term_magnitude=mag,
        converged=mag <= tol * max(1.0, abs(total)),
    )


def half_max_root(xtol: float = 1e-15) -> float:
    """Positive root of sin(x)/x = 1/2, by bisection on (1, 2)."""
    lo, hi = 1.0, 2.0
    f = lambda x: math.sin(x) / x - 0.5
    flo = f(lo)
    while hi - lo > xtol:
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0.0:
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def derive_gamma(xtol: float = 1e-15) -> float:
    """Width constant of the Gaussian that shares its FWHM with sinc(x).

    exp(-gamma x^2) and sin(x)/x both fall to 1/2 at the same x, so
    gamma = ln 2 / x_half^2 (about 0.19292).
    """
    x = half_max_root(xtol)
    return math.log(2.0) / (x * x)


@dataclass(frozen=True)
class ResponseParams:
    K: float
    Omega: float
    Gamma: float
    M: float

    def __post_init__(self) -> None:
        if not self.Omega > 0:
            raise DomainError(f"Omega must be positive, got {self.Omega}")
        if not self.Gamma > 0:
            raise DomainError(f"Gamma must be positive, got {self.Gamma}")
        if not self.M > 0:
            raise DomainError(f"M must be positive, got {self.M}")


Branch = Literal["underdamped", "critical"]


def response_function(tau, params: ResponseParams, branch: Branch = "underdamped"):
    """Causal damped-oscillator response g(tau); zero for tau <= 0.

    Accepts scalars or arrays.
    """
    K, W, G = params.K, params.Omega, params.Gamma
    t = np.asarray(tau, dtype=float)
    pos = t > 0
    tp = np.where(pos, t, 0.0)
    if branch == "underdamped":
        if not G < 2 * W:
            raise DomainError("underdamped branch needs Gamma < 2*Omega")
        wd = math.sqrt(W * W - G * G / 4)
        g = K * W * W / wd * np.exp(-G * tp / 2) * np.sin(wd * tp)
    elif branch == "critical":
        if abs(G - 2 * W) > 1e-9 * W:
            raise DomainError("critical branch needs Gamma == 2*Omega")
        g = K * W * W * tp * np.exp(-W * tp)
    else:
        raise DomainError(f"unknown branch {branch!r}")
    g = np.where(pos, g, 0.0)
    return float(g) if g.ndim == 0 else g


def gaussian_surrogate(tau, M: float):
    """Narrow normalized Gaussian (M/sqrt(pi)) exp(-M^2 tau^2)."""
    if not M > 0:
        raise DomainError(f"M must be positive, got {M}")
    t = np.asarray(tau, dtype=float)
    g = M / math.sqrt(math.pi) * np.exp(-(M * t) ** 2)
    return float(g) if g.ndim == 0 else g


def frequency_filter(delta, M: float):
    """Half-line transform of the surrogate: 0.5 exp(-delta^2 / (4 M^2))."""
    if not M > 0:
        raise DomainError(f"M must be positive, got {M}")
    d = np.asarray(delta, dtype=float)
    v = 0.5 * np.exp(-(d * d) / (4 * M * M))
    return float(v) if v.ndim == 0 else v


def fwhm(func: Callable[[float], float], center: float, scale: float, xtol: float = 0.0) -> float:
    """Full width at half maximum of a unimodal function peaked at ``center``.

    ``scale`` is a rough width used to bracket each half-max crossing,
    which is then refined by bisection.
    """
    half = 0.5 * func(center)
    if not half > 0:
        raise DomainError("peak value must be positive")
    xtol = xtol or 1e-14 * max(abs(scale), 1e-300)

    def crossing(direction: float) -> float:
        lo, hi = center, center + direction * scale
        steps = 0
        while func(hi) > half:
            lo, hi = hi, hi + direction * scale
            steps += 1
            if steps > 10_000:
                raise DomainError("half maximum not bracketed")
        while abs(hi - lo) > xtol:
            mid = 0.5 * (lo + hi)
            if func(mid) > half:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    return crossing(1.0) - crossing(-1.0)


@dataclass(frozen=True)
class FrequencyGrid:
    """Uniform square grid of detunings shared by both modes.

    Trapezoidal weights; the same node set is used on the nu_p and nu_s axes.
    """

    nu_min: float
    nu_max: float
    points_per_axis: int

    def __post_init__(self) -> None:
        if not self.nu_min < 0 < self.nu_max:
            raise DomainError(f"need nu_min < 0 < nu_max, got [{self.nu_min}, {self.nu_max}]")
        if self.points_per_axis < 16:
            raise DomainError(f"need at least 16 points per axis, got {self.points_per_axis}")

    @classmethod
    def symmetric(cls, half_width: float, points_per_axis: int) -> "FrequencyGrid":
        return cls(-half_width, half_width, points_per_axis)

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(self.nu_min, self.nu_max, self.points_per_axis)

    @property
    def spacing(self) -> float:
        return (self.nu_max - self.nu_min) / (self.points_per_axis - 1)

    @property
    def weights(self) -> np.ndarray:
        w = np.full(self.points_per_axis, self.spacing)
        w[0] = w[-1] = 0.5 * self.spacing
        return w

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """(nu_p, nu_s) arrays indexed [i_p, i_s]."""
        x = self.nodes
        return np.meshgrid(x, x, indexing="ij")


def _check_finite(values: np.ndarray, grid: FrequencyGrid) -> None:
    bad = ~np.isfinite(values)
    if bad.any():
        i, j = (int(k) for k in np.argwhere(bad)[0])
        x = grid.nodes
        raise NonFiniteIntegrandError(
            f"non-finite integrand at nu_p={x[i]:.6g}, nu_s={x[j]:.6g}",
            coordinates=(float(x[i]), float(x[j])),
        )


def integrate_2d(f, grid: FrequencyGrid) -> complex:
    """Trapezoidal tensor-product integral over ``grid``.

    ``f`` is either a vectorized callable f(nu_p, nu_s) or an array of
    samples already laid out as ``grid.mesh()``.
    """
    if callable(f):
        values = np.asarray(f(*grid.mesh()))
    else:
        values = np.asarray(f)
    n = grid.points_per_axis
    if values.shape != (n, n):
        raise DomainError(f"samples have shape {values.shape}, grid expects {(n, n)}")
    _check_finite(values, grid)
    w = grid.weights
    return complex(w @ values @ w)


def gauss_legendre(a: float, b: float, panels: int, order: int = 16) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of a composite Gauss-Legendre rule on [a, b]."""
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights
