"""Cross-Kerr gate in a dispersive medium.

The phase-matching sinc is replaced by exp(-gamma x^2) with gamma fixed
by FWHM matching. The dimensionless length
script_L = L sigma sqrt(gamma) |k'_p - k'_s| controls how much of the
filter-induced correlation survives; large script_L restores separability.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NumericalOverflowError, SolverError
from .jsa import GaussianTwoPhotonAmplitude, input_state
from .numerics import DEFAULT_N_MAX, SeriesSum, derive_gamma, sum_series

DOMINANCE_LIMIT = 1e-2
MONOTONE_BRACKET = (1.0, 1e4)


class DispersionDominanceWarning(UserWarning):
    pass


@dataclass(frozen=True)
class DispersionParams:
    sigma: float
    M: float
    L: float
    kp_prime: float
    ks_prime: float
    gamma: float
    chi: float | None = None  # None selects chi_special
    n_max: int = DEFAULT_N_MAX
    tol: float = 1e-16

    def __post_init__(self) -> None:
        for name in ("sigma", "M", "L", "gamma"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive, got {getattr(self, name)}")
        if self.kp_prime == self.ks_prime:
            raise DomainError("k'_p and k'_s must differ (zero group-velocity mismatch)")
        if not 1 <= self.n_max <= 1000:
            raise DomainError(f"n_max must lie in [1, 1000], got {self.n_max}")
        if self.dominance_ratio > DOMINANCE_LIMIT:
            warnings.warn(
                f"dispersion does not dominate the response filter: ratio {self.dominance_ratio:.3g}",
                DispersionDominanceWarning,
                stacklevel=3,
            )

    @property
    def dk(self) -> float:
        return abs(self.kp_prime - self.ks_prime)

    @property
    def dominance_ratio(self) -> float:
        """1/(M^2 L^2 gamma dk^2); small when dispersion dominates."""
        return 1.0 / (self.M * self.L * self.dk) ** 2 / self.gamma

    @property
    def chi_value(self) -> float:
        return chi_special(self) if self.chi is None else self.chi

    @classmethod
    def from_script_l(
        cls, script_l: float, sigma: float, M: float, dk: float, gamma: float | None = None, **kw
    ) -> "DispersionParams":
        """Medium length chosen to give ``script_l``; k' split symmetrically."""
        g = derive_gamma() if gamma is None else gamma
        L = physical_length(script_l, sigma, g, dk)
        return cls(sigma=sigma, M=M, L=L, kp_prime=dk / 2, ks_prime=-dk / 2, gamma=g, **kw)


def script_L(p: DispersionParams) -> float:
    return p.L * p.sigma * math.sqrt(p.gamma) * p.dk


def chi_special_factor(gamma: float) -> float:
    """2 chi / |k'_p - k'_s| under the pi-shift condition: exp(1/(4 gamma))."""
    if not gamma > 0:
        raise DomainError(f"gamma must be positive, got {gamma}")
    return math.exp(1.0 / (4.0 * gamma))


def chi_special(p: DispersionParams) -> float:
    return 0.5 * p.dk * chi_special_factor(p.gamma)


def coefficients(n: int, p: DispersionParams) -> dict[str, complex]:
    """The four exponent coefficients exactly as printed; C2 is imaginary.

    psi_n_dispersion applies them with the sign pattern that makes the
    state consistent with the fidelity series (see there).
    """
    if n < 0:
        raise DomainError(f"n must be >= 0, got {n}")
    s, M, Ls, g = p.sigma, p.M, script_L(p), p.gamma
    s2, m2 = s * s, M * M
    D = 2 * n * m2 + s2 + m2 * Ls * Ls
    return {
        "C1": (n * m2 + s2 + m2 * Ls * Ls) / (4 * s2 * D) + 0j,
        "C2": 1j * n * Ls * m2 / (2 * s * math.sqrt(g) * D),
        "C3": n * m2 / (2 * s2 * D) + 0j,
        "C4": n * (2 * n * m2 + s2) / (4 * g * D) + 0j,
    }


def _log_general_term(n: int, p: DispersionParams) -> tuple[float, complex]:
    """log|t_n| and the unit phase of the n-th general-chi fidelity term.

    With q = L^2 M^2 gamma dk^2 and y = sigma^2 (1 + q):
      t_n = (-i r)^n / n! * sqrt(y / (n M^2 + y))
            * exp(-n L^2 M^2 sigma^2 dk^2 / (4 (n M^2 + y))),
      r = 2 pi chi L M sqrt(gamma) / sqrt(1 + q).
    Algebraically identical to the printed form but free of M^(2n).
    """
    chi = p.chi_value
    if n == 0:
        return 0.0, 1 + 0j
    if chi == 0:
        return -math.inf, 0j
    m2 = p.M * p.M
    q = (p.L * p.M * p.dk) ** 2 * p.gamma
    y = p.sigma ** 2 * (1 + q)
    log_r = math.log(2 * math.pi * abs(chi) * p.L * p.M * math.sqrt(p.gamma)) - 0.5 * math.log1p(q)
    expo = -n * (p.L * p.M * p.sigma * p.dk) ** 2 / (4 * (n * m2 + y))
    log_mag = n * log_r - math.lgamma(n + 1) + 0.5 * math.log(y / (n * m2 + y)) + expo
    phase = (1, -1j, -1, 1j)[n % 4]
    if chi < 0 and n % 2:
        phase = -phase
    return log_mag, complex(phase)


def general_term(n: int, p: DispersionParams) -> complex:
    lm, ph = _log_general_term(n, p)
    return ph * math.exp(lm) if lm > -math.inf else 0j


def psi_n_dispersion(n: int, p: DispersionParams) -> GaussianTwoPhotonAmplitude:
    """n-th order amplitude in the dispersive medium.

    Coefficients follow ``coefficients`` with two sign corrections that
    the closed-form overlap with the input demands: the linear terms enter
    with opposite signs for the two modes (c2p = C2, c2s = -C2), and the
    constant enters as +C4. With these, <11|psi_n> reproduces the general
    fidelity-series term for every n. The prefactor carries the
    special-chi value; other chi rescale order n by (chi/chi_special)^n.
    """
    if n < 0:
        raise DomainError(f"n must be >= 0, got {n}")
    if n == 0:
        return input_state(p.sigma)
    c = coefficients(n, p)
    s, M, Ls = p.sigma, p.M, script_L(p)
    s2, m2 = s * s, M * M
    base = s2 + m2 * Ls * Ls
    D = 2 * n * m2 + base
    # sqrt(M^2n Ls^2n base / (base^n D)) * (pi/i)^n / n!, in logs
    log_mag = (
        n * math.log(M * Ls) + 0.5 * math.log(base) - 0.5 * n * math.log(base) - 0.5 * math.log(D)
        + n * math.log(math.pi) - math.lgamma(n + 1)
    )
    ratio = p.chi_value / chi_special(p)
    if ratio == 0:
        scale = 0j
    else:
        log_mag += n * math.log(abs(ratio))
        phase = (1, -1j, -1, 1j)[n % 4] * (-1 if ratio < 0 and n % 2 else 1)
        scale = phase * math.exp(log_mag) / (s * math.sqrt(2 * math.pi))
    return GaussianTwoPhotonAmplitude(
        scale=scale,
        c1p=c["C1"],
        c1s=c["C1"],
        c2p=c["C2"],
        c2s=-c["C2"],
        c3=c["C3"],
        c4=-c["C4"],
    )


def _sum_log_terms(logterm, n_max: int, tol: float) -> SeriesSum:
    """sum_series over terms given by a log-magnitude/phase function."""

    def step(n: int, t: complex) -> complex:
        lm, ph = logterm(n + 1)
        if not math.isfinite(lm) and lm > 0:
            raise NumericalOverflowError(f"term {n + 1} overflows", index=n + 1)
        if lm > 700:
            raise NumericalOverflowError(
                f"exponential factor outgrows the factorial at n={n + 1}", index=n + 1
            )
        return ph * math.exp(lm) if lm > -math.inf else 0j

    lm0, ph0 = logterm(0)
    return sum_series(step, ph0 * math.exp(lm0), n_max, tol)


def amplitude_dispersion_full(p: DispersionParams) -> SeriesSum:
    return _sum_log_terms(lambda n: _log_general_term(n, p), p.n_max, p.tol)


def fidelity_dispersion_full(p: DispersionParams) -> float:
    """1/4 |1 - sum_n t_n|^2 with the general-chi terms."""
    a = amplitude_dispersion_full(p).value
    return 0.25 * abs(1 - a) ** 2


def _log_matched_term(n: int, script_l: float, gamma: float) -> tuple[float, complex]:
    if n == 0:
        return 0.0, 1 + 0j
    l2 = script_l * script_l
    lm = (
        n * math.log(math.pi) + math.log(script_l) - math.lgamma(n + 1)
        - 0.5 * math.log(n + l2) + n * n / (4 * gamma * (n + l2))
    )
    return lm, complex((1, -1j, -1, 1j)[n % 4])


def amplitude_dispersion_matched(script_l: float, gamma: float, n_max: int = DEFAULT_N_MAX) -> SeriesSum:
    if not script_l > 0:
        raise DomainError(f"script_l must be positive, got {script_l}")
    if not gamma > 0:
        raise DomainError(f"gamma must be positive, got {gamma}")
    return _sum_log_terms(lambda n: _log_matched_term(n, script_l, gamma), n_max, 1e-16)


def fidelity_dispersion_matched(script_l: float, gamma: float, n_max: int = DEFAULT_N_MAX) -> float:
    """Fidelity at the special chi when dispersion dominates the filter."""
    a = amplitude_dispersion_matched(script_l, gamma, n_max).value
    return 0.25 * abs(1 - a) ** 2


def _check_monotone(gamma: float, points: int = 100) -> None:
    ls = np.logspace(math.log10(MONOTONE_BRACKET[0]), math.log10(MONOTONE_BRACKET[1]), points)
    f = [fidelity_dispersion_matched(x, gamma) for x in ls]
    for a, b, x in zip(f, f[1:], ls[1:]):
        if b < a - 1e-12:
            raise SolverError(f"fidelity is not monotone on the bracket (drops near script_L={x:.4g})")


def solve_script_L(f_target: float, gamma: float, ftol: float = 1e-7) -> float:
    """Smallest script_L in [1, 1e4] where the matched fidelity reaches f_target."""
    if not 0.5 < f_target < 0.9999:
        raise SolverError(f"target {f_target} outside (0.5, 0.9999)")
    _check_monotone(gamma)
    lo, hi = MONOTONE_BRACKET
    g = lambda x: fidelity_dispersion_matched(x, gamma) - f_target
    glo, ghi = g(lo), g(hi)
    if glo > 0 or ghi < 0:
        raise SolverError(f"target {f_target} not bracketed by script_L in [{lo}, {hi}]")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        gm = g(mid)
        if abs(gm) <= ftol and hi - lo < 1e-9 * mid:
            break
        if gm < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 4 * np.finfo(float).eps * hi:
            break
    return 0.5 * (lo + hi)


def physical_length(script_l: float, sigma: float, gamma: float, dk: float) -> float:
    """Medium length in metres giving ``script_l``."""
    for name, v in (("script_l", script_l), ("sigma", sigma), ("gamma", gamma), ("dk", dk)):
        if not v > 0:
            raise DomainError(f"{name} must be positive, got {v}")
    return script_l / (sigma * math.sqrt(gamma) * dk)
