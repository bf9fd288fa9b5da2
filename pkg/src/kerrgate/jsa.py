"""Two-photon joint spectral amplitudes: closed-form complex Gaussians,
gridded samples, overlaps and Schmidt spectra.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import IO

import numpy as np

from .errors import DomainError, GridTooSmallError
from .numerics import FrequencyGrid, _check_finite, integrate_2d

__all__ = [
    "FrequencyGrid",
    "GaussianTwoPhotonAmplitude",
    "GriddedAmplitude",
    "SchmidtSpectrum",
    "input_state",
    "evaluate",
    "to_grid",
    "covering_grid",
    "analytic_overlap",
    "schmidt",
]

DEFAULT_POINTS = 256
DEFAULT_HALF_WIDTH = 8.0  # in units of sigma
COVERAGE_RATIO = 1e-6


def _quad_is_integrable(a11: float, a22: float, a12x2: float) -> bool:
    return a11 > 0 and a22 > 0 and 4 * a11 * a22 > a12x2 * a12x2


@dataclass(frozen=True)
class GaussianTwoPhotonAmplitude:
    """f(nu_p, nu_s) = scale * exp(-(c1p nu_p^2 + c1s nu_s^2 + c2p nu_p
    + c2s nu_s + c3 nu_p nu_s + c4))."""

    scale: complex
    c1p: complex
    c1s: complex
    c2p: complex = 0j
    c2s: complex = 0j
    c3: complex = 0j
    c4: complex = 0j

    def __post_init__(self) -> None:
        for name in ("scale", "c1p", "c1s", "c2p", "c2s", "c3", "c4"):
            v = complex(getattr(self, name))
            if not (math.isfinite(v.real) and math.isfinite(v.imag)):
                raise DomainError(f"{name} is not finite: {v}")
            object.__setattr__(self, name, v)
        if not _quad_is_integrable(self.c1p.real, self.c1s.real, self.c3.real):
            raise DomainError(
                "quadratic form is not square integrable: "
                f"Re c1p={self.c1p.real:.3g}, Re c1s={self.c1s.real:.3g}, Re c3={self.c3.real:.3g}"
            )

    def scaled(self, factor: complex) -> "GaussianTwoPhotonAmplitude":
        return GaussianTwoPhotonAmplitude(
            self.scale * factor, self.c1p, self.c1s, self.c2p, self.c2s, self.c3, self.c4
        )


@dataclass(frozen=True)
class GriddedAmplitude:
    grid: FrequencyGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=complex)
        n = self.grid.points_per_axis
        if v.shape != (n, n):
            raise DomainError(f"values have shape {v.shape}, grid expects {(n, n)}")
        _check_finite(v, self.grid)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def norm_squared(self) -> float:
        return integrate_2d(np.abs(self.values) ** 2, self.grid).real

    def norm(self) -> float:
        return math.sqrt(self.norm_squared())

    def overlap(self, other: "GriddedAmplitude") -> complex:
        """<self|other> on the shared grid."""
        if other.grid != self.grid:
            raise DomainError("amplitudes live on different grids")
        return integrate_2d(np.conj(self.values) * other.values, self.grid)

    def to_csv(self, out: str | IO[str]) -> None:
        """Write rows (nu_p, nu_s, re, im), nu_s varying fastest."""
        if isinstance(out, str):
            with open(out, "w", newline="") as fh:
                self.to_csv(fh)
            return
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["nu_p", "nu_s", "re", "im"])
        x = self.grid.nodes
        for i, p in enumerate(x):
            for j, s in enumerate(x):
                v = self.values[i, j]
                w.writerow([repr(float(p)), repr(float(s)), repr(float(v.real)), repr(float(v.imag))])


@dataclass(frozen=True)
class SchmidtSpectrum:
    lambdas: tuple[float, ...]
    purity: float
    entropy: float
    discarded: float = 0.0


def input_state(sigma: float) -> GaussianTwoPhotonAmplitude:
    """Separable |11> with Gaussian spectra of width sigma, unit norm."""
    if not sigma > 0:
        raise DomainError(f"sigma must be positive, got {sigma}")
    c = 1.0 / (4 * sigma * sigma)
    return GaussianTwoPhotonAmplitude(scale=1.0 / (sigma * math.sqrt(2 * math.pi)), c1p=c, c1s=c)


def evaluate(f: GaussianTwoPhotonAmplitude, nu_p, nu_s):
    p = np.asarray(nu_p, dtype=float)
    s = np.asarray(nu_s, dtype=float)
    q = f.c1p * p * p + f.c1s * s * s + f.c2p * p + f.c2s * s + f.c3 * p * s + f.c4
    v = f.scale * np.exp(-q)
    return complex(v) if np.ndim(v) == 0 else v


def _edge_ratio(values: np.ndarray) -> float:
    a = np.abs(values)
    peak = a.max()
    if peak == 0:
        return 0.0
    edge = max(a[0].max(), a[-1].max(), a[:, 0].max(), a[:, -1].max())
    return float(edge / peak)


def to_grid(f: GaussianTwoPhotonAmplitude, grid: FrequencyGrid) -> GriddedAmplitude:
    values = evaluate(f, *grid.mesh())
    ratio = _edge_ratio(values)
    if ratio >= COVERAGE_RATIO:
        raise GridTooSmallError(
            f"amplitude not contained by grid: edge/peak = {ratio:.3g} (limit {COVERAGE_RATIO:g})",
            edge_ratio=ratio,
        )
    return GriddedAmplitude(grid, values)


def covering_grid(
    f: GaussianTwoPhotonAmplitude,
    points_per_axis: int = DEFAULT_POINTS,
    rel: float = 1e-8,
) -> FrequencyGrid:
    """Smallest symmetric grid on which |f| has fallen below ``rel`` of
    its maximum everywhere outside.

    Uses the level ellipse of Re(exponent) around its minimum.
    """
    B = np.array([[f.c1p.real, 0.5 * f.c3.real], [0.5 * f.c3.real, f.c1s.real]])
    J = np.array([f.c2p.real, f.c2s.real])
    Binv = np.linalg.inv(B)
    center = -0.5 * Binv @ J
    depth = math.log(1.0 / rel)
    reach = np.abs(center) + np.sqrt(depth * np.diag(Binv))
    return FrequencyGrid.symmetric(float(reach.max()), points_per_axis)


def _combined_form(a: GaussianTwoPhotonAmplitude, b: GaussianTwoPhotonAmplitude):
    A = np.array(
        [
            [a.c1p.conjugate() + b.c1p, 0.5 * (a.c3.conjugate() + b.c3)],
            [0.5 * (a.c3.conjugate() + b.c3), a.c1s.conjugate() + b.c1s],
        ]
    )
    J = np.array([a.c2p.conjugate() + b.c2p, a.c2s.conjugate() + b.c2s])
    C = a.c4.conjugate() + b.c4
    return A, J, C


def analytic_overlap(a: GaussianTwoPhotonAmplitude, b: GaussianTwoPhotonAmplitude) -> complex:
    """Closed form of the double integral of conj(a) * b over the plane.

    With the combined exponent -(x^T A x + J^T x + C) the integral is
    pi / sqrt(det A) * exp(J^T A^{-1} J / 4 - C); sqrt(det A) is taken as
    the product of principal roots of the eigenvalues, which is the
    analytic continuation from real positive-definite A.
    """
    A, J, C = _combined_form(a, b)
    if not _quad_is_integrable(A[0, 0].real, A[1, 1].real, 2 * A[0, 1].real):
        raise DomainError("combined quadratic form is not integrable")
    det = A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
    half_tr = 0.5 * (A[0, 0] + A[1, 1])
    disc = np.sqrt(half_tr * half_tr - det)
    sqrt_det = np.sqrt(half_tr + disc) * np.sqrt(half_tr - disc)
    Ainv = np.array([[A[1, 1], -A[0, 1]], [-A[1, 0], A[0, 0]]]) / det
    expo = J @ Ainv @ J / 4 - C
    return complex(a.scale.conjugate() * b.scale * math.pi / sqrt_det * np.exp(expo))


def schmidt(g: GriddedAmplitude, k_max: int | None = None) -> SchmidtSpectrum:
    """Schmidt spectrum from the SVD of W^1/2 V W^1/2.

    ``lambdas`` holds the k_max largest coefficients (all of them when
    k_max is None); purity and entropy always use the full spectrum and
    ``discarded`` is the weight left out of ``lambdas``.
    """
    w = np.sqrt(g.grid.weights)
    s = np.linalg.svd(w[:, None] * g.values * w[None, :], compute_uv=False)
    p = s * s
    total = p.sum()
    if not total > 0:
        raise DomainError("amplitude has zero norm")
    lam = p / total
    purity = float(np.sum(lam * lam))
    nz = lam[lam > 0]
    entropy = float(max(0.0, -np.sum(nz * np.log2(nz))))
    kept = lam if k_max is None else lam[:k_max]
    return SchmidtSpectrum(
        lambdas=tuple(float(x) for x in kept),
        purity=purity,
        entropy=entropy,
        discarded=float(max(0.0, 1.0 - kept.sum())),
    )
