"""Mirror-symmetry and odd-commensurability checks for transfer chains.

A tridiagonal chain inverts populations perfectly at a finite time exactly when
it commutes with the mirror permutation and all eigenvalue gaps are odd
multiples of a common base frequency pi / T.  The minimal period divides out
the greatest common divisor of the odd multipliers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .coherent import TridiagonalChain


@dataclass(frozen=True)
class Spectrum:
    """Sorted eigenvalues of a chain."""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)


@dataclass(frozen=True)
class CommensurabilityReport:
    """Outcome of the odd-commensurability test.

    failure is None on success, otherwise "degenerate" (repeated eigenvalues,
    which the mirror argument cannot handle) or "incommensurate".  residual is
    the largest relative deviation of a gap from the fitted odd-multiple grid.
    """

    is_odd_commensurate: bool
    period: float | None
    odd_integers: tuple[int, ...]
    residual: float
    failure: str | None = None


def mirror_residual(chain: TridiagonalChain) -> float:
    """Relative asymmetry of the chain under index reversal."""
    scale = 1e-300
    if chain.v.size:
        scale = max(scale, float(np.max(np.abs(chain.v))))
    if chain.c.size:
        scale = max(scale, float(np.max(np.abs(chain.c))))
    dev = float(np.max(np.abs(chain.v - chain.v[::-1]))) if chain.v.size else 0.0
    if chain.c.size:
        dev = max(dev, float(np.max(np.abs(chain.c - chain.c[::-1]))))
    if dev == 0.0:
        return 0.0
    return dev / scale


def mirror_symmetric(chain: TridiagonalChain, tol: float = 1e-9) -> bool:
    """True when the diagonal and the hopping profile are both palindromic."""
    return mirror_residual(chain) <= tol


def _eigensystem(chain: TridiagonalChain):
    if chain.dim == 1:
        return chain.v.copy(), np.ones((1, 1))
    return eigh_tridiagonal(chain.v, chain.c)


def eigenvalues(chain: TridiagonalChain) -> Spectrum:
    """Full spectrum in ascending order."""
    values, _ = _eigensystem(chain)
    return Spectrum(values)


def odd_commensurability(
    spectrum: Spectrum, tol_rel: float = 1e-9, max_odd: int = 15
) -> CommensurabilityReport:
    """Search for a base frequency such that all gaps are odd multiples of it.

    Candidate bases are the smallest gap divided by odd integers up to
    max_odd.  Each candidate is refined by least squares over the implied odd
    grid before measuring the residual.  A single eigenvalue is trivially
    commensurate with an undefined period; a degenerate pair is rejected
    outright because the inversion argument needs a simple Jacobi spectrum.
    """
    values = np.asarray(spectrum.values, dtype=float)
    if values.size < 2:
        return CommensurabilityReport(True, None, (), 0.0, None)
    gaps = np.diff(values)
    spread = float(values[-1] - values[0])
    if spread <= 0.0 or float(np.min(gaps)) <= tol_rel * spread:
        return CommensurabilityReport(False, None, (), math.nan, "degenerate")
    g_min = float(np.min(gaps))
    best_residual = math.inf
    best_odd: tuple[int, ...] = ()
    for k in range(1, max_odd + 1, 2):
        base = g_min / k
        ratios = gaps / base
        odd = np.maximum(1, 2 * np.round((ratios - 1) / 2).astype(int) + 1)
        base_fit = float(np.dot(gaps, odd) / np.dot(odd, odd))
        residual = float(np.max(np.abs(gaps - odd * base_fit) / gaps))
        if residual < best_residual:
            best_residual = residual
            best_odd = tuple(int(n) for n in odd)
        if residual <= tol_rel:
            divisor = int(np.gcd.reduce(odd))
            odd //= divisor
            base_fit *= divisor
            return CommensurabilityReport(
                True, math.pi / base_fit, tuple(int(n) for n in odd), residual, None
            )
    return CommensurabilityReport(False, None, best_odd, best_residual, "incommensurate")


def transfer_fidelity(chain: TridiagonalChain, t: float, x0: int = 0) -> float:
    """Probability to find the chain at the mirror site of x0 after time t."""
    w, u = _eigensystem(chain)
    amp = np.sum(u[x0] * u[chain.dim - 1 - x0] * np.exp(-1j * w * t))
    return float(abs(amp) ** 2)


def transfer_fidelity_min(chain: TridiagonalChain, t: float) -> float:
    """Worst-case mirror fidelity over all starting sites."""
    w, u = _eigensystem(chain)
    propagator = (u * np.exp(-1j * w * t)) @ u.T
    mirrored = propagator[::-1, :]
    return float(np.min(np.abs(np.diagonal(mirrored)) ** 2))
