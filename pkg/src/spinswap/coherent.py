"""Effective tridiagonal chains, tuned couplings, and analytic swap periods.

In a block of fixed (J_A, J_B, N_up) the interaction maps onto a one
dimensional chain over the fluctuation index x with hopping

    C_x = sqrt((x+1)(2J_A - x)(N_up - x)(2J_B - N_up + x + 1)).

The two correction terms, proportional to gamma_M and gamma_J, are diagonal in
x within the block, so they only rescale the chain coupling by a factor that
depends on the sector labels.  Choosing gamma_M and gamma_J as rational
functions of J makes that factor cancel the leading sector dependence of the
swap period, giving a single period for all sectors of the mixture.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .sector_basis import SectorError, doubled_spin


@dataclass(frozen=True)
class TridiagonalChain:
    """Real symmetric tridiagonal Hamiltonian: diagonal v, hopping c."""

    v: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.v, dtype=float)
        c = np.asarray(self.c, dtype=float)
        if v.ndim != 1 or c.ndim != 1 or c.size != max(v.size - 1, 0):
            raise ValueError(f"need len(c) == len(v) - 1, got {v.size} and {c.size}")
        if v.size < 1:
            raise ValueError("chain needs at least one site")
        if not (np.all(np.isfinite(v)) and np.all(np.isfinite(c))):
            raise ValueError("chain entries must be finite")
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "c", c)

    @property
    def dim(self) -> int:
        return self.v.size


@dataclass(frozen=True)
class TunedParams:
    """Coherent coupling strengths: bare gamma_int plus the two corrections."""

    gamma_int: float
    gamma_m: float = 0.0
    gamma_j: float = 0.0


def tune_params(j, gamma_int: float = 1.0) -> TunedParams:
    """Correction couplings that equalize the swap period across sectors.

    gamma_M / gamma_int = (2J + 1) / (2J (7J + 4))
    gamma_J / gamma_int = -1 / (J (7J + 4))
    """
    if j <= 0:
        raise SectorError(f"tuning requires J > 0, got {j}")
    return TunedParams(
        gamma_int=gamma_int,
        gamma_m=gamma_int * (2 * j + 1) / (2 * j * (7 * j + 4)),
        gamma_j=-gamma_int / (j * (7 * j + 4)),
    )


def detuned_params(j, gamma_int: float = 1.0, eps_m: float = 0.0, eps_j: float = 0.0) -> TunedParams:
    """Tuned couplings with fractional errors: gamma(eps) = (1 + eps) * gamma."""
    exact = tune_params(j, gamma_int)
    return TunedParams(gamma_int, (1 + eps_m) * exact.gamma_m, (1 + eps_j) * exact.gamma_j)


def hopping_coefficient(x: int, j_a, j_b, n_up: int) -> float:
    """Bare chain coupling between fluctuation levels x and x + 1."""
    if not 0 <= x <= n_up - 1:
        raise SectorError(f"bond index x={x} outside [0, {n_up - 1}]")
    factors = (x + 1, 2 * j_a - x, n_up - x, 2 * j_b - n_up + x + 1)
    if min(factors) < 0:
        raise SectorError(f"negative factor in hopping at x={x}: {factors}")
    return math.sqrt(factors[0] * factors[1] * factors[2] * factors[3])


def effective_coupling(j_a, j_b, n_up: int, params) -> float:
    """Chain coupling prefactor including the diagonal correction terms.

    On a fixed block the z-magnetization sum has eigenvalue N_up - J_A - J_B
    and the squared total spin of species B has eigenvalue J_B (J_B + 1); both
    are independent of x, so they multiply gamma_int rather than distorting the
    chain profile.
    """
    return (
        params.gamma_int
        + params.gamma_m * (n_up - j_a - j_b)
        + params.gamma_j * j_b * (j_b + 1)
    )


def build_chain(j_a, delta: int, n_up: int, params) -> TridiagonalChain:
    """Chain Hamiltonian of the (J_A, J_B = J_A + delta, N_up) block.

    Uses the exact operator products, not the large-J expansion: the diagonal
    corrections enter only through effective_coupling.
    """
    j_b = j_a + delta
    g = effective_coupling(j_a, j_b, n_up, params)
    c = np.array([g * hopping_coefficient(x, j_a, j_b, n_up) for x in range(n_up)])
    return TridiagonalChain(np.zeros(n_up + 1), c)


def w_factor(x: int, n_up: int, delta: int, j, params) -> float:
    """Sector-dependent period rescaling factor, evaluated exactly.

    W(x, N_up, Delta) multiplies J gamma_int sqrt((x+1)(N_up-x)) to give the
    chain coupling; the tuned parameters make it independent of N_up and Delta
    to first order in both.
    """
    bracket = effective_coupling(j, j + delta, n_up, params) / params.gamma_int
    radicand = (2 - x / j) * (2 + 2 * delta / j - n_up / j + x / j + 1 / j)
    if radicand < 0:
        raise SectorError(f"negative radicand in W at x={x}, n_up={n_up}, delta={delta}")
    return bracket * math.sqrt(radicand)


def w_limit(j) -> float:
    """Large-sector limit of W at tuned couplings: (8J^2 + 6J + 1) / (7J^2 + 4J)."""
    return (8 * j * j + 6 * j + 1) / (7 * j * j + 4 * j)


def swap_period_pure(j, delta: int, n_up: int, gamma_int: float = 1.0) -> float:
    """Transfer period of a single uncorrected block, leading order in 1/J."""
    denom = 2 + delta / j - (n_up - 1) / (2 * j)
    if abs(denom) < 1e-12:
        raise SectorError(f"degenerate period denominator at delta={delta}, n_up={n_up}")
    return math.pi / (2 * gamma_int * j * denom)


def swap_period_tuned(j, gamma_int: float = 1.0) -> float:
    """Common swap period of all sectors at tuned couplings."""
    if j <= 0:
        raise SectorError(f"period requires J > 0, got {j}")
    return math.pi / (2 * gamma_int * j) * (7 * j * j + 4 * j) / (8 * j * j + 6 * j + 1)


def mi_jx_chain(j, gamma: float = 1.0) -> TridiagonalChain:
    """Chain of gamma * J_x, the canonical magnetization-inversion generator.

    Eigenvalues are gamma * {-J, ..., J}, so every gap equals gamma and the
    inversion period is pi / gamma.
    """
    two_j = doubled_spin(j)
    if two_j < 1:
        raise SectorError(f"need J >= 1/2, got {j}")
    c = np.array([0.5 * gamma * math.sqrt((i + 1) * (two_j - i)) for i in range(two_j)])
    return TridiagonalChain(np.zeros(two_j + 1), c)


def write_chain(path, chain: TridiagonalChain) -> None:
    """Write a chain as two plain-text lines: diagonal v, then hopping c."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write("# tridiagonal chain: line 1 = diagonal V, line 2 = hopping C\n")
        fh.write(" ".join(f"{value:.17g}" for value in chain.v) + "\n")
        fh.write(" ".join(f"{value:.17g}" for value in chain.c) + "\n")


def read_chain(path) -> TridiagonalChain:
    """Read a chain written by write_chain ('#' lines are comments)."""
    rows = []
    with open(path, "r", encoding="ascii") as fh:
        for line in fh:
            body = line.split("#", 1)[0].strip()
            if body:
                rows.append([float(tok) for tok in body.split()])
    if len(rows) != 2:
        raise ValueError(f"expected two data lines (V then C), got {len(rows)}")
    v, c = rows
    if len(c) != len(v) - 1:
        raise ValueError(f"need len(C) == len(V) - 1, got {len(v)} and {len(c)}")
    return TridiagonalChain(np.array(v), np.array(c))
