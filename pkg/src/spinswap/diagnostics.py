"""Scalar observables of sparse symmetric states and of superoperators.

The headline metric is the coefficient-space Hilbert-Schmidt distance: a plain
sum of squared coefficient differences over the union support, with no
multiplicity weights.  A multiplicity-weighted variant is available for
comparison against full-space norms.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

from .sector_basis import SectorError, SymmetricDensity, multiplicity, trace


def weighted_hs_distance_sq(rho: SymmetricDensity, sigma: SymmetricDensity) -> float:
    """Sum of |rho_k - sigma_k|^2 over the union of both supports."""
    keys = rho.entries.keys() | sigma.entries.keys()
    return float(
        sum(abs(rho.entries.get(k, 0.0) - sigma.entries.get(k, 0.0)) ** 2 for k in keys)
    )


def hs_distance_sq(
    rho: SymmetricDensity, sigma: SymmetricDensity, n_a: int, n_b: int
) -> float:
    """Distance with each term weighted by the sector multiplicity product.

    Reproduces the squared Frobenius distance of the embedded full-space
    operators divided by d_A * d_B per sector, i.e. coefficients are compared
    on the footing the embedding normalization induces.
    """
    keys = rho.entries.keys() | sigma.entries.keys()
    total = 0.0
    for k in keys:
        d_a = multiplicity(n_a, k.two_j_a / 2)
        d_b = multiplicity(n_b, k.two_j_b / 2)
        diff = rho.entries.get(k, 0.0) - sigma.entries.get(k, 0.0)
        total += abs(diff) ** 2 / (d_a * d_b)
    return float(total)


def _diagonal_distribution(rho: SymmetricDensity, species: str) -> dict[tuple[int, int], float]:
    """Populations keyed by (doubled sector spin, qudit level) for one species."""
    if species not in ("A", "B"):
        raise ValueError(f"species must be 'A' or 'B', got {species!r}")
    weights: dict[tuple[int, int], float] = {}
    for idx, value in rho.entries.items():
        if not idx.is_diagonal:
            continue
        if species == "A":
            key = (idx.two_j_a, idx.x)
        else:
            key = (idx.two_j_b, idx.n_up - idx.x)
        weights[key] = weights.get(key, 0.0) + value.real
    return weights


def qudit_moments(rho: SymmetricDensity, species: str) -> tuple[float, float]:
    """First and second moments of the qudit level of one species.

    The diagonal populations are renormalized by their sum, so the moments are
    insensitive to small trace drift.
    """
    weights = _diagonal_distribution(rho, species)
    total = sum(weights.values())
    if total <= 0:
        raise SectorError(f"state has no positive diagonal weight for species {species}")
    mean = sum(w * q for (_, q), w in weights.items()) / total
    mean_sq = sum(w * q * q for (_, q), w in weights.items()) / total
    return mean, mean_sq


def purity_weighted(rho: SymmetricDensity, species: str = "B") -> float:
    """Sum of squared populations of one species' (sector, level) distribution.

    Equals 1 exactly when all diagonal weight sits on a single sector and
    level, and decreases as the marginal spreads.
    """
    weights = _diagonal_distribution(rho, species)
    total = sum(weights.values())
    if total <= 0:
        raise SectorError(f"state has no positive diagonal weight for species {species}")
    return sum((w / total) ** 2 for w in weights.values())


def one_norm(superop) -> float:
    """Induced 1-norm: largest column sum of absolute term weights."""
    columns: dict = {}
    for (src, _dst), weight in superop.terms.items():
        columns[src] = columns.get(src, 0.0) + abs(weight)
    return max(columns.values()) if columns else 0.0


def threshold_estimates(
    j: float, n_up_max: int, n_a: int, gamma_int: float = 1.0
) -> dict[str, float]:
    """Rate scales at which each decoherence channel disrupts the transfer.

    Collective decay competes at the bare coupling; collective dephasing at
    gamma J / N_up_max; local dephasing at gamma J^2 / N_A; local decay at
    gamma N_up_max J / (N_A / 2 - J + N_up_max).
    """
    if n_up_max < 1:
        raise ValueError(f"n_up_max must be positive, got {n_up_max}")
    if n_a < 1:
        raise ValueError(f"n_a must be positive, got {n_a}")
    denominator = n_a / 2 - j + n_up_max
    if denominator <= 0:
        raise ValueError(
            f"local decay scale undefined: N_A/2 - J + N_up_max = {denominator}"
        )
    return {
        "gamma_minus": gamma_int,
        "gamma_z": gamma_int * j / n_up_max,
        "kappa_z": gamma_int * j * j / n_a,
        "kappa_minus": gamma_int * n_up_max * j / denominator,
    }


@dataclass
class DiagnosticsRecord:
    """One sampled row of scalar observables along a trajectory."""

    time: float
    trace: float
    dist_sq_initial: float
    dist_sq_swap: float
    q_mean_a: float
    q_sq_a: float
    q_mean_b: float
    q_sq_b: float
    purity_b: float

    def row(self) -> list[float]:
        return [getattr(self, f.name) for f in fields(self)]


DIAGNOSTICS_HEADER: tuple[str, ...] = tuple(f.name for f in fields(DiagnosticsRecord))


def record_sample(
    t: float,
    state: SymmetricDensity,
    rho_initial: SymmetricDensity,
    rho_swap: SymmetricDensity,
) -> DiagnosticsRecord:
    """Evaluate every tracked observable of a state at one sample time."""
    mean_a, sq_a = qudit_moments(state, "A")
    mean_b, sq_b = qudit_moments(state, "B")
    value = trace(state)
    if isinstance(value, complex):
        value = value.real
    return DiagnosticsRecord(
        time=t,
        trace=float(value),
        dist_sq_initial=weighted_hs_distance_sq(state, rho_initial),
        dist_sq_swap=weighted_hs_distance_sq(state, rho_swap),
        q_mean_a=mean_a,
        q_sq_a=sq_a,
        q_mean_b=mean_b,
        q_sq_b=sq_b,
        purity_b=purity_weighted(state, "B"),
    )
