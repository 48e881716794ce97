"""Permutation-symmetric index spaces and density-matrix containers.

Each of the two spin-1/2 species decomposes into total-spin sectors |J, M, xi>
where xi enumerates the d_J degenerate copies of the spin-J irrep.  States that
are uniform over xi are described by one complex coefficient per label

    rho_{J_A, J_B, N_up, x, y}

where the ket places species A at fluctuation x above its lowest magnetization
(-J_A) and species B at N_up - x, while the bra places A at N_up - y and B at
y.  Ket and bra share the excitation number N_up because the dynamics never
creates coherences between different total magnetizations.  Spins are stored as
doubled integers so that half-integer sectors have exact dictionary keys.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Iterable, NamedTuple

DROP_TOL = 1e-14


class SectorError(ValueError):
    """Raised when sector labels fall outside the admissible index set."""


def doubled_spin(j) -> int:
    """Convert an integer or half-integer spin value to its exact doubled form."""
    two_j = int(round(2 * j))
    if abs(2 * j - two_j) > 1e-9:
        raise SectorError(f"spin {j!r} is not integer or half-integer")
    return two_j


@dataclass(frozen=True)
class SpinSector:
    """Total-spin sector of n spin-1/2 particles with its multiplicity d."""

    n: int
    two_j: int
    d: int

    @property
    def j(self) -> float:
        return self.two_j / 2


def multiplicity(n: int, j) -> int:
    """Number of degenerate copies of the spin-j sector in n spins.

    d_J = binom(n, n/2 - J) - binom(n, n/2 - J - 1), which sums to 2**n over
    all sectors after weighting by the sector dimension 2J + 1.
    """
    two_j = doubled_spin(j)
    if n < 1:
        raise SectorError(f"need at least one spin, got n={n}")
    if two_j < 0 or two_j > n:
        raise SectorError(f"J={j} outside [0, {n / 2}] for n={n}")
    if (n - two_j) % 2 != 0:
        raise SectorError(f"J={j} and n={n} have mismatched parity")
    k = (n - two_j) // 2
    lower = math.comb(n, k - 1) if k >= 1 else 0
    return math.comb(n, k) - lower


def sectors(n: int) -> list[SpinSector]:
    """All sectors of n spins, ordered from largest J down."""
    return [
        SpinSector(n, two_j, multiplicity(n, two_j / 2))
        for two_j in range(n, n % 2 - 1, -2)
    ]


class QuditLabel(NamedTuple):
    """Qudit level q = M + J inside a spin-J sector, with d = 2J + 1 levels."""

    two_j: int
    q: int

    @property
    def magnetization(self) -> float:
        return -self.two_j / 2 + self.q


def qudit_of_magnetization(j, m) -> QuditLabel:
    """Map a magnetization M in [-J, J] to its qudit level q = M + J."""
    two_j = doubled_spin(j)
    two_m = doubled_spin(m)
    if abs(two_m) > two_j or (two_j - two_m) % 2 != 0:
        raise SectorError(f"M={m} outside sector J={j}")
    return QuditLabel(two_j, (two_j + two_m) // 2)


class DoubledIndex(NamedTuple):
    """Label rho_{J_A, J_B, N_up, x, y} with both spins stored doubled."""

    two_j_a: int
    two_j_b: int
    n_up: int
    x: int
    y: int

    def hermitian_partner(self) -> "DoubledIndex":
        """Label of the conjugate coefficient (ket and bra of both species swapped)."""
        return DoubledIndex(
            self.two_j_a, self.two_j_b, self.n_up, self.n_up - self.y, self.n_up - self.x
        )

    @property
    def is_diagonal(self) -> bool:
        return self.x + self.y == self.n_up


def validate_index(idx: DoubledIndex) -> DoubledIndex:
    """Check the sector bounds of a doubled index; return it unchanged."""
    two_j_a, two_j_b, n_up, x, y = idx
    ok = (
        two_j_a >= 0
        and two_j_b >= 0
        and n_up >= 0
        and 0 <= x <= n_up
        and 0 <= y <= n_up
        and x <= two_j_a
        and n_up - x <= two_j_b
        and n_up - y <= two_j_a
        and y <= two_j_b
    )
    if not ok:
        raise SectorError(f"index {tuple(idx)} outside the admissible set")
    return idx


@dataclass
class SymmetricDensity:
    """Sparse map from DoubledIndex to a complex coefficient.

    Treated as an immutable value after construction; evolution code works on
    copies.  Coefficients below DROP_TOL in magnitude may be pruned.
    """

    entries: dict[DoubledIndex, complex]

    def get(self, idx: DoubledIndex) -> complex:
        return self.entries.get(idx, 0.0 + 0.0j)

    def copy(self) -> "SymmetricDensity":
        return SymmetricDensity(dict(self.entries))

    def __len__(self) -> int:
        return len(self.entries)


def _mixture_weight(delta_max: int, n_up_max: int) -> float:
    return 1.0 / (n_up_max * (2 * delta_max + 1))


def _check_mixture_args(j_a, delta_max: int, n_up_max: int, a_level: int) -> int:
    two_j_a = doubled_spin(j_a)
    if n_up_max < 1:
        raise SectorError(f"n_up_max must be positive, got {n_up_max}")
    if delta_max < 0:
        raise SectorError(f"delta_max must be nonnegative, got {delta_max}")
    if delta_max >= j_a:
        raise SectorError(f"delta_max={delta_max} must be below J_A={j_a}")
    if n_up_max > j_a:
        # J_A >= N_up_max keeps every mixture level well inside both qudits
        raise SectorError(f"n_up_max={n_up_max} exceeds J_A={j_a}")
    if not 0 <= a_level <= two_j_a:
        raise SectorError(f"a_level={a_level} outside qudit range for J_A={j_a}")
    return two_j_a


def build_initial_state(j_a, delta_max: int, n_up_max: int, a_level: int) -> SymmetricDensity:
    """Uniform mixture with species A pure in level a_level and B highly mixed.

    Species B is spread evenly over J_B in [J_A - delta_max, J_A + delta_max]
    and levels b in [0, n_up_max - 1]; every nonzero coefficient equals
    1 / (n_up_max * (2 delta_max + 1)) and the trace is one.
    """
    two_j_a = _check_mixture_args(j_a, delta_max, n_up_max, a_level)
    weight = _mixture_weight(delta_max, n_up_max)
    entries: dict[DoubledIndex, complex] = {}
    for two_j_b in range(two_j_a - 2 * delta_max, two_j_a + 2 * delta_max + 1, 2):
        for b in range(n_up_max):
            idx = DoubledIndex(two_j_a, two_j_b, a_level + b, a_level, b)
            entries[validate_index(idx)] = complex(weight)
    return SymmetricDensity(entries)


def build_swap_state(j_a, delta_max: int, n_up_max: int, a_level: int) -> SymmetricDensity:
    """Mirror of build_initial_state: A mixed over [0, n_up_max - 1], B pure."""
    two_j_a = _check_mixture_args(j_a, delta_max, n_up_max, a_level)
    weight = _mixture_weight(delta_max, n_up_max)
    entries: dict[DoubledIndex, complex] = {}
    for two_j_b in range(two_j_a - 2 * delta_max, two_j_a + 2 * delta_max + 1, 2):
        for a in range(n_up_max):
            idx = DoubledIndex(two_j_a, two_j_b, a + a_level, a, a_level)
            entries[validate_index(idx)] = complex(weight)
    return SymmetricDensity(entries)


def trace(rho: SymmetricDensity, tol: float = 1e-9) -> float:
    """Sum of diagonal coefficients (x + y = N_up); warns on an imaginary part."""
    total = 0.0 + 0.0j
    for idx, value in rho.entries.items():
        if idx.is_diagonal:
            total += value
    if abs(total.imag) > tol:
        warnings.warn(
            f"trace has imaginary part {total.imag:.3e}, state violates hermiticity",
            stacklevel=2,
        )
    return total.real


def hermitize(rho: SymmetricDensity) -> SymmetricDensity:
    """Average each coefficient with the conjugate of its hermitian partner."""
    entries: dict[DoubledIndex, complex] = {}
    for idx, value in rho.entries.items():
        partner = idx.hermitian_partner()
        sym = 0.5 * (value + rho.get(partner).conjugate())
        entries[idx] = sym
        if partner not in rho.entries:
            entries[partner] = sym.conjugate()
    return SymmetricDensity(entries)


def hermiticity_defect(rho: SymmetricDensity) -> float:
    """Largest deviation |rho_k - conj(rho_partner(k))| over all stored labels."""
    worst = 0.0
    for idx, value in rho.entries.items():
        dev = abs(value - rho.get(idx.hermitian_partner()).conjugate())
        if dev > worst:
            worst = dev
    return worst


def prune(rho: SymmetricDensity, tol: float = DROP_TOL) -> SymmetricDensity:
    """Drop coefficients with magnitude at or below tol."""
    return SymmetricDensity({k: v for k, v in rho.entries.items() if abs(v) > tol})


def to_records(rho: SymmetricDensity) -> list[dict]:
    """Serialize a state as a list of {J2_A, J2_B, N_up, x, y, re, im} records."""
    records = []
    for idx in sorted(rho.entries):
        value = rho.entries[idx]
        records.append(
            {
                "J2_A": idx.two_j_a,
                "J2_B": idx.two_j_b,
                "N_up": idx.n_up,
                "x": idx.x,
                "y": idx.y,
                "re": value.real,
                "im": value.imag,
            }
        )
    return records


def from_records(records: Iterable[dict]) -> SymmetricDensity:
    """Rebuild a state from records produced by to_records."""
    entries: dict[DoubledIndex, complex] = {}
    for rec in records:
        idx = DoubledIndex(
            int(rec["J2_A"]), int(rec["J2_B"]), int(rec["N_up"]), int(rec["x"]), int(rec["y"])
        )
        entries[validate_index(idx)] = complex(float(rec["re"]), float(rec["im"]))
    return SymmetricDensity(entries)
