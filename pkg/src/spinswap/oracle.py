"""Brute-force site-space route for validating the sector-basis dynamics.

Everything here works with dense operators on the full tensor product of
individual spin-1/2 sites, with no permutation-symmetry reduction.  States are
projected onto the symmetric coefficient basis after the fact, so agreement
with the reduced propagation checks every branch weight and sign at once.

Site convention: bit value 1 is spin up, site 0 is the most significant bit.
Qudit levels count excitations above the fully polarized down state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import null_space

from .lindblad import IntegrationError, Rates
from .sector_basis import (
    DROP_TOL,
    DoubledIndex,
    SectorError,
    SymmetricDensity,
    multiplicity,
)

MAX_TOTAL_SITES = 12

S_MINUS = np.array([[0.0, 1.0], [0.0, 0.0]])
S_PLUS = S_MINUS.T.copy()
S_Z = np.diag([-0.5, 0.5])
PAULI_Z = np.diag([-1.0, 1.0])
IDENTITY_2 = np.eye(2)


@dataclass
class FullState:
    """Dense density matrix over n_a + n_b spin-1/2 sites, species A first."""

    matrix: np.ndarray
    n_a: int
    n_b: int

    def __post_init__(self):
        dim = 2 ** (self.n_a + self.n_b)
        if self.matrix.shape != (dim, dim):
            raise ValueError(
                f"matrix shape {self.matrix.shape} does not match {self.n_a}+{self.n_b} sites"
            )


def site_operator(n: int, site: int, single: np.ndarray) -> np.ndarray:
    """Embed a single-site operator at the given site of an n-site register."""
    out = np.eye(1)
    for i in range(n):
        out = np.kron(out, single if i == site else IDENTITY_2)
    return out


def collective_operator(n: int, single: np.ndarray) -> np.ndarray:
    """Sum of the single-site operator over all n sites."""
    dim = 2**n
    out = np.zeros((dim, dim))
    for i in range(n):
        out += site_operator(n, i, single)
    return out


def species_basis(n: int) -> dict[int, np.ndarray]:
    """Orthonormal spin-sector bases of an n-site register.

    Returns a map from doubled sector spin to an array of shape
    (two_j + 1, d_J, 2**n) indexed by (qudit level, multiplicity label, site
    amplitude).  Level families are generated by repeated collective lowering
    from the highest-weight kernel, so every family is internally consistent.
    """
    j_plus = collective_operator(n, S_PLUS)
    j_minus = collective_operator(n, S_MINUS)
    by_count: list[list[int]] = [[] for _ in range(n + 1)]
    for state in range(2**n):
        by_count[bin(state).count("1")].append(state)

    out: dict[int, np.ndarray] = {}
    for two_j in range(n % 2, n + 1, 2):
        d = multiplicity(n, two_j / 2)
        if d == 0:
            continue
        k = (two_j + n) // 2
        if k == n:
            kernel = np.eye(len(by_count[k]))
        else:
            restricted = j_plus[np.ix_(by_count[k + 1], by_count[k])]
            kernel = null_space(restricted)
        if kernel.shape[1] != d:
            raise RuntimeError(
                f"highest-weight kernel has dimension {kernel.shape[1]}, expected {d}"
            )
        levels = np.zeros((two_j + 1, d, 2**n))
        top = np.zeros((d, 2**n))
        top[:, by_count[k]] = kernel.T
        levels[two_j] = top
        for q in range(two_j - 1, -1, -1):
            lowered = levels[q + 1] @ j_minus.T
            levels[q] = lowered / math.sqrt((q + 1) * (two_j - q))
        out[two_j] = levels
    return out


def _species_a_operator(op: np.ndarray, n_b: int) -> np.ndarray:
    return np.kron(op, np.eye(2**n_b))


def _species_b_operator(op: np.ndarray, n_a: int) -> np.ndarray:
    return np.kron(np.eye(2**n_a), op)


def _hamiltonian(n_a: int, n_b: int, rates: Rates) -> np.ndarray:
    jp_a = _species_a_operator(collective_operator(n_a, S_PLUS), n_b)
    jm_a = _species_a_operator(collective_operator(n_a, S_MINUS), n_b)
    jz_a = _species_a_operator(collective_operator(n_a, S_Z), n_b)
    jp_b = _species_b_operator(collective_operator(n_b, S_PLUS), n_a)
    jm_b = _species_b_operator(collective_operator(n_b, S_MINUS), n_a)
    jz_b = _species_b_operator(collective_operator(n_b, S_Z), n_a)
    hop = jp_a @ jm_b + jm_a @ jp_b
    prefactor = rates.gamma_int * np.eye(hop.shape[0])
    if rates.gamma_m:
        prefactor = prefactor + rates.gamma_m * (jz_a + jz_b)
    if rates.gamma_j:
        casimir_b = 0.5 * (jp_b @ jm_b + jm_b @ jp_b) + jz_b @ jz_b
        prefactor = prefactor + rates.gamma_j * casimir_b
    # the prefactor is diagonal in conserved quantities, so the product order
    # is immaterial and the result stays Hermitian
    return prefactor @ hop


def _jump_operators(n_a: int, n_b: int, rates: Rates) -> list[tuple[float, np.ndarray]]:
    jumps: list[tuple[float, np.ndarray]] = []
    if rates.gamma_z:
        jumps.append((rates.gamma_z, _species_a_operator(collective_operator(n_a, S_Z), n_b)))
    if rates.gamma_minus:
        jumps.append(
            (rates.gamma_minus, _species_a_operator(collective_operator(n_a, S_MINUS), n_b))
        )
    if rates.kappa_z:
        for i in range(n_a):
            jumps.append((rates.kappa_z, _species_a_operator(site_operator(n_a, i, PAULI_Z), n_b)))
    if rates.kappa_minus:
        for i in range(n_a):
            jumps.append(
                (rates.kappa_minus, _species_a_operator(site_operator(n_a, i, S_MINUS), n_b))
            )
    return jumps


def full_space_evolve(
    initial: FullState,
    rates: Rates,
    sample_times,
    rtol: float = 1e-9,
    atol: float = 1e-12,
) -> list[FullState]:
    """Integrate the master equation directly in the site basis."""
    n_a, n_b = initial.n_a, initial.n_b
    if n_a + n_b > MAX_TOTAL_SITES:
        raise ValueError(f"site count {n_a}+{n_b} exceeds the dense-route cap")
    if (rates.kappa_z or rates.kappa_minus) and rates.n_a != n_a:
        raise ValueError(f"rates.n_a={rates.n_a} does not match the register ({n_a} sites)")
    sample_times = np.asarray(sample_times, dtype=float)
    dim = 2 ** (n_a + n_b)
    hamiltonian = _hamiltonian(n_a, n_b, rates).astype(np.complex128)
    jumps = _jump_operators(n_a, n_b, rates)
    sink = np.zeros((dim, dim), dtype=np.complex128)
    for rate, op in jumps:
        sink += 0.5 * rate * (op.conj().T @ op)

    def rhs(_t, vec):
        rho = vec.reshape(dim, dim)
        out = -1j * (hamiltonian @ rho - rho @ hamiltonian)
        out -= sink @ rho + rho @ sink
        for rate, op in jumps:
            out += rate * (op @ rho @ op.conj().T)
        return out.ravel()

    solution = solve_ivp(
        rhs,
        (0.0, float(sample_times[-1])),
        initial.matrix.astype(np.complex128).ravel(),
        method="RK45",
        t_eval=sample_times,
        rtol=rtol,
        atol=atol,
    )
    if not solution.success:
        reached = float(solution.t[-1]) if solution.t.size else 0.0
        raise IntegrationError(
            f"site-basis integration failed at t={reached:.6g}: {solution.message}", reached
        )
    return [
        FullState(solution.y[:, k].reshape(dim, dim), n_a, n_b)
        for k in range(solution.y.shape[1])
    ]


def project_to_symmetric(full: FullState) -> tuple[SymmetricDensity, float]:
    """Extract symmetric coefficients and the norm of everything left over.

    The coefficient of an index is the plain sum of the matrix elements over
    matched multiplicity labels of both species.  The residual is the
    Frobenius norm of the state minus its re-embedded projection; it vanishes
    exactly on states of the symmetric family.
    """
    basis_a = species_basis(full.n_a)
    basis_b = species_basis(full.n_b)
    entries: dict[DoubledIndex, complex] = {}
    for two_j_a, va in basis_a.items():
        for two_j_b, vb in basis_b.items():
            # rows are product states |q_a xi_a q_b xi_b>
            rows = np.einsum("qax,rby->qarbxy", va, vb)
            qa, da, qb, db = rows.shape[:4]
            flat = rows.reshape(qa * da * qb * db, -1)
            block = (flat.conj() @ full.matrix @ flat.T).reshape(
                qa, da, qb, db, qa, da, qb, db
            )
            coeff = np.einsum("qarbsatb->qrst", block)
            for q in range(qa):
                for r in range(qb):
                    for s in range(qa):
                        for t in range(qb):
                            if q + r != s + t:
                                continue
                            value = complex(coeff[q, r, s, t])
                            if abs(value) > DROP_TOL:
                                entries[DoubledIndex(two_j_a, two_j_b, q + r, q, t)] = value
    projected = SymmetricDensity(entries)
    residual = float(
        np.linalg.norm(full.matrix - embed_symmetric(projected, full.n_a, full.n_b).matrix)
    )
    return projected, residual


def embed_symmetric(rho: SymmetricDensity, n_a: int, n_b: int) -> FullState:
    """Lift coefficients to a site-basis matrix, uniform over multiplicity.

    Each index contributes its coefficient divided by d_A * d_B to every
    matched multiplicity pair, making the lift a right inverse of the
    projection and the composite an orthogonal projection.
    """
    basis_a = species_basis(n_a)
    basis_b = species_basis(n_b)
    dim = 2 ** (n_a + n_b)
    matrix = np.zeros((dim, dim), dtype=np.complex128)
    for idx, value in rho.entries.items():
        if idx.two_j_a not in basis_a or idx.two_j_b not in basis_b:
            raise SectorError(f"index {tuple(idx)} has no sector for {n_a}+{n_b} sites")
        va = basis_a[idx.two_j_a]
        vb = basis_b[idx.two_j_b]
        if idx.n_up - idx.x >= vb.shape[0] or idx.n_up - idx.y >= va.shape[0]:
            raise SectorError(f"index {tuple(idx)} exceeds the sector ladder")
        ket = np.einsum("ax,by->abxy", va[idx.x], vb[idx.n_up - idx.x]).reshape(
            va.shape[1], vb.shape[1], dim
        )
        bra = np.einsum("ax,by->abxy", va[idx.n_up - idx.y], vb[idx.y]).reshape(
            va.shape[1], vb.shape[1], dim
        )
        weight = value / (va.shape[1] * vb.shape[1])
        matrix += weight * np.einsum("abx,aby->xy", ket, bra.conj())
    return FullState(matrix, n_a, n_b)


def compare_trajectories(reduced_states, projected_states) -> float:
    """Largest coefficient deviation between two sampled state sequences."""
    if len(reduced_states) != len(projected_states):
        raise ValueError("trajectories have different sample counts")
    worst = 0.0
    for lhs, rhs in zip(reduced_states, projected_states):
        keys = lhs.entries.keys() | rhs.entries.keys()
        for k in keys:
            deviation = abs(lhs.entries.get(k, 0.0) - rhs.entries.get(k, 0.0))
            worst = max(worst, deviation)
    return worst


def oracle_test_state(n: int) -> SymmetricDensity:
    """Small mixed state with coherences, supported on the top sectors."""
    if n < 2:
        raise ValueError(f"need at least two sites per species, got {n}")
    return SymmetricDensity(
        {
            DoubledIndex(n, n, 1, 1, 0): 0.35 + 0.0j,
            DoubledIndex(n, n, 1, 0, 1): 0.25 + 0.0j,
            DoubledIndex(n, n, 1, 1, 1): 0.10 + 0.05j,
            DoubledIndex(n, n, 1, 0, 0): 0.10 - 0.05j,
            DoubledIndex(n, n, 2, 1, 1): 0.40 + 0.0j,
        }
    )
