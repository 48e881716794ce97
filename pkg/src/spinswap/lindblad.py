"""Sparse master-equation superoperator in the doubled sector basis.

The generator splits into five channels: the coherent interaction (two
independent copies of the chain dynamics, one for the ket and one for the bra
side), collective dephasing, collective decay, local dephasing, and local
decay.  All decoherence acts on species A.  The collective channels keep each
(J_A, N_up) block closed; the local channels connect neighboring blocks, with
J_A restricted to [J_A,init - N_up,init, N_A / 2] and N_up to
[0, (N_A / 2 - J_A,init) + N_up,init].

Branch weights are the full two-sided products of ket and bra matrix elements
in the xi-uniform coefficient convention; they are validated against the
brute-force full-Hilbert-space oracle at small spin counts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Iterable

import numpy as np
import scipy.sparse
from scipy.integrate import solve_ivp

from .coherent import effective_coupling
from .diagnostics import DiagnosticsRecord, record_sample
from .sector_basis import (
    DROP_TOL,
    DoubledIndex,
    SectorError,
    SymmetricDensity,
    hermiticity_defect,
    trace,
    validate_index,
)


@dataclass(frozen=True)
class Rates:
    """Coherent couplings plus the four decoherence rates acting on species A.

    n_a is the site count of species A; it only enters the local channels.
    """

    gamma_int: float = 1.0
    gamma_m: float = 0.0
    gamma_j: float = 0.0
    gamma_z: float = 0.0
    gamma_minus: float = 0.0
    kappa_z: float = 0.0
    kappa_minus: float = 0.0
    n_a: int = 0

    def __post_init__(self):
        for name in ("gamma_z", "gamma_minus", "kappa_z", "kappa_minus"):
            if getattr(self, name) < 0:
                raise ValueError(f"decoherence rate {name} must be nonnegative")
        if (self.kappa_z or self.kappa_minus) and self.n_a < 1:
            raise ValueError("local channels require the species-A site count n_a")

    @property
    def has_coherent(self) -> bool:
        return bool(self.gamma_int or self.gamma_m or self.gamma_j)


def _hop_ket(x: int, two_j_a: int, two_j_b: int, n_up: int) -> float:
    """Chain coupling C_x acting on the ket fluctuation index."""
    product = (x + 1) * (two_j_a - x) * (n_up - x) * (two_j_b - n_up + x + 1)
    return math.sqrt(product) if product > 0 else 0.0


def _hop_bra(y: int, two_j_a: int, two_j_b: int, n_up: int) -> float:
    """Chain coupling on the bra fluctuation index (species roles swapped)."""
    product = (y + 1) * (two_j_b - y) * (n_up - y) * (two_j_a - n_up + y + 1)
    return math.sqrt(product) if product > 0 else 0.0


def _coherent_terms(idx: DoubledIndex, params) -> list[tuple[DoubledIndex, complex]]:
    two_j_a, two_j_b, n_up, x, y = idx
    g = effective_coupling(two_j_a / 2, two_j_b / 2, n_up, params)
    if g == 0.0:
        return []
    out = []
    for x_to in (x + 1, x - 1):
        if 0 <= x_to <= n_up:
            c = _hop_ket(min(x, x_to), two_j_a, two_j_b, n_up)
            if c:
                out.append((DoubledIndex(two_j_a, two_j_b, n_up, x_to, y), -1j * g * c))
    for y_to in (y + 1, y - 1):
        if 0 <= y_to <= n_up:
            c = _hop_bra(min(y, y_to), two_j_a, two_j_b, n_up)
            if c:
                out.append((DoubledIndex(two_j_a, two_j_b, n_up, x, y_to), 1j * g * c))
    return out


def _collective_dephasing_terms(idx: DoubledIndex) -> list[tuple[DoubledIndex, complex]]:
    _, _, n_up, x, y = idx
    factor = -0.5 * (x - (n_up - y)) ** 2
    return [(idx, factor)] if factor else []


def _collective_decay_terms(idx: DoubledIndex) -> list[tuple[DoubledIndex, complex]]:
    two_j_a, two_j_b, n_up, x, y = idx
    ket = x * (two_j_a - x + 1)
    bra = (n_up - y) * (two_j_a - (n_up - y) + 1)
    out = []
    if ket > 0 and bra > 0:
        out.append((DoubledIndex(two_j_a, two_j_b, n_up - 1, x - 1, y), math.sqrt(ket * bra)))
    diag = -0.5 * (ket + bra)
    if diag:
        out.append((idx, diag))
    return out


def _local_dephasing_terms(idx: DoubledIndex, n_a: int) -> list[tuple[DoubledIndex, complex]]:
    two_j_a, two_j_b, n_up, x, y = idx
    j_a = two_j_a / 2
    bra = n_up - y
    out = []
    if two_j_a >= 2:
        product = x * (two_j_a - x) * bra * (two_j_a - bra)
        if product > 0:
            weight = 2 * (n_a / 2 + j_a + 1) * math.sqrt(product) / (j_a * (two_j_a + 1))
            out.append((DoubledIndex(two_j_a - 2, two_j_b, n_up - 1, x - 1, y), weight))
    if n_a > two_j_a:
        product = (x + 1) * (two_j_a - x + 1) * (bra + 1) * (two_j_a - bra + 1)
        if product > 0:
            weight = 2 * (n_a / 2 - j_a) * math.sqrt(product) / ((j_a + 1) * (two_j_a + 1))
            out.append((DoubledIndex(two_j_a + 2, two_j_b, n_up + 1, x + 1, y), weight))
    if two_j_a == 0:
        # the printed diagonal is 0/0 at J = 0; a rank-one tensor has no
        # J=0 -> J=0 matrix elements, leaving only the -N_A constant
        diag = -float(n_a)
    else:
        diag = 2 * (n_a / 2 + 1) * (x - j_a) * (bra - j_a) / (j_a * (j_a + 1)) - n_a
    if diag:
        out.append((idx, diag))
    return out


def _local_decay_terms(idx: DoubledIndex, n_a: int) -> list[tuple[DoubledIndex, complex]]:
    two_j_a, two_j_b, n_up, x, y = idx
    j_a = two_j_a / 2
    bra = n_up - y
    out = []
    if two_j_a >= 1:
        product = x * (two_j_a - x + 1) * bra * (two_j_a - bra + 1)
        if product > 0:
            weight = (n_a / 2 + 1) * math.sqrt(product) / (two_j_a * (j_a + 1))
            out.append((DoubledIndex(two_j_a, two_j_b, n_up - 1, x - 1, y), weight))
    if two_j_a >= 2:
        product = x * (x - 1) * bra * (bra - 1)
        if product > 0:
            weight = (n_a / 2 + j_a + 1) * math.sqrt(product) / (two_j_a * (two_j_a + 1))
            out.append((DoubledIndex(two_j_a - 2, two_j_b, n_up - 2, x - 2, y), weight))
    if n_a > two_j_a:
        product = (
            (two_j_a - x + 1)
            * (two_j_a - x + 2)
            * (two_j_a - bra + 1)
            * (two_j_a - bra + 2)
        )
        if product > 0:
            # raising the sector while losing one excitation leaves N_up, x, y fixed
            weight = (n_a / 2 - j_a) * math.sqrt(product) / (2 * (j_a + 1) * (two_j_a + 1))
            out.append((DoubledIndex(two_j_a + 2, two_j_b, n_up, x, y), weight))
    diag = -(n_a - two_j_a + x + bra) / 2
    if diag:
        out.append((idx, diag))
    return out


def _active_generators(rates: Rates) -> list[Callable[[DoubledIndex], list]]:
    """Per-index term generators for every channel with a nonzero rate."""
    gens: list[Callable[[DoubledIndex], list]] = []
    if rates.has_coherent:
        gens.append(lambda idx: _coherent_terms(idx, rates))
    if rates.gamma_z:
        gens.append(
            lambda idx: [(t, rates.gamma_z * w) for t, w in _collective_dephasing_terms(idx)]
        )
    if rates.gamma_minus:
        gens.append(
            lambda idx: [(t, rates.gamma_minus * w) for t, w in _collective_decay_terms(idx)]
        )
    if rates.kappa_z:
        gens.append(
            lambda idx: [
                (t, rates.kappa_z * w) for t, w in _local_dephasing_terms(idx, rates.n_a)
            ]
        )
    if rates.kappa_minus:
        gens.append(
            lambda idx: [
                (t, rates.kappa_minus * w) for t, w in _local_decay_terms(idx, rates.n_a)
            ]
        )
    return gens


def _seed_indices(seed) -> list[DoubledIndex]:
    if isinstance(seed, SymmetricDensity):
        raw: Iterable[DoubledIndex] = seed.entries.keys()
    else:
        raw = seed
    out = []
    for idx in raw:
        idx = validate_index(DoubledIndex(*idx))
        out.append(idx)
        out.append(idx.hermitian_partner())
    return out


def reachable_indices(seed, rates: Rates) -> tuple[DoubledIndex, ...]:
    """Closure of the seed support under every active channel's branches."""
    if (rates.kappa_z or rates.kappa_minus) and rates.n_a:
        for idx in _seed_indices(seed):
            if idx.two_j_a > rates.n_a or (rates.n_a - idx.two_j_a) % 2:
                raise SectorError(
                    f"J_A sector {idx.two_j_a}/2 incompatible with n_a={rates.n_a}"
                )
    gens = _active_generators(rates)
    seen: set[DoubledIndex] = set()
    frontier = list(_seed_indices(seed))
    while frontier:
        idx = frontier.pop()
        if idx in seen:
            continue
        seen.add(idx)
        for gen in gens:
            for target, weight in gen(idx):
                if weight and target not in seen:
                    frontier.append(target)
    return tuple(sorted(seen))


class Superoperator:
    """Immutable sparse generator: terms map (source, target) to a weight.

    The action on a coefficient map is d rho_target / dt += weight * rho_source
    summed over terms.  A compressed matrix over the enumerated index set is
    compiled lazily for integration.
    """

    def __init__(self, indices, terms):
        self.indices: tuple[DoubledIndex, ...] = tuple(indices)
        self.terms: dict[tuple[DoubledIndex, DoubledIndex], complex] = dict(terms)

    @cached_property
    def position(self) -> dict[DoubledIndex, int]:
        return {idx: i for i, idx in enumerate(self.indices)}

    @cached_property
    def matrix(self) -> scipy.sparse.csr_matrix:
        pos = self.position
        n = len(self.indices)
        rows = np.empty(len(self.terms), dtype=np.int64)
        cols = np.empty(len(self.terms), dtype=np.int64)
        data = np.empty(len(self.terms), dtype=np.complex128)
        for k, ((src, dst), weight) in enumerate(self.terms.items()):
            rows[k] = pos[dst]
            cols[k] = pos[src]
            data[k] = weight
        coo = scipy.sparse.coo_matrix((data, (rows, cols)), shape=(n, n))
        return coo.tocsr()

    def apply(self, rho: SymmetricDensity) -> SymmetricDensity:
        """Action of the generator on a sparse state, without compiling."""
        out: dict[DoubledIndex, complex] = {}
        for (src, dst), weight in self.terms.items():
            value = rho.entries.get(src)
            if value:
                out[dst] = out.get(dst, 0.0) + weight * value
        return SymmetricDensity(out)

    def vectorize(self, rho: SymmetricDensity) -> np.ndarray:
        pos = self.position
        vec = np.zeros(len(self.indices), dtype=np.complex128)
        for idx, value in rho.entries.items():
            if idx not in pos:
                raise SectorError(f"state index {tuple(idx)} not covered by superoperator")
            vec[pos[idx]] = value
        return vec

    def devectorize(self, vec: np.ndarray, tol: float = DROP_TOL) -> SymmetricDensity:
        entries = {
            idx: complex(vec[i]) for i, idx in enumerate(self.indices) if abs(vec[i]) > tol
        }
        return SymmetricDensity(entries)


def _merge(terms, source, emitted):
    for target, weight in emitted:
        if weight:
            key = (source, target)
            terms[key] = terms.get(key, 0.0) + weight


def _superop_over(indices, gen) -> Superoperator:
    universe = set(DoubledIndex(*idx) for idx in indices)
    terms: dict[tuple[DoubledIndex, DoubledIndex], complex] = {}
    for idx in sorted(universe):
        emitted = gen(idx)
        _merge(terms, idx, emitted)
        universe.update(t for t, w in emitted if w)
    return Superoperator(tuple(sorted(universe)), terms)


def coherent_superop(indices, params) -> Superoperator:
    """Hamiltonian part: ket hops carry -i weights, bra hops +i weights."""
    return _superop_over(indices, lambda idx: _coherent_terms(idx, params))


def collective_dephasing_superop(indices) -> Superoperator:
    """Diagonal channel with factor -(x - (N_up - y))^2 / 2 at unit rate."""
    return _superop_over(indices, _collective_dephasing_terms)


def collective_decay_superop(indices) -> Superoperator:
    """Two-branch collective lowering channel at unit rate."""
    return _superop_over(indices, _collective_decay_terms)


def local_dephasing_superop(indices, n_a: int) -> Superoperator:
    """Three-branch single-site dephasing channel at unit rate."""
    return _superop_over(indices, lambda idx: _local_dephasing_terms(idx, n_a))


def local_decay_superop(indices, n_a: int) -> Superoperator:
    """Four-branch single-site decay channel at unit rate."""
    return _superop_over(indices, lambda idx: _local_decay_terms(idx, n_a))


def assemble(seed, rates: Rates) -> Superoperator:
    """Weighted sum of all active channels over the reachable index set."""
    indices = reachable_indices(seed, rates)
    gens = _active_generators(rates)
    terms: dict[tuple[DoubledIndex, DoubledIndex], complex] = {}
    for idx in indices:
        for gen in gens:
            _merge(terms, idx, gen(idx))
    return Superoperator(indices, terms)


class IntegrationError(RuntimeError):
    """Integration failed; last_time is the last successfully reached time."""

    def __init__(self, message: str, last_time: float):
        super().__init__(message)
        self.last_time = last_time


@dataclass
class Trajectory:
    """Sampled solution of the master equation."""

    times: np.ndarray
    states: list[SymmetricDensity]
    diagnostics: list[DiagnosticsRecord] | None
    trace_drift: float
    hermiticity_drift: float

    def state_at(self, t: float) -> SymmetricDensity:
        k = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[k] - t) > 1e-9 * max(1.0, abs(t)):
            raise KeyError(f"time {t} was not sampled")
        return self.states[k]


def evolve(
    state: SymmetricDensity,
    superop: Superoperator,
    t_final: float,
    sample_times=None,
    rtol: float = 1e-9,
    atol: float = 1e-12,
    references: tuple[SymmetricDensity, SymmetricDensity] | None = None,
) -> Trajectory:
    """Integrate d rho / dt = L rho and sample at the requested times.

    Uses an adaptive explicit Runge-Kutta pair; trace and hermiticity are
    linear invariants of every step, so their drift stays at roundoff level.
    When references (rho_initial, rho_swap) are given, a full diagnostics
    record is produced per sample.
    """
    if t_final < 0:
        raise ValueError(f"t_final must be nonnegative, got {t_final}")
    if sample_times is None:
        sample_times = np.array([0.0, t_final]) if t_final > 0 else np.array([0.0])
    sample_times = np.asarray(sample_times, dtype=float)
    if sample_times.size == 0 or np.any(np.diff(sample_times) <= 0):
        raise ValueError("sample_times must be nonempty and strictly increasing")
    if sample_times[0] < 0 or sample_times[-1] > t_final + 1e-12:
        raise ValueError("sample_times must lie within [0, t_final]")

    y0 = superop.vectorize(state)
    if t_final == 0:
        columns = [y0]
    else:
        matrix = superop.matrix
        solution = solve_ivp(
            lambda _t, vec: matrix.dot(vec),
            (0.0, float(t_final)),
            y0,
            method="RK45",
            t_eval=sample_times,
            rtol=rtol,
            atol=atol,
        )
        if not solution.success:
            reached = float(solution.t[-1]) if solution.t.size else 0.0
            raise IntegrationError(
                f"integration failed at t={reached:.6g}: {solution.message}", reached
            )
        columns = [solution.y[:, k] for k in range(solution.y.shape[1])]

    states = [superop.devectorize(col) for col in columns]
    traces = [trace(s) for s in states]
    trace_drift = max(abs(v - traces[0]) for v in traces)
    hermiticity_drift = max(hermiticity_defect(s) for s in states)
    records = None
    if references is not None:
        rho_initial, rho_swap = references
        records = [
            record_sample(float(t), s, rho_initial, rho_swap)
            for t, s in zip(sample_times, states)
        ]
    return Trajectory(sample_times, states, records, trace_drift, hermiticity_drift)
