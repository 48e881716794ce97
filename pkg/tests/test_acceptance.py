"""Acceptance gate: the ten headline guarantees, one verdict line each.

Every test prints an ACCEPTANCE line before asserting, so the verdicts are
visible in the pytest output even when a criterion fails.  Trajectory drift
values are accumulated across criteria and judged together at the end.
"""

import math

import numpy as np
import pytest

from spinswap.coherent import (
    TridiagonalChain,
    detuned_params,
    mi_jx_chain,
    swap_period_tuned,
    tune_params,
)
from spinswap.diagnostics import threshold_estimates
from spinswap.lindblad import Rates, assemble, evolve
from spinswap.oracle import (
    compare_trajectories,
    embed_symmetric,
    full_space_evolve,
    oracle_test_state,
    project_to_symmetric,
)
from spinswap.pst_conditions import (
    Spectrum,
    eigenvalues,
    mirror_symmetric,
    odd_commensurability,
    transfer_fidelity,
)
from spinswap.sector_basis import build_initial_state, build_swap_state

J = 50.0
PERIOD = swap_period_tuned(J)
SEPARATION = 126 / 5184

DRIFTS: list[tuple[str, float, float]] = []
COHERENT_RUNS: dict[str, object] = {}


def announce(capsys, number, passed, detail):
    with capsys.disabled():
        print(f"\nACCEPTANCE {number} {'PASS' if passed else 'FAIL'}: {detail}")


def record_drift(label, trajectory):
    DRIFTS.append((label, trajectory.trace_drift, trajectory.hermiticity_drift))


def tuned_rates(j=J, **extra):
    params = tune_params(j)
    return Rates(
        gamma_int=params.gamma_int, gamma_m=params.gamma_m, gamma_j=params.gamma_j, **extra
    )


def run_mixture(rates, n_periods, samples_per_period, delta_max=4):
    rho0 = build_initial_state(J, delta_max, 8, 1)
    rho_swap = build_swap_state(J, delta_max, 8, 1)
    superop = assemble(rho0, rates)
    times = np.linspace(0.0, n_periods * PERIOD, n_periods * samples_per_period + 1)
    return evolve(
        rho0,
        superop,
        float(times[-1]),
        sample_times=times,
        references=(rho0, rho_swap),
    )


def block_populations(state):
    sums: dict[tuple, float] = {}
    for idx, value in state.entries.items():
        if idx.is_diagonal:
            key = (idx.two_j_a, idx.two_j_b, idx.n_up)
            sums[key] = sums.get(key, 0.0) + value.real
    return sums


@pytest.fixture(scope="module")
def fig1_run():
    trajectory = run_mixture(tuned_rates(), 6, 64)
    record_drift("tuned mixture, six periods", trajectory)
    COHERENT_RUNS["tuned mixture"] = trajectory
    return trajectory


def test_criterion_1_inversion_exactness(capsys):
    worst = 1.0
    for k in range(1, 41):
        j = k / 2
        for gamma in (1.0, 0.7):
            fidelity = transfer_fidelity(mi_jx_chain(j, gamma), math.pi / gamma)
            worst = min(worst, fidelity)
    passed = worst >= 1 - 1e-10
    announce(capsys, 1, passed, f"inversion fidelity >= {worst:.15f} for J <= 20")
    assert passed


def test_criterion_2_checker_soundness(capsys):
    family = [
        mi_jx_chain(1),
        mi_jx_chain(1.5, 0.7),
        mi_jx_chain(5),
        TridiagonalChain(np.zeros(2), np.array([0.37])),
        TridiagonalChain(np.zeros(3), np.array([0.7, 0.7])),
        TridiagonalChain(np.full(4, 2.5), mi_jx_chain(1.5).c),
    ]
    worst = 1.0
    for chain in family:
        assert mirror_symmetric(chain)
        report = odd_commensurability(eigenvalues(chain))
        assert report.is_odd_commensurate and report.period is not None
        worst = min(worst, transfer_fidelity(chain, report.period))
    witness = odd_commensurability(Spectrum(np.array([0.0, 1.0, 3.0])))
    rejected = not witness.is_odd_commensurate and witness.failure == "incommensurate"
    passed = worst >= 1 - 1e-8 and rejected
    announce(
        capsys,
        2,
        passed,
        f"certified chains transfer at >= {worst:.12f}; witness {{0,1,3}} rejected: {rejected}",
    )
    assert passed


def test_criterion_3_oracle_equivalence(capsys):
    worst = 0.0
    for n in (2, 3):
        j = n / 2
        rates = tuned_rates(
            j=j, gamma_z=0.1, gamma_minus=0.1, kappa_z=0.1, kappa_minus=0.1, n_a=n
        )
        horizon = 2 * swap_period_tuned(j)
        times = np.linspace(0.0, horizon, 9)
        rho0 = oracle_test_state(n)
        reduced = evolve(rho0, assemble(rho0, rates), horizon, sample_times=times)
        record_drift(f"oracle lock, {n} sites per species", reduced)
        full_states = full_space_evolve(embed_symmetric(rho0, n, n), rates, times)
        projected = [project_to_symmetric(state)[0] for state in full_states]
        worst = max(worst, compare_trajectories(reduced.states, projected))
    passed = worst <= 1e-6
    announce(capsys, 3, passed, f"route deviation {worst:.3e} over two periods, all channels")
    assert passed


def test_criterion_4_swap_and_return(fig1_run, capsys):
    records = fig1_run.diagnostics
    d0 = records[0].dist_sq_swap
    swap_ratio = records[64].dist_sq_swap / d0
    return_ratio = records[128].dist_sq_initial / d0
    recurrences = []
    for k in (1, 3, 5):
        recurrences.append(records[64 * k].dist_sq_swap / d0)
    for k in (2, 4, 6):
        recurrences.append(records[64 * k].dist_sq_initial / d0)
    passed = (
        abs(d0 - SEPARATION) <= 1e-9
        and swap_ratio <= 0.05
        and return_ratio <= 0.05
        and max(recurrences) <= 0.20
    )
    announce(
        capsys,
        4,
        passed,
        f"distance ratios: swap {swap_ratio:.2%} at T, return {return_ratio:.2%} at 2T, "
        f"dips through 6T <= {max(recurrences):.2%}",
    )
    assert passed


def test_criterion_5_purification(fig1_run, capsys):
    start = fig1_run.diagnostics[0]
    at_period = fig1_run.diagnostics[64]
    endpoints = (
        abs(start.q_mean_b - 3.5) <= 1e-9 and abs(start.q_sq_b - 17.5) <= 1e-9
    )
    passed = (
        endpoints
        and abs(at_period.q_mean_b - 1.0) <= 0.1
        and abs(at_period.q_sq_b - 1.0) <= 0.2
    )
    announce(
        capsys,
        5,
        passed,
        f"species-B moments at T: <q> = {at_period.q_mean_b:.4f}, <q^2> = {at_period.q_sq_b:.4f}",
    )
    assert passed


def test_criterion_6_bare_coupling_fails(capsys):
    trajectory = run_mixture(Rates(gamma_int=1.0), 1, 64)
    record_drift("bare mixture, one period", trajectory)
    COHERENT_RUNS["bare mixture"] = trajectory
    d0 = trajectory.diagnostics[0].dist_sq_swap
    ratio = trajectory.diagnostics[-1].dist_sq_swap / d0
    passed = ratio >= 0.5
    announce(capsys, 6, passed, f"bare-coupling swap distance stays at {ratio:.1%} of start")
    assert passed


def test_criterion_7_tuning_optimum(capsys):
    values = np.linspace(-1.0, 1.0, 21)
    center = 10
    argmins = {}
    for axis in ("eps_m", "eps_j"):
        distances = []
        for value in values:
            eps_m, eps_j = (value, 0.0) if axis == "eps_m" else (0.0, value)
            params = detuned_params(J, 1.0, eps_m, eps_j)
            rates = Rates(
                gamma_int=params.gamma_int, gamma_m=params.gamma_m, gamma_j=params.gamma_j
            )
            trajectory = run_mixture(rates, 1, 1)
            record_drift(f"detuned {axis} = {value:+.1f}", trajectory)
            distances.append(trajectory.diagnostics[-1].dist_sq_swap)
        argmins[axis] = int(np.argmin(distances))
    passed = all(abs(argmins[axis] - center) <= 1 for axis in argmins)
    announce(
        capsys,
        7,
        passed,
        "distance at T is minimized at eps_m grid index "
        f"{argmins['eps_m']} and eps_j index {argmins['eps_j']} (center {center})",
    )
    assert passed


def test_criterion_8_threshold_markers(capsys):
    markers = threshold_estimates(J, 8, 100)
    rho0 = build_initial_state(J, 0, 8, 1)
    rho_swap = build_swap_state(J, 0, 8, 1)

    def distance_at_period(rates):
        superop = assemble(rho0, rates)
        trajectory = evolve(
            rho0,
            superop,
            PERIOD,
            sample_times=np.array([0.0, PERIOD]),
            references=(rho0, rho_swap),
        )
        return trajectory.diagnostics[-1].dist_sq_swap, trajectory

    clean, trajectory = distance_at_period(tuned_rates())
    record_drift("threshold baseline", trajectory)
    target = 2 * clean

    verdicts = []
    all_within = True
    for channel in ("gamma_z", "gamma_minus", "kappa_z", "kappa_minus"):
        marker = markers[channel]
        grid = marker * np.logspace(-2.0, 2.0, 9)
        distances = []
        for rate in grid:
            extra = {channel: float(rate)}
            if channel.startswith("kappa"):
                extra["n_a"] = 100
            value, trajectory = distance_at_period(tuned_rates(**extra))
            record_drift(f"{channel} at {rate:.3g}", trajectory)
            distances.append(value)

        if distances[0] >= target:
            doubling = grid[0]
            label = f"<= {grid[0]:.3g} (below grid)"
            within = False
        else:
            doubling = math.inf
            label = f"> {grid[-1]:.3g} (above grid)"
            within = False
            for k in range(1, len(grid)):
                if distances[k] >= target:
                    fraction = (math.log(target) - math.log(distances[k - 1])) / (
                        math.log(distances[k]) - math.log(distances[k - 1])
                    )
                    doubling = grid[k - 1] * (grid[k] / grid[k - 1]) ** fraction
                    label = f"{doubling:.3g}"
                    within = marker / 10 <= doubling <= marker * 10
                    break
        verdicts.append(f"{channel}: doubling at {label} vs marker {marker:.3g}")
        all_within = all_within and within

    announce(capsys, 8, all_within, "; ".join(verdicts))
    assert all_within


def test_criterion_9_swap_protects(capsys):
    protected = run_mixture(tuned_rates(gamma_minus=0.1), 2, 64)
    record_drift("protected decay run", protected)
    decay_only = run_mixture(Rates(gamma_int=0.0, gamma_minus=0.1), 2, 64)
    record_drift("decay-only run", decay_only)
    with_swap = protected.diagnostics[-1].dist_sq_initial
    without = decay_only.diagnostics[-1].dist_sq_initial
    passed = with_swap < without
    announce(
        capsys,
        9,
        passed,
        f"distance from start after 2T: {with_swap:.3e} swapping vs {without:.3e} decay only",
    )
    assert passed


def test_criterion_10_conservation(fig1_run, capsys):
    assert DRIFTS, "conservation is judged over the preceding acceptance runs"
    worst_trace = max(drift for _, drift, _ in DRIFTS)
    worst_hermiticity = max(drift for _, _, drift in DRIFTS)

    worst_block = 0.0
    for trajectory in COHERENT_RUNS.values():
        reference = block_populations(trajectory.states[0])
        for state in trajectory.states[1:]:
            current = block_populations(state)
            for key, value in reference.items():
                worst_block = max(worst_block, abs(current.get(key, 0.0) - value))

    passed = worst_trace <= 1e-8 and worst_hermiticity <= 1e-8 and worst_block <= 1e-9
    announce(
        capsys,
        10,
        passed,
        f"over {len(DRIFTS)} runs: trace drift {worst_trace:.2e}, hermiticity drift "
        f"{worst_hermiticity:.2e}; sector populations drift {worst_block:.2e} "
        f"on {len(COHERENT_RUNS)} coherent-only runs",
    )
    assert passed
