"""Shared fixtures and oracle helpers for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from crosszone.dynamics import discretize
from crosszone.model import CostModel, Signal, ThermalNetwork, TimeGrid
from crosszone.scenario import SetpointPlan, WeatherSeries, run_baseline, run_experiment


@pytest.fixture
def two_zone_network() -> ThermalNetwork:
    """Two-zone winter-study network: C=[0.27, 0.81] kWh/degC,
    conductances 45/90/135 W/degC."""
    return ThermalNetwork(
        capacitances_kwh_per_c=[0.27, 0.81],
        conductances_kw_per_c=[
            [0.0, 0.045, 0.135],
            [0.045, 0.0, 0.090],
            [0.135, 0.090, 0.0],
        ],
    )


def random_network(rng: np.random.Generator, n: int, max_rate_per_h: float = 0.6) -> ThermalNetwork:
    """Random symmetric network whose loss rates stay below max_rate_per_h.

    Bounding sum_j alpha_ij / C_i keeps explicit-Euler oracles accurate at
    their stated substep counts.
    """
    alpha = np.zeros((n + 1, n + 1))
    for i in range(n + 1):
        for j in range(i + 1, n + 1):
            if rng.random() < 0.85:
                alpha[i, j] = alpha[j, i] = rng.uniform(0.0, 0.05)
    caps = rng.uniform(0.3, 1.2, n)
    rates = alpha[1:, :].sum(axis=1) / caps
    worst = rates.max()
    if worst > max_rate_per_h:
        alpha *= max_rate_per_h / worst
    return ThermalNetwork(caps, alpha)


def euler_simulate(
    net: ThermalNetwork,
    dt_h: float,
    substeps: int,
    t_init: np.ndarray,
    q: np.ndarray,
    w: np.ndarray,
    outdoor: np.ndarray,
) -> np.ndarray:
    """Explicit-Euler reference: (K+1, n) samples at the coarse grid."""
    k, n = q.shape
    alpha = net.conductances_kw_per_c
    caps = net.capacitances_kwh_per_c
    a_zz = alpha[1:, 1:]
    a_z0 = alpha[1:, 0]
    coupling = alpha[1:, :].sum(axis=1)
    h = dt_h / substeps
    temps = np.empty((k + 1, n))
    t = np.array(t_init, dtype=float)
    temps[0] = t
    for step in range(k):
        drive = q[step] + w[step] + a_z0 * outdoor[step]
        for _ in range(substeps):
            dT = (a_zz @ t - coupling * t + drive) / caps
            t = t + h * dT
        temps[step + 1] = t
    return temps


def piecewise_constant_price(rng: np.random.Generator, steps: int, max_breaks: int = 8) -> np.ndarray:
    """Random positive piecewise-constant price with at most max_breaks jumps."""
    n_breaks = int(rng.integers(0, max_breaks + 1))
    interior = np.arange(1, steps)
    if n_breaks > 0 and interior.size:
        breaks = np.sort(rng.choice(interior, size=min(n_breaks, interior.size), replace=False))
    else:
        breaks = np.array([], dtype=int)
    values = rng.uniform(0.02, 0.12, breaks.size + 1)
    price = np.empty(steps)
    start = 0
    for b, v in zip(list(breaks) + [steps], values):
        price[start:b] = v
        start = b
    return price


def perturbed_pair(
    rng: np.random.Generator,
    net: ThermalNetwork,
    plan: SetpointPlan,
    grid: TimeGrid,
    dq_scale: float = 0.3,
    pin_terminal: bool = True,
):
    """Baseline plus an experiment whose controlled powers are perturbed.

    The final-step perturbation is chosen so the controlled zones return
    exactly to their setpoints, matching the equal-start-and-end protocol.
    Returns (base, exp).
    """
    k, n = grid.steps, net.n
    outdoor = rng.uniform(-15.0, 5.0, k)
    weather = WeatherSeries(grid, Signal(outdoor), Signal(np.zeros(k)))
    gains = rng.uniform(0.0, 0.5, (k, n))
    base = run_baseline(net, plan, weather, gains, grid)

    ctrl = plan.controlled
    m = len(ctrl)
    sub = discretize(net, grid, zones=ctrl)
    dq = np.zeros((k, m))
    dq[: k - 1] = rng.uniform(-dq_scale, dq_scale, (k - 1, m))
    if pin_terminal:
        x = np.zeros(m)
        for step in range(k - 1):
            x = sub.phi @ x - sub.gamma_q @ dq[step]
        dq[k - 1] = np.linalg.solve(sub.gamma_q, sub.phi @ x)
    q_ctrl = base.powers_kw[:, np.asarray(ctrl) - 1] + dq
    exp = run_experiment(net, plan, weather, gains, grid, q_ctrl)
    return base, exp


def random_cost(rng: np.random.Generator, n: int, steps: int, uniform: bool = False) -> CostModel:
    if uniform:
        return CostModel.uniform(piecewise_constant_price(rng, steps), n)
    return CostModel(np.vstack([piecewise_constant_price(rng, steps) for _ in range(n)]))
