"""Exit criteria for the N = 8 chain at desk scale, one test per criterion."""

import numpy as np
import pytest

from chainent.chain import ChainConfig, ControlSchedule, mode_frequencies
from chainent.control import OptimizerConfig, adjoint_gradient, fd_gradient, optimize, sudden_switch_baseline
from chainent.entanglement import (
    VALIDITY_STRICT,
    log_negativity,
    max_log_negativity,
    optimal_angles,
    pair_covariance,
    simplified_eigenvalues,
    symplectic_eigenvalues,
    partial_transpose,
)
from chainent.modes import (
    extract_squeeze,
    final_moments,
    forward_moments,
    initial_moments,
    ode_oracle,
    propagate_schedule,
)
from chainent.simulation import simulate
from chainent.thermo import chain_energy, ground_energy, max_entanglement_temperature, thermal_factor

from oracles import site_covariance_rk4, site_pair, tmsv


def random_schedule(rng, n_seg=5, c_max=0.05, t_max=50.0, grid=0.05):
    durations = rng.integers(40, int(t_max / n_seg / grid) + 1, n_seg) * grid
    return ControlSchedule(tuple(zip(durations, rng.uniform(0, c_max, n_seg))), c_max)


def test_c01_oracle_equivalence(criterion):
    cfg = ChainConfig(4)
    worst_modes = worst_site = 0.0
    for seed in range(3):
        sched = random_schedule(np.random.default_rng(seed))
        times, series = propagate_schedule(initial_moments(cfg), cfg, sched, 0.05)
        ends = [int(round(b / 0.05)) for b in sched.boundaries]
        _, ref = ode_oracle(initial_moments(cfg), cfg, sched, 1e-3)
        full = site_covariance_rk4(4, 1.0, sched.segments, dt_step=1e-3)
        for k, idx in enumerate(ends):
            assert times[idx] == pytest.approx(sched.boundaries[k], abs=1e-9)
            worst_modes = max(worst_modes, np.max(np.abs(series[idx].as_array() - ref[k].as_array())))
            for pair in [(1, 3), (1, 2)]:
                g = pair_covariance(series[idx], cfg, *pair).matrix
                worst_site = max(worst_site, np.max(np.abs(g - site_pair(full[k], 4, *pair))))
    criterion(
        "1 oracle equivalence",
        worst_modes <= 1e-8 and worst_site <= 1e-8,
        f"mode RK4 max dev {worst_modes:.2e}, site RK4 max dev {worst_site:.2e} (tol 1e-8)",
    )


def test_c02_purity_conservation(criterion):
    worst = 0.0
    for temperature in (0.0, 0.5):
        cfg = ChainConfig(8, temperature=temperature)
        f = thermal_factor(temperature)
        sched = ControlSchedule.uniform(np.random.default_rng(7).choice([0.0, 0.05], 400), 200.0, 0.05)
        _, series = propagate_schedule(initial_moments(cfg), cfg, sched, 0.25)
        for m in series:
            worst = max(worst, np.max(np.abs(m.uncertainty() / (f**2 / 4) - 1)))
    criterion("2 purity conservation", worst <= 1e-10, f"max relative drift {worst:.2e} over t=200 (tol 1e-10)")


def test_c03_trivial_separability(criterion):
    sched = ControlSchedule(((100.0, 0.0),), 0.05)
    peak = 0.0
    for temperature in (0.0, 0.5, 2.0):
        trace = simulate(ChainConfig(8, temperature=temperature), sched, 0.1)
        peak = max(peak, float(np.max(np.abs(trace.log_negativity))))
    criterion("3 trivial separability", peak == 0.0, f"max |E_N| = {peak!r} with c = 0")


def test_c04_tmsv_closed_form(criterion):
    value = log_negativity(tmsv(0.5))
    expected = 1.0 / np.log(2.0)
    criterion("4 TMSV closed form", abs(value - expected) <= 1e-9, f"E_N = {value:.12f}, 2 rho/ln2 = {expected:.12f}")


def test_c05_simplified_eigenvalues(headline, criterion):
    cfg, _, _, trace = headline
    worst = 0.0
    for k in range(0, len(trace.time), 25):
        r = trace.r[k]
        cov = pair_covariance(forward_moments(np.ones(8), r, optimal_angles(8)), cfg, 1, 5)
        fast = np.array(simplified_eigenvalues(*cov.abcd))
        generic = symplectic_eigenvalues(partial_transpose(cov.matrix))
        worst = max(worst, np.max(np.abs(fast - generic)))
    criterion("5 closed-form vs generic eigenvalues", worst <= 1e-9, f"max deviation {worst:.2e} (tol 1e-9)")


def test_c06a_bound_holds_along_trajectory(headline, criterion):
    _, _, _, trace = headline
    mask = trace.validity_ratio < VALIDITY_STRICT
    excess = float(np.max(trace.log_negativity[mask] - trace.bound[mask]))
    criterion(
        "6a E_N <= E_N^max(r(t)) + 1e-6",
        mask.sum() > 100 and excess <= 1e-6,
        f"{mask.sum()} valid samples, max E_N - bound = {excess:.2e}",
    )


def test_c06b_bound_attained_at_sync_peak(headline, criterion):
    _, opt, res, trace = headline
    frozen = trace.time > res.protocol.total_duration - opt.freeze_time + 1e-9
    k = np.flatnonzero(frozen)[0]
    ratio = trace.log_negativity[k] / trace.bound[k]
    criterion(
        "6b equality at synchronization peak (1%)",
        abs(1.0 - ratio) <= 0.01 and trace.validity_ratio[k] < VALIDITY_STRICT,
        f"E_N = {trace.log_negativity[k]:.4f}, bound = {trace.bound[k]:.4f}, ratio = {ratio:.4f}, "
        f"angle error {res.sync_error:.3f} rad",
    )


def test_c07_headline_ratio(headline, criterion):
    cfg, _, res, trace = headline
    _, sudden = sudden_switch_baseline(cfg, 0.05, 200.0)
    ratio = trace.log_negativity.max() / sudden.max()
    criterion(
        "7 optimized / sudden-switch peak >= 5",
        ratio >= 5.0,
        f"optimized {trace.log_negativity.max():.4f}, sudden {sudden.max():.4f}, ratio {ratio:.1f}",
    )


def test_c08a_thermodynamic_numbers(headline, criterion):
    cfg, _, res, trace = headline
    final = trace.moments[-1]
    r = extract_squeeze(final, cfg, 0.0).r
    mean_r = float(np.mean(r))
    w_dis = float(trace.dissipated_work[-1])
    e0 = chain_energy(initial_moments(cfg), cfg, 0.0)
    e_final = float(trace.energy[-1])
    ok = (
        abs(mean_r - 0.4) <= 0.3 * 0.4
        and abs(w_dis - 1.2) <= 0.3 * 1.2
        and e0 == 4.0
        and ground_energy(cfg) == 4.0
        and abs(e_final - 5.2) <= 0.3 * 1.2
    )
    criterion(
        "8a R, W_dis, energy after t=20 squeezing",
        ok,
        f"R = {mean_r:.3f} (0.4 +-30%), W_dis = {w_dis:.3f} (1.2 +-30%), E: {e0} -> {e_final:.3f} (5.2)",
    )


def _mean_squeezing(horizon):
    cfg = ChainConfig(8)
    opt = OptimizerConfig(n_segments=int(round(2 * horizon)), horizon=horizon, gradient_mode="adjoint")
    res = optimize(None, cfg, opt)
    r = extract_squeeze(final_moments(initial_moments(cfg), cfg, res.protocol), cfg, 0.0).r
    return float(np.mean(r)), r


def test_c08b_long_squeeze_reaches_unit_squeezing(criterion):
    lo, hi = 40.0, 120.0
    for _ in range(7):
        mid = 0.5 * (lo + hi)
        mean_r, r = _mean_squeezing(mid)
        if abs(mean_r - 1.0) < 0.02:
            break
        lo, hi = (mid, hi) if mean_r < 1.0 else (lo, mid)
    bound = max_log_negativity(r, ChainConfig(8))
    criterion(
        "8b R = 1 gives E_N^max = 1.6 +-15%",
        abs(mean_r - 1.0) < 0.05 and abs(bound - 1.6) <= 0.15 * 1.6,
        f"squeeze horizon {mid:.1f}: R = {mean_r:.3f}, E_N^max = {bound:.3f}",
    )


def test_c09_work_energy_consistency(headline, criterion):
    cfg = ChainConfig(8)
    protocols = [headline[2].protocol]
    rng = np.random.default_rng(9)
    for _ in range(5):
        c = np.r_[rng.uniform(0, 0.05, 30), 0.0]
        protocols.append(ControlSchedule.uniform(c, 40.0, 0.05))
    worst = 0.0
    for proto in protocols:
        m = final_moments(initial_moments(cfg), cfg, proto)
        r = extract_squeeze(m, cfg, 0.0).r
        w = np.sum(mode_frequencies(cfg, 0.0) * np.sinh(r) ** 2)
        worst = max(worst, abs(chain_energy(m, cfg, 0.0) - 4.0 - w))
    criterion("9 work-energy consistency", worst <= 1e-6 * 4.0, f"max |E - E0 - W_dis| = {worst:.2e} (tol 4e-6)")


def test_c10_temperature(headline, criterion):
    cfg, opt, res, cold = headline
    temps = [0.0, 0.25, 0.5, 1.0]
    peaks = [simulate(cfg.with_temperature(t), res.protocol, opt.sample_dt).log_negativity.max() for t in temps]
    hot = simulate(cfg.with_temperature(0.5), res.protocol, opt.sample_dt)
    below = bool(np.all(hot.log_negativity <= cold.log_negativity) and np.all(hot.bound <= cold.bound))
    mean_r = float(np.mean(cold.r[-1]))
    t_m = max_entanglement_temperature(mean_r)
    beyond = max(
        simulate(cfg.with_temperature(k * t_m), res.protocol, opt.sample_dt).log_negativity.max() for k in (2.0, 4.0)
    )
    ok = bool(np.all(np.diff(peaks) < 0)) and below and beyond < 1e-3
    criterion(
        "10 temperature monotonicity",
        ok,
        "peaks " + ", ".join(f"T={t}: {p:.4f}" for t, p in zip(temps, peaks))
        + f"; T=0.5 below T=0: {below}; T_m = {t_m:.3f}, max E_N beyond 2 T_m = {beyond:.1e}",
    )


def test_c11_gradient_check(criterion):
    cfg = ChainConfig(4)
    worst = 0.0
    for seed in range(5):
        rng = np.random.default_rng(100 + seed)
        c = rng.uniform(0.0, 0.05, 10)
        d = np.full(10, rng.uniform(0.5, 3.0))
        ga = adjoint_gradient(c, d, cfg, 0.05)
        gf = fd_gradient(c, d, cfg, 0.05, 0.05, 1e-6)
        worst = max(worst, np.max(np.abs(ga - gf) / np.abs(gf)))
    criterion("11 adjoint vs finite differences", worst <= 1e-4, f"max relative deviation {worst:.2e} (tol 1e-4)")


def test_c12_descent_contract(headline, criterion):
    _, opt, res, _ = headline
    hist = np.array(res.cost_history)
    c = res.squeeze_schedule.couplings
    near = np.minimum(c, opt.c_max - c) <= 0.05 * opt.c_max
    ok = bool(np.all(np.diff(hist) < 0)) and near.mean() >= 0.8 and res.converged
    criterion(
        "12 descent contract",
        ok,
        f"J {hist[0]:.4f} -> {hist[-1]:.4f} in {len(hist) - 1} steps ({res.status}), "
        f"{100 * near.mean():.0f}% of segments at a bound",
    )


def test_c13_freeze_invariance(headline, criterion):
    _, opt, res, trace = headline
    frozen = trace.time > res.protocol.total_duration - opt.freeze_time + 1e-9
    spread = float(np.ptp(trace.log_negativity[frozen]))
    criterion("13 freeze invariance", spread <= 1e-6, f"E_N spread after freeze {spread:.2e} over {frozen.sum()} samples")
