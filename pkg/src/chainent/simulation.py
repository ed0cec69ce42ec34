"""Time traces of entanglement and thermodynamic observables for a protocol."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chain import ChainConfig, ControlSchedule, mode_frequencies
from .entanglement import (
    log_negativity,
    log_negativity_simplified,
    max_log_negativity,
    opposite_pair,
    pair_covariance,
    validity_check,
)
from .modes import extract_squeeze, initial_moments, propagate_schedule
from .thermo import chain_energy, dissipated_work_mode


@dataclass
class Trace:
    """Sampled observables; every array is indexed by sample."""

    time: np.ndarray
    coupling: np.ndarray
    log_negativity: np.ndarray
    bound: np.ndarray
    energy: np.ndarray
    dissipated_work: np.ndarray
    validity_ratio: np.ndarray
    r: np.ndarray  # (samples, N)
    theta: np.ndarray  # (samples, N)
    moments: list

    def columns(self) -> list[str]:
        n = self.r.shape[1]
        return (
            ["t", "E_N", "E_N_max_bound", "energy", "W_dis", "validity_ratio"]
            + [f"r_{s}" for s in range(1, n + 1)]
            + [f"theta_{s}" for s in range(1, n + 1)]
            + ["c"]
        )

    def rows(self) -> np.ndarray:
        return np.column_stack(
            [
                self.time,
                self.log_negativity,
                self.bound,
                self.energy,
                self.dissipated_work,
                self.validity_ratio,
                self.r,
                self.theta,
                self.coupling,
            ]
        )

    @property
    def peak_index(self) -> int:
        return int(np.argmax(self.log_negativity))


def simulate(
    config: ChainConfig,
    schedule: ControlSchedule,
    sample_dt: float = 0.05,
    pair: tuple[int, int] | None = None,
    t_end: float | None = None,
    temperature_power: int = 2,
) -> Trace:
    """Propagate the initial thermal state through ``schedule`` and sample observables.

    Squeezing parameters, bound and work are taken relative to the coupling in
    force at each sample. The closed-form eigenvalues are used for opposite
    pairs when the covariance has the required symmetric form, otherwise the
    generic symplectic eigen-solve.
    """
    if pair is None:
        pair = opposite_pair(config)
    n, m = pair
    opposite = abs(n - m) == config.n_oscillators // 2
    times, series = propagate_schedule(initial_moments(config), config, schedule, sample_dt, t_end)
    k = len(times)
    coupling = np.array([schedule.coupling_at(t) for t in times])
    en = np.empty(k)
    bound = np.empty(k)
    energy = np.empty(k)
    work = np.empty(k)
    ratio = np.empty(k)
    r = np.empty((k, config.n_oscillators))
    theta = np.empty_like(r)
    for i, (mom, c) in enumerate(zip(series, coupling)):
        cov = pair_covariance(mom, config, n, m)
        en[i] = opposite_pair_negativity(cov) if opposite else log_negativity(cov)
        dec = extract_squeeze(mom, config, c)
        r[i], theta[i] = dec.r, dec.theta
        bound[i] = max_log_negativity(dec.r, config, temperature_power)
        energy[i] = chain_energy(mom, config, c)
        work[i] = np.sum(dissipated_work_mode(mode_frequencies(config, c), dec.r))
        ratio[i] = validity_check(c, dec.r, config)[0]
    return Trace(times, coupling, en, bound, energy, work, ratio, r, theta, series)


def is_symmetric_form(cov, tol: float = 1e-12) -> bool:
    g = cov.matrix
    return abs(g[0, 0] - g[1, 1]) <= tol and abs(g[0, 2] - g[1, 3]) <= tol


def opposite_pair_negativity(cov) -> float:
    """Closed form when applicable, generic eigen-solve otherwise."""
    if is_symmetric_form(cov):
        return log_negativity_simplified(cov)
    return log_negativity(cov)
