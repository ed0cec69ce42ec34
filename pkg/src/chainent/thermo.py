"""Dissipated work, energy bookkeeping and temperature effects."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .chain import ChainConfig, mode_frequencies


def thermal_factor(temperature: float, omega0: float = 1.0) -> float:
    """coth(omega0 / 2T), with the T -> 0 limit taken explicitly (f(0) = 1)."""
    if temperature < 0:
        raise ValueError(f"temperature must be >= 0, got {temperature!r}")
    if temperature == 0:
        return 1.0
    x = omega0 / (2.0 * temperature)
    if x > 20.0:
        # 1 + 2 e^{-2x} + ..., avoids tanh rounding to 1
        return 1.0 + 2.0 * math.exp(-2.0 * x)
    return 1.0 / math.tanh(x)


def dissipated_work_mode(omega, r):
    """Irreversible work omega_s sinh^2(r_s) stored in a squeezed mode."""
    return np.asarray(omega) * np.sinh(np.asarray(r)) ** 2


@dataclass(frozen=True)
class WorkReport:
    """Work bookkeeping for one instant.

    ``energy`` is the ground energy plus the dissipated work, which equals the
    actual chain energy for T = 0 protocols that end uncoupled.
    """

    work_per_mode: np.ndarray
    dissipated_work: float
    ground_energy: float
    mean_squeezing: float

    @property
    def energy(self) -> float:
        return self.ground_energy + self.dissipated_work

    @property
    def relative_energy_increase(self) -> float:
        return self.dissipated_work / self.ground_energy


def total_dissipated_work(decomp, config: ChainConfig) -> WorkReport:
    """Aggregate the per-mode work of a squeeze decomposition over the whole chain."""
    w = dissipated_work_mode(decomp.omega, decomp.r)
    return WorkReport(
        work_per_mode=w,
        dissipated_work=float(np.sum(w)),
        ground_energy=ground_energy(config),
        mean_squeezing=float(np.mean(decomp.r)),
    )


def ground_energy(config: ChainConfig) -> float:
    return config.n_oscillators * config.omega0 / 2.0


def chain_energy(moments, config: ChainConfig, c: float) -> float:
    """Mean energy 1/2 sum_s (<PP^+> + omega_s^2 <QQ^+>) at coupling c."""
    omega = mode_frequencies(config, c)
    return float(0.5 * np.sum(moments.pp + omega**2 * moments.qq))


def max_entanglement_temperature(mean_squeezing: float, omega0: float = 1.0) -> float:
    """Estimate T_m = omega0 / ln(coth 2R) above which opposite-pair entanglement dies.

    Only an estimate: every mode is replaced by the mean squeezing R.
    """
    if not mean_squeezing > 0:
        raise ValueError(f"mean squeezing must be > 0, got {mean_squeezing!r}")
    return omega0 / math.log(1.0 / math.tanh(2.0 * mean_squeezing))
