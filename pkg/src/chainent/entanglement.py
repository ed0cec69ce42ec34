"""Pair covariance matrices and logarithmic negativity for the chain.

Covariances use the convention Gamma_xy = 2 Re<xy>, so the vacuum of the
uncoupled chain with omega0 = 1 has Gamma = identity and physical states have
symplectic eigenvalues >= 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .chain import ChainConfig
from .thermo import thermal_factor

OMEGA2 = np.array([[0.0, 1.0], [-1.0, 0.0]])
OMEGA4 = np.kron(np.eye(2), OMEGA2)

# "c sum e^{2r} / 4 << N" thresholds on the normalized ratio
VALIDITY_WARN = 0.1
VALIDITY_STRICT = 0.01
EIGEN_FLOOR = 1e-12


class UnphysicalStateError(ValueError):
    pass


@dataclass(frozen=True)
class PairCovariance:
    """4x4 covariance of sites ``n`` and ``m`` in the order (q_n, p_n, q_m, p_m)."""

    matrix: np.ndarray
    n: int
    m: int

    @property
    def abcd(self) -> tuple[float, float, float, float]:
        """Entries (a, b, c, d) of a symmetric-form pair covariance."""
        g = self.matrix
        return g[0, 0], g[0, 2], g[0, 1], g[0, 3]


def _site_phases(config: ChainConfig, n: int, m: int) -> np.ndarray:
    n_osc = config.n_oscillators
    if not (1 <= n <= n_osc and 1 <= m <= n_osc):
        raise ValueError(f"sites must lie in 1..{n_osc}, got ({n}, {m})")
    if n == m:
        raise ValueError("the two sites must differ")
    s = config.modes
    return np.exp(2j * np.pi * s * (n - m) / n_osc)


def pair_covariance(moments, config: ChainConfig, n: int, m: int) -> PairCovariance:
    """Reduced covariance of two sites, reconstructed from the mode moments.

    Site correlations are Fourier sums of the mode moments,
    <x_n y_m> = (1/N) sum_s exp(2 pi i s (n - m) / N) <X_s Y_s^+>; imaginary
    parts cancel between degenerate modes s and N - s.
    """
    n_osc = config.n_oscillators
    phase = _site_phases(config, n, m)
    cross = np.array([phase @ moments.qq, phase @ moments.qp, phase @ moments.pp]) / n_osc
    if np.max(np.abs(cross.imag)) > 1e-10 * max(1.0, np.max(np.abs(cross.real))):
        raise UnphysicalStateError("mode moments are not symmetric under s -> N - s")
    local = np.array([moments.qq.sum(), moments.qp.sum(), moments.pp.sum()]) / n_osc
    aq, ac, ap = 2.0 * local
    bq, bd, bp = 2.0 * cross.real
    g = np.array(
        [
            [aq, ac, bq, bd],
            [ac, ap, bd, bp],
            [bq, bd, aq, ac],
            [bd, bp, ac, ap],
        ]
    )
    return PairCovariance(g, n, m)


def opposite_pair(config: ChainConfig, n: int = 1) -> tuple[int, int]:
    """Site ``n`` and its partner across the ring."""
    n_osc = config.n_oscillators
    return n, (n - 1 + n_osc // 2) % n_osc + 1


def partial_transpose(g: np.ndarray, which: int = 1) -> np.ndarray:
    """Flip the sign of the momentum of subsystem ``which`` (0 or 1)."""
    flip = np.ones(4)
    flip[2 * which + 1] = -1.0
    return g * np.outer(flip, flip)


def symplectic_eigenvalues(g: np.ndarray) -> np.ndarray:
    """Moduli of the eigenvalues of i Omega g, each pair listed once, ascending."""
    ev = np.abs(np.linalg.eigvals(OMEGA4 @ g))
    ev.sort()
    # eigenvalues come in +-i nu pairs
    return 0.5 * (ev[0::2] + ev[1::2])


def log_negativity(cov: PairCovariance | np.ndarray, which: int = 1, tol: float = 1e-8) -> float:
    """Logarithmic negativity -1/2 sum_i log2 min(1, |l_i|) of a two-mode Gaussian state."""
    g = cov.matrix if isinstance(cov, PairCovariance) else np.asarray(cov, dtype=float)
    nu = symplectic_eigenvalues(g)
    if nu[0] < 1.0 - tol:
        raise UnphysicalStateError(f"smallest symplectic eigenvalue {nu[0]:.6g} < 1")
    nu_pt = symplectic_eigenvalues(partial_transpose(g, which))
    # eigen-solver round-off puts product states at 1 - 1e-16
    nu_pt = np.where(nu_pt > 1.0 - EIGEN_FLOOR, 1.0, nu_pt)
    # each |l| appears twice among the four eigenvalues
    return float(max(0.0, -np.sum(np.log2(nu_pt))))


def simplified_eigenvalues(a: float, b: float, c: float, d: float) -> tuple[float, float]:
    """Closed-form symplectic eigenvalues of the partially transposed symmetric-form pair.

    Valid when Gamma_qq = Gamma_pp = a on each site and Gamma_{q_n q_m} =
    Gamma_{p_n p_m} = b, with c = Gamma_{q_n p_n} and d = Gamma_{q_n p_m}.
    Returned in ascending order.
    """
    rad1 = (a - b - (c - d)) * (a + b + c + d)
    rad2 = (a + b - (c + d)) * (a - b + c - d)
    if rad1 < 0 or rad2 < 0:
        raise ValueError("negative radicand: covariance is not of symmetric form")
    return tuple(sorted((math.sqrt(rad1), math.sqrt(rad2))))


def log_negativity_simplified(cov: PairCovariance) -> float:
    """Fast path for opposite pairs with symmetric-form covariance."""
    nu = np.array(simplified_eigenvalues(*cov.abcd))
    nu = np.where(nu > 1.0 - EIGEN_FLOOR, 1.0, nu)
    return float(max(0.0, -np.sum(np.log2(nu))))


def max_bound_argument(r, config: ChainConfig, temperature_power: int = 2) -> float:
    """f(T)^k (2/N sum_odd e^{-2 r_s}) (2/N sum_even e^{-2 r_s})."""
    r = np.asarray(r, dtype=float)
    n_osc = config.n_oscillators
    e = np.exp(-2.0 * r)
    s = config.modes
    odd = 2.0 / n_osc * e[s % 2 == 1].sum()
    even = 2.0 / n_osc * e[s % 2 == 0].sum()
    f = thermal_factor(config.temperature, config.omega0)
    return f**temperature_power * odd * even


def max_log_negativity(r, config: ChainConfig, temperature_power: int = 2) -> float:
    """Largest opposite-pair negativity reachable with squeezings ``r`` at optimal angles.

    ``temperature_power`` selects whether the bound argument is scaled by
    f(T)^2 (the default, both symplectic eigenvalues scale by f) or by f(T).
    The result is clipped at 0.
    """
    arg = max_bound_argument(r, config, temperature_power)
    return max(0.0, -0.5 * math.log2(arg))


def optimal_angles(n_modes: int) -> np.ndarray:
    """Target angles: 3 pi/4 for odd s, pi/4 for even s (s = 1..N)."""
    s = np.arange(1, n_modes + 1)
    return np.where(s % 2 == 1, 3.0 * np.pi / 4.0, np.pi / 4.0)


def angle_distance(theta, target) -> np.ndarray:
    """Distance between angles defined mod pi."""
    d = np.mod(np.asarray(theta) - np.asarray(target), np.pi)
    return np.minimum(d, np.pi - d)


def synchronization_error(theta, r=None) -> float:
    """Largest distance of the angles to the optimal pattern, up to a common rotation.

    A common rotation of every angle is a local phase-space rotation and
    leaves the pair negativity unchanged, so the pattern is compared after
    removing the best common offset. Modes with ``r`` below 1e-9 are ignored.
    """
    theta = np.asarray(theta, dtype=float)
    target = optimal_angles(len(theta))
    mask = np.ones(len(theta), bool) if r is None else np.asarray(r) > 1e-9
    if not mask.any():
        return 0.0
    diff = np.mod(theta[mask] - target[mask], np.pi)
    # circular mean on the mod-pi circle
    offset = 0.5 * np.angle(np.mean(np.exp(2j * diff)))
    return float(np.max(angle_distance(diff, offset)))


def validity_check(c: float, r, config: ChainConfig, threshold: float = VALIDITY_WARN):
    """Ratio c sum_s e^{2 r_s} / (4 N) and whether it is below ``threshold``."""
    ratio = float(c * np.sum(np.exp(2.0 * np.asarray(r, dtype=float))) / (4.0 * config.n_oscillators))
    return ratio, ratio < threshold
