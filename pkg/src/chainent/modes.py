"""Exact evolution of normal-mode second moments under piecewise-constant coupling.

Each normal mode is an independent oscillator with frequency omega_s(c). Its
state is the triple (<QQ^+>, Re<QP^+>, <PP^+>); for a constant frequency the
Heisenberg solution is a rotation in phase space, so a segment of constant
coupling is applied exactly as a congruence of the moment matrix.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .chain import ChainConfig, ControlSchedule, mode_frequencies
from .thermo import thermal_factor

PURITY_RTOL = 1e-6


class PurityError(ValueError):
    """Moments are not those of a (thermally rescaled) pure single-mode Gaussian."""


@dataclass(frozen=True)
class ModeMoments:
    """Second moments of the N normal modes at one instant.

    Arrays are indexed by ``s - 1`` for s = 1..N.
    """

    qq: np.ndarray
    qp: np.ndarray
    pp: np.ndarray
    time: float = 0.0

    def uncertainty(self) -> np.ndarray:
        return self.qq * self.pp - self.qp**2

    def as_array(self) -> np.ndarray:
        """Stacked ``(3, N)`` array (qq, qp, pp)."""
        return np.stack([self.qq, self.qp, self.pp])


@dataclass(frozen=True)
class SqueezeDecomposition:
    """Per-mode frequency, squeezing parameter and rotation angle (mod pi)."""

    omega: np.ndarray
    r: np.ndarray
    theta: np.ndarray


def initial_moments(config: ChainConfig) -> ModeMoments:
    """Thermal state of the uncoupled chain (vacuum at T = 0)."""
    f = thermal_factor(config.temperature, config.omega0)
    n = config.n_oscillators
    return ModeMoments(
        qq=np.full(n, f / (2.0 * config.omega0)),
        qp=np.zeros(n),
        pp=np.full(n, f * config.omega0 / 2.0),
    )


def rotation_coefficients(omega, dt):
    """Matrix elements of the moment propagator for one constant-frequency step.

    Returns a ``(3, 3, N)`` array ``K`` with ``(qq, qp, pp)_new = K @ (qq, qp, pp)``
    applied per mode.
    """
    omega = np.asarray(omega, dtype=float)
    phase = omega * dt
    cs, sn = np.cos(phase), np.sin(phase)
    c2, s2, csn = cs * cs, sn * sn, cs * sn
    return np.array(
        [
            [c2, 2.0 * csn / omega, s2 / omega**2],
            [-omega * csn, c2 - s2, csn / omega],
            [omega**2 * s2, -2.0 * omega * csn, c2],
        ]
    )


def rotation_derivative(omega, dt):
    """d/d omega of :func:`rotation_coefficients`, same layout."""
    omega = np.asarray(omega, dtype=float)
    phase = omega * dt
    cs, sn = np.cos(phase), np.sin(phase)
    c2, s2, csn = cs * cs, sn * sn, cs * sn
    # derivatives of c2, s2, csn w.r.t. omega through the phase
    dc2 = -2.0 * csn * dt
    ds2 = 2.0 * csn * dt
    dcsn = (c2 - s2) * dt
    w, w2 = omega, omega**2
    return np.array(
        [
            [dc2, 2.0 * (dcsn / w - csn / w2), ds2 / w2 - 2.0 * s2 / w**3],
            [-(csn + w * dcsn), dc2 - ds2, dcsn / w - csn / w2],
            [2.0 * w * s2 + w2 * ds2, -2.0 * (csn + w * dcsn), dc2],
        ]
    )


def _apply(kernel, x):
    return np.einsum("ijn,jn->in", kernel, x)


def propagate_segment(m: ModeMoments, config: ChainConfig, c: float, dt: float) -> ModeMoments:
    """Advance every mode by ``dt`` at constant coupling ``c`` (exact)."""
    if dt < 0:
        raise ValueError(f"dt must be >= 0, got {dt!r}")
    omega = mode_frequencies(config, c)
    qq, qp, pp = _apply(rotation_coefficients(omega, dt), m.as_array())
    return ModeMoments(qq, qp, pp, m.time + dt)


def propagate_schedule(
    m0: ModeMoments,
    config: ChainConfig,
    schedule: ControlSchedule,
    sample_dt: float,
    t_end: float | None = None,
):
    """Sample the moments on the grid ``t = m0.time + k * sample_dt``.

    Propagation restarts from every segment boundary so that coupling jumps
    are honoured exactly. Past the end of the schedule (up to ``t_end``) the
    last coupling is held. Returns ``(times, moments)`` where ``moments`` is a
    list of :class:`ModeMoments`; the couplings in force at each sample are
    available through :func:`sample_couplings`.
    """
    if not sample_dt > 0:
        raise ValueError(f"sample_dt must be > 0, got {sample_dt!r}")
    t0 = m0.time
    total = schedule.total_duration if t_end is None else t_end - t0
    n_samples = int(np.floor(total / sample_dt + 1e-9)) + 1
    offsets = np.arange(n_samples) * sample_dt

    bounds = schedule.boundaries
    couplings = schedule.couplings
    out = []
    state = m0.as_array()
    seg_start = 0.0
    seg = 0
    for tau in offsets:
        # advance whole segments that end at or before tau
        while seg < len(couplings) and bounds[seg + 1] <= tau:
            omega = mode_frequencies(config, couplings[seg])
            state = _apply(rotation_coefficients(omega, bounds[seg + 1] - seg_start), state)
            seg_start = bounds[seg + 1]
            seg += 1
        c = couplings[seg] if seg < len(couplings) else (couplings[-1] if len(couplings) else 0.0)
        omega = mode_frequencies(config, c)
        qq, qp, pp = _apply(rotation_coefficients(omega, tau - seg_start), state)
        out.append(ModeMoments(qq, qp, pp, t0 + tau))
    return t0 + offsets, out


def final_moments(m0: ModeMoments, config: ChainConfig, schedule: ControlSchedule) -> ModeMoments:
    """Moments at the end of the schedule."""
    m = m0
    for d, c in schedule.segments:
        m = propagate_segment(m, config, c, d)
    return m


def sample_couplings(schedule: ControlSchedule, times, t0: float = 0.0) -> np.ndarray:
    """Coupling in force at each sample time (right-continuous at jumps)."""
    return np.array([schedule.coupling_at(t - t0) for t in times])


def forward_moments(omega, r, theta, f: float = 1.0) -> ModeMoments:
    """Moments of a squeezed (thermally rescaled) state from (omega, r, theta)."""
    omega, r, theta = (np.asarray(a, dtype=float) for a in (omega, r, theta))
    c2, s2 = np.cos(theta) ** 2, np.sin(theta) ** 2
    em, ep = np.exp(-2.0 * r), np.exp(2.0 * r)
    qq = f * (em * c2 + ep * s2) / (2.0 * omega)
    pp = f * omega * (ep * c2 + em * s2) / 2.0
    qp = f * np.sinh(2.0 * r) * np.sin(theta) * np.cos(theta)
    return ModeMoments(qq, qp, pp)


def extract_squeeze(m: ModeMoments, config: ChainConfig, c: float) -> SqueezeDecomposition:
    """Invert the squeezing parametrization relative to the frequencies at coupling ``c``.

    Moments are first divided by the thermal factor so that the decomposition
    is defined at any temperature. ``theta`` lies in ``[0, pi)`` and is set to
    0 where ``r`` vanishes.
    """
    f = thermal_factor(config.temperature, config.omega0)
    product = m.uncertainty() / f**2
    bad = np.abs(product - 0.25) > PURITY_RTOL * 0.25
    if np.any(bad):
        raise PurityError(
            f"uncertainty product deviates from f(T)^2/4 for modes {np.flatnonzero(bad) + 1}"
        )
    omega = mode_frequencies(config, c)
    qq, qp, pp = m.qq / f, m.qp / f, m.pp / f
    # omega qq + pp/omega = cosh(2r) and
    # (omega qq - pp/omega, 2 qp) = sinh(2r) (-cos 2theta, sin 2theta);
    # r comes from the sinh branch, which stays accurate as r -> 0
    diff = pp / omega - omega * qq
    r = 0.5 * np.arcsinh(np.hypot(diff, 2.0 * qp))
    two_theta = np.arctan2(2.0 * qp, diff)
    theta = np.mod(0.5 * two_theta, np.pi)
    theta = np.where(r > 1e-12, theta, 0.0)
    theta = np.where(theta >= np.pi, 0.0, theta)
    return SqueezeDecomposition(omega=omega, r=r, theta=theta)


def moment_rhs(x, omega2):
    """Time derivative of (qq, qp, pp) for squared frequencies ``omega2``."""
    qq, qp, pp = x
    return np.array([2.0 * qp, pp - omega2 * qq, -2.0 * omega2 * qp])


def ode_oracle(
    m0: ModeMoments,
    config: ChainConfig,
    schedule: ControlSchedule,
    dt_step: float | None = None,
) -> tuple[np.ndarray, list[ModeMoments]]:
    """Classical RK4 integration of the moment ODEs; samples at segment ends.

    Independent of the closed-form propagator: used only as a test oracle.
    """
    if dt_step is None:
        dt_step = 1e-3 / config.omega0
    x = m0.as_array().astype(float)
    t = m0.time
    times, out = [t], [replace(m0)]
    for duration, c in schedule.segments:
        omega2 = config.omega0**2 + c * config.coupling_weights
        n = max(1, int(np.ceil(duration / dt_step)))
        h = duration / n
        for _ in range(n):
            k1 = moment_rhs(x, omega2)
            k2 = moment_rhs(x + 0.5 * h * k1, omega2)
            k3 = moment_rhs(x + 0.5 * h * k2, omega2)
            k4 = moment_rhs(x + h * k3, omega2)
            x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t += duration
        times.append(t)
        out.append(ModeMoments(x[0].copy(), x[1].copy(), x[2].copy(), t))
    return np.array(times), out
