"""Steepest-descent optimal control of the coupling for opposite-pair entanglement.

The squeezing stage is parametrized by M equal-duration segments of constant
coupling. The objective is the argument of the maximal attainable negativity,

    J = (2/N sum_{s odd} e^{-2 r_s}) (2/N sum_{s even} e^{-2 r_s}),

evaluated at the end of the squeezing stage with the squeezings measured
against the mode frequencies at ``eval_coupling``. Gradients come either from
central finite differences or from a backward costate sweep through the exact
segment propagators. After the descent, the coupling is held at ``sync_c``
until the mode angles line up (entanglement peak) and is then switched off,
which freezes the entanglement.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .chain import ChainConfig, ControlSchedule, mode_frequencies
from .entanglement import (
    log_negativity,
    max_log_negativity,
    opposite_pair,
    pair_covariance,
    synchronization_error,
    validity_check,
)
from .modes import (
    ModeMoments,
    extract_squeeze,
    final_moments,
    initial_moments,
    propagate_schedule,
    rotation_coefficients,
    rotation_derivative,
)
from .thermo import thermal_factor

log = logging.getLogger(__name__)

GRADIENT_MODES = ("finite-difference", "adjoint")


class SynchronizationError(RuntimeError):
    pass


@dataclass(frozen=True)
class OptimizerConfig:
    n_segments: int = 40
    horizon: float = 20.0
    c_max: float = 0.05
    step_size: float = 1.0
    max_iterations: int = 300
    convergence_tol: float = 1e-10
    gradient_mode: str = "finite-difference"
    fd_epsilon: float = 1e-6
    sync_c: float = 0.05
    sync_max_time: float = 150.0
    freeze_time: float = 20.0
    peak_tol: float = 1e-9
    sample_dt: float = 0.05
    max_halvings: int = 40
    seed: int | None = None

    def __post_init__(self):
        if self.n_segments < 1:
            raise ValueError("n_segments must be >= 1")
        if self.horizon < 0:
            raise ValueError("horizon must be >= 0")
        if not 0 <= self.sync_c <= self.c_max:
            raise ValueError("sync_c must lie in [0, c_max]")
        if not 0 < self.fd_epsilon < self.c_max / 10:
            raise ValueError("fd_epsilon must lie in (0, c_max/10)")
        if self.gradient_mode not in GRADIENT_MODES:
            raise ValueError(f"gradient_mode must be one of {GRADIENT_MODES}")

    def initial_couplings(self) -> np.ndarray:
        """Constant c_max/2, or a uniform random start when ``seed`` is set."""
        if self.seed is None:
            return np.full(self.n_segments, self.c_max / 2)
        rng = np.random.default_rng(self.seed)
        return rng.uniform(0.0, self.c_max, self.n_segments)


@dataclass
class OptimizationResult:
    protocol: ControlSchedule
    squeeze_schedule: ControlSchedule
    cost_history: list[float]
    status: str
    iterations: int
    squeezing: np.ndarray
    peak_time: float = 0.0
    peak_log_negativity: float = 0.0
    peak_bound: float = 0.0
    validity_ratio: float = 0.0
    sync_error: float = 0.0
    extra: dict = field(default_factory=dict)

    @property
    def converged(self) -> bool:
        return self.status in ("converged", "stalled")


# -- cost ---------------------------------------------------------------------


def _squeeze_stage_states(x0, config, durations, couplings):
    """Batched forward pass. ``couplings`` has shape (B, M); returns (M+1, B, 3, N)."""
    couplings = np.atleast_2d(couplings)
    weights = config.coupling_weights
    states = [np.broadcast_to(x0, (couplings.shape[0],) + x0.shape).copy()]
    x = states[0]
    for k, dt in enumerate(durations):
        omega = np.sqrt(config.omega0**2 + couplings[:, k, None] * weights[None, :])
        kern = rotation_coefficients(omega, dt)  # (3, 3, B, N)
        x = np.einsum("ijbn,bjn->bin", kern, x)
        states.append(x)
    return np.array(states)


def _bound_argument(x, config, eval_coupling):
    """J and the pieces needed for its derivative, for states of shape (..., 3, N)."""
    f = thermal_factor(config.temperature, config.omega0)
    omega = mode_frequencies(config, eval_coupling)
    u = (omega * x[..., 0, :] + x[..., 2, :] / omega) / f
    u = np.maximum(u, 1.0)
    root = np.sqrt(u * u - 1.0)
    e = u - root  # e^{-2r}
    odd = config.modes % 2 == 1
    n = config.n_oscillators
    s_odd = 2.0 / n * e[..., odd].sum(axis=-1)
    s_even = 2.0 / n * e[..., ~odd].sum(axis=-1)
    return s_odd * s_even, (u, root, s_odd, s_even, omega, f, odd)


def _eval_coupling(couplings, eval_coupling):
    return couplings[-1] if eval_coupling is None else eval_coupling


def cost(protocol: ControlSchedule, config: ChainConfig, eval_coupling: float | None = None) -> float:
    """Bound argument J at the end of ``protocol``.

    Squeezings are measured against the frequencies at ``eval_coupling``
    (default: the coupling of the last segment).
    """
    if not protocol.segments:
        return 1.0
    x = final_moments(initial_moments(config), config, protocol).as_array()
    c_eval = _eval_coupling(protocol.couplings, eval_coupling)
    j, _ = _bound_argument(x, config, c_eval)
    return float(j)


def _cost_batch(couplings, durations, config, eval_coupling):
    x0 = initial_moments(config).as_array()
    states = _squeeze_stage_states(x0, config, durations, couplings)
    j, _ = _bound_argument(states[-1], config, eval_coupling)
    return j


# -- gradient -----------------------------------------------------------------


def fd_gradient(couplings, durations, config, eval_coupling, c_max, eps):
    """Central differences; second-order one-sided stencils where a bound is within ``eps``."""
    c = np.asarray(couplings, dtype=float)
    m = len(c)
    lower = c - eps < 0.0
    upper = c + eps > c_max
    trials = []
    for k in range(m):
        e = np.zeros(m)
        e[k] = eps
        if lower[k]:
            trials += [c, c + e, c + 2 * e]
        elif upper[k]:
            trials += [c, c - e, c - 2 * e]
        else:
            trials += [c + e, c - e]
    vals = _cost_batch(np.array(trials), durations, config, eval_coupling)
    grad = np.empty(m)
    i = 0
    for k in range(m):
        if lower[k]:
            j0, j1, j2 = vals[i : i + 3]
            grad[k] = (-3 * j0 + 4 * j1 - j2) / (2 * eps)
            i += 3
        elif upper[k]:
            j0, j1, j2 = vals[i : i + 3]
            grad[k] = (3 * j0 - 4 * j1 + j2) / (2 * eps)
            i += 3
        else:
            grad[k] = (vals[i] - vals[i + 1]) / (2 * eps)
            i += 2
    return grad


def adjoint_gradient(couplings, durations, config, eval_coupling):
    """Backward costate sweep through the exact segment propagators."""
    c = np.asarray(couplings, dtype=float)
    x0 = initial_moments(config).as_array()
    states = _squeeze_stage_states(x0, config, durations, c[None, :])[:, 0]
    _, (u, root, s_odd, s_even, omega_e, f, odd) = _bound_argument(states[-1], config, eval_coupling)

    weights = config.coupling_weights
    active = weights > 0
    n = config.n_oscillators
    dj_de = np.where(odd, 2.0 / n * s_even, 2.0 / n * s_odd)
    with np.errstate(divide="ignore", invalid="ignore"):
        de_du = np.where(active, 1.0 - u / root, 0.0)
    du_dx = np.array([omega_e / f, np.zeros(n), 1.0 / (f * omega_e)])
    lam = dj_de * de_du * du_dx  # costate at the final time, (3, N)

    grad = np.empty(len(c))
    for k in range(len(c) - 1, -1, -1):
        omega = np.sqrt(config.omega0**2 + c[k] * weights)
        kern = rotation_coefficients(omega, durations[k])
        dkern = rotation_derivative(omega, durations[k]) * (weights / (2.0 * omega))
        grad[k] = np.einsum("in,ijn,jn->", lam, dkern, states[k])
        lam = np.einsum("ijn,in->jn", kern, lam)
    return grad


def gradient(protocol: ControlSchedule, config: ChainConfig, opt: OptimizerConfig) -> np.ndarray:
    """dJ/dc_k for every segment, with J measured at ``opt.sync_c``."""
    c = protocol.couplings
    d = protocol.durations
    if opt.gradient_mode == "adjoint":
        return adjoint_gradient(c, d, config, opt.sync_c)
    return fd_gradient(c, d, config, opt.sync_c, protocol.c_max, opt.fd_epsilon)


# -- descent ------------------------------------------------------------------


def descend(couplings, config: ChainConfig, opt: OptimizerConfig):
    """Projected steepest descent with halving backtracking.

    Returns ``(couplings, cost_history, status, iterations)``.
    """
    c = np.clip(np.asarray(couplings, dtype=float), 0.0, opt.c_max)
    durations = np.full(len(c), opt.horizon / len(c))
    c_eval = opt.sync_c

    def j_of(cc):
        return float(_cost_batch(cc[None, :], durations, config, c_eval)[0])

    j = j_of(c)
    history = [j]
    status = "max_iterations"
    alpha = None
    it = 0
    for it in range(1, opt.max_iterations + 1):
        if opt.gradient_mode == "adjoint":
            g = adjoint_gradient(c, durations, config, c_eval)
        else:
            g = fd_gradient(c, durations, config, c_eval, opt.c_max, opt.fd_epsilon)
        # projected gradient: components pinned at a bound by an outward gradient vanish
        pinned = ((c <= 0.0) & (g > 0)) | ((c >= opt.c_max) & (g < 0))
        gmax = np.max(np.abs(np.where(pinned, 0.0, g)))
        if gmax == 0.0:
            status = "converged"
            break
        if alpha is None:
            alpha = opt.step_size * opt.c_max / gmax
        trial_alpha = 2.0 * alpha
        accepted = False
        for _ in range(opt.max_halvings):
            c_new = np.clip(c - trial_alpha * g, 0.0, opt.c_max)
            if np.array_equal(c_new, c):
                break
            j_new = j_of(c_new)
            if j_new < j:
                accepted = True
                break
            trial_alpha *= 0.5
        if not accepted:
            status = "stalled"
            break
        alpha = trial_alpha
        rel = (j - j_new) / j
        c, j = c_new, j_new
        history.append(j)
        if rel < opt.convergence_tol:
            status = "converged"
            break
    log.debug("descent finished: %s after %d iterations, J=%.6g", status, it, j)
    return c, history, status, it


# -- synchronization ----------------------------------------------------------


def pair_negativity_series(moments_list, config: ChainConfig, pair=None) -> np.ndarray:
    n, m = pair if pair is not None else opposite_pair(config)
    return np.array([log_negativity(pair_covariance(mm, config, n, m)) for mm in moments_list])


def synchronize_and_freeze(
    state: ModeMoments, config: ChainConfig, opt: OptimizerConfig, current_c: float = 0.0, pair=None
):
    """Hold ``sync_c`` until the entanglement peaks, then switch the coupling off.

    ``current_c`` is the coupling in force when ``state`` was reached; the
    state must carry squeezing relative to it. The peak is the largest sampled
    negativity within ``sync_max_time`` (ties resolved towards the earliest
    sample). Returns the segments to append and a metadata dict.
    """
    if not np.any(extract_squeeze(state, config, current_c).r > 1e-12):
        raise SynchronizationError("no squeezing to synchronize")
    r = extract_squeeze(state, config, opt.sync_c).r
    hold = ControlSchedule(((opt.sync_max_time, opt.sync_c),), opt.c_max)
    start = ModeMoments(state.qq, state.qp, state.pp, 0.0)
    times, series = propagate_schedule(start, config, hold, opt.sample_dt)
    en = pair_negativity_series(series, config, pair)
    k = int(np.argmax(en))
    if en[k] <= opt.peak_tol:
        raise SynchronizationError(f"no entanglement peak within {opt.sync_max_time}")
    if k == len(en) - 1:
        log.warning("entanglement still rising at the end of the synchronization window")
    peak = series[k]
    decomp = extract_squeeze(peak, config, 0.0)
    segments = []
    if times[k] > 0:
        segments.append((float(times[k]), opt.sync_c))
    if opt.freeze_time > 0:
        segments.append((opt.freeze_time, 0.0))
    meta = dict(
        peak_offset=float(times[k]),
        peak_log_negativity=float(en[k]),
        peak_bound=max_log_negativity(decomp.r, config),
        validity_ratio=validity_check(0.0, decomp.r, config)[0],
        sync_error=synchronization_error(extract_squeeze(peak, config, opt.sync_c).theta, r),
    )
    return segments, meta


def optimize(initial: ControlSchedule | None, config: ChainConfig, opt: OptimizerConfig) -> OptimizationResult:
    """Optimize the squeezing stage, then append the synchronization and freeze phases."""
    if initial is None:
        couplings = opt.initial_couplings()
    else:
        couplings = initial.couplings
        if len(couplings) != opt.n_segments:
            raise ValueError("initial protocol must have n_segments segments")
    if opt.horizon == 0:
        squeeze = ControlSchedule((), opt.c_max)
        history, status, iterations = [1.0], "converged", 0
    else:
        c, history, status, iterations = descend(couplings, config, opt)
        squeeze = ControlSchedule.uniform(c, opt.horizon, opt.c_max)

    state = final_moments(initial_moments(config), config, squeeze)
    r = extract_squeeze(state, config, opt.sync_c).r
    result = OptimizationResult(
        protocol=squeeze,
        squeeze_schedule=squeeze,
        cost_history=history,
        status=status,
        iterations=iterations,
        squeezing=r,
    )
    try:
        last_c = squeeze.segments[-1][1] if squeeze.segments else 0.0
        segments, meta = synchronize_and_freeze(state, config, opt, last_c)
    except SynchronizationError as exc:
        log.info("no synchronization phase: %s", exc)
        if opt.freeze_time > 0:
            result.protocol = squeeze.extend([(opt.freeze_time, 0.0)])
        return result
    result.protocol = squeeze.extend(segments)
    result.peak_time = squeeze.total_duration + meta["peak_offset"]
    result.peak_log_negativity = meta["peak_log_negativity"]
    result.peak_bound = meta["peak_bound"]
    result.validity_ratio = meta["validity_ratio"]
    result.sync_error = meta["sync_error"]
    return result


def sudden_switch_baseline(config: ChainConfig, c_value: float, horizon: float, sample_dt: float = 0.05, pair=None):
    """Negativity after an instantaneous switch 0 -> ``c_value`` at t = 0."""
    if c_value < 0:
        raise ValueError("c_value must be >= 0")
    schedule = ControlSchedule(((horizon, c_value),), max(c_value, 0.0))
    times, series = propagate_schedule(initial_moments(config), config, schedule, sample_dt)
    return times, pair_negativity_series(series, config, pair)
