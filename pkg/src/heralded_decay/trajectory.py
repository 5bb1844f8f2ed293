"""Monte Carlo wavefunction trajectories for the three detection schemes.

Each trajectory owns a Philox stream keyed by ``(master_seed, traj_index)``,
so a trajectory is a pure function of its config and index. Ensembles are
reduced in fixed-size index chunks, which keeps floating-point sums
independent of how chunks are distributed over worker processes.
"""

from __future__ import annotations

import math
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numba
import numpy as np
from scipy.stats import binomtest

from .detection import ALPHA_FLOOR, DETECTOR_A, DETECTOR_B
from .detection import adaptive_alpha, apply_jump, no_jump_step
from .qubit import DetectionScheme, Params, Scheme, excited_population, from_populations

#: Trajectories still superposed at t_max below this population count as decayed.
TRUNCATION_POPULATION = 1e-6

#: Number of trajectories per reduction chunk. Part of the determinism contract.
CHUNK_SIZE = 1024

_DECAYED, _HERALDED, _OVERFLOW, _DIVERGED = 0, 1, 2, 3


@dataclass(frozen=True)
class SimConfig:
    params: Params
    scheme: DetectionScheme
    t_max: float = 20.0
    p_jump_max: float = 1e-3
    n_traj: int = 1
    master_seed: int = 0
    record_stride: int = 1
    record_t_max: float = 5.0
    record_points: int = 500

    def __post_init__(self) -> None:
        if not self.t_max > 0:
            raise ValueError("t_max must be positive")
        if not 0 < self.p_jump_max <= 0.05:
            raise ValueError("p_jump_max must lie in (0, 0.05]")
        if self.n_traj < 1:
            raise ValueError("n_traj must be at least 1")
        if self.record_stride < 1 or self.record_points < 1:
            raise ValueError("record_stride and record_points must be positive")
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master_seed must be an unsigned 64-bit integer")
        if self.scheme.kind == Scheme.ADAPTIVE_LO and self.params.pi_e >= 1 - ALPHA_FLOOR:
            raise ValueError("adaptive scheme needs pi_e < 1 - 1e-12")

    def grid(self) -> np.ndarray:
        """Uniform sampling grid for populations, after stride decimation."""
        t_end = min(self.record_t_max, self.t_max)
        return np.linspace(0.0, t_end, self.record_points)[:: self.record_stride]


@dataclass(frozen=True)
class Event:
    t: float
    detector: str
    pre_population: float
    post_population: float
    alpha: complex = 0j


@dataclass
class TrajectoryRecord:
    times: np.ndarray
    populations: np.ndarray
    alphas: np.ndarray
    events: list[Event]
    terminal: str  # "HeraldedExcited" or "Decayed"
    sequence_label: str
    max_population: float

    @property
    def samples(self) -> list[tuple[float, float]]:
        return list(zip(self.times.tolist(), self.populations.tolist()))


@dataclass
class EnsembleStats:
    times: np.ndarray
    mean_population: np.ndarray
    standard_error: np.ndarray
    sequence_counts: dict[str, int]
    n_traj: int


@dataclass
class SequenceEstimate:
    """Empirical event-sequence frequencies from an ensemble."""

    counts: dict[str, int]
    n_traj: int
    n_undecided: int = 0
    truncation_population: float = TRUNCATION_POPULATION

    def frequency(self, label: str) -> float:
        return self.counts.get(label, 0) / self.n_traj

    def stderr(self, label: str) -> float:
        f = self.frequency(label)
        return math.sqrt(f * (1.0 - f) / self.n_traj)

    def confidence_interval(self, label: str, level: float = 0.95) -> tuple[float, float]:
        ci = binomtest(self.counts.get(label, 0), self.n_traj).proportion_ci(
            confidence_level=level, method="wilson"
        )
        return ci.low, ci.high

    def p_bna(self, n: int) -> float:
        return self.frequency("B" * n + "A")

    def p_bm0(self, m: int) -> float:
        return self.frequency("B" * m + "0")


@numba.njit(cache=True)
def _cum_hazard(pop, k, alpha2, gamma, tau, kind):
    """-log of the no-click probability over ``tau`` from excited population ``pop``.

    The adaptive oscillator follows the state, so its LO term integrates to
    k (1 - exp(-gamma tau)) with k = mu/(1-mu) |b|^2/|a|^2; a fixed one gives
    |alpha|^2 tau.
    """
    fade = -math.expm1(-gamma * tau)
    lo_term = k * fade if kind == 2 else alpha2 * tau
    return lo_term - math.log1p(-pop * fade)


@numba.njit(cache=True)
def _kernel(rng, a, b, kind, alpha_fixed, mu, gamma, t_max, p_jump_max, grid,
            s_pop, s_alpha, ev_t, ev_det, ev_pre, ev_post, ev_alpha):
    # beam-splitter coefficients of C_A and C_B (see detection._jump_amplitudes)
    ta, sa = math.sqrt(1.0 - mu), math.sqrt(mu * gamma)
    tb, sb = math.sqrt(mu), -math.sqrt((1.0 - mu) * gamma)
    c_adapt = -math.sqrt(gamma * mu / (1.0 - mu))
    ratio_k = mu / (1.0 - mu)
    decay = 0.5 * gamma
    t = 0.0
    gi = 0
    ne = 0
    ng = grid.shape[0]
    cap = ev_t.shape[0]
    status = _DECAYED
    max_pop = b.real**2 + b.imag**2
    while True:
        pop = b.real**2 + b.imag**2
        if pop > max_pop:
            max_pop = pop
        if kind == 2:
            if a.real**2 + a.imag**2 < ALPHA_FLOOR:
                status = _DIVERGED
                break
            alpha = c_adapt * b / a
        elif kind == 1:
            alpha = alpha_fixed
        else:
            alpha = 0j
        while gi < ng and grid[gi] <= t:
            s_pop[gi] = pop
            s_alpha[gi] = alpha
            gi += 1
        if t >= t_max:
            break
        alpha2 = alpha.real**2 + alpha.imag**2
        total = alpha2 + gamma * pop
        dt = t_max - t
        t_next = t_max
        if gi < ng and grid[gi] - t < dt:
            dt = grid[gi] - t
            t_next = grid[gi]
        if total > 0.0 and p_jump_max / total < dt:
            dt = p_jump_max / total
            t_next = t + dt
        # exact jump probability of the step, 1 - S(dt); the click time is
        # found by inverting the survival, so long steps at low rate stay exact
        hazard = -math.log1p(-rng.random())
        k = ratio_k * pop / (1.0 - pop) if kind == 2 else 0.0
        if hazard < _cum_hazard(pop, k, alpha2, gamma, dt, kind):
            lo, hi = 0.0, dt
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                if _cum_hazard(pop, k, alpha2, gamma, mid, kind) < hazard:
                    lo = mid
                else:
                    hi = mid
            dt = hi
            t_next = t + dt
            click = True
        else:
            click = False
        # no-jump evolution up to the click or the end of the step; the common
        # factor exp(-|alpha|^2 dt / 2) drops out on normalization
        b = b * math.exp(-decay * dt)
        inv = 1.0 / math.sqrt(a.real**2 + a.imag**2 + b.real**2 + b.imag**2)
        a = a * inv
        b = b * inv
        t = t_next
        if not click:
            continue
        if ne == cap:
            status = _OVERFLOW
            break
        pop = b.real**2 + b.imag**2
        if kind == 2:
            alpha = c_adapt * b / a
            alpha2 = alpha.real**2 + alpha.imag**2
        ga = ta * alpha * a + sa * b
        ra = ga.real**2 + ga.imag**2 + ta * ta * alpha2 * pop
        if rng.random() * (alpha2 + gamma * pop) < ra:
            det = DETECTOR_A
            g = ga
            e = ta * alpha * b
        else:
            det = DETECTOR_B
            g = tb * alpha * a + sb * b
            e = tb * alpha * b
        inv = 1.0 / math.sqrt(g.real**2 + g.imag**2 + e.real**2 + e.imag**2)
        a = g * inv
        b = e * inv
        ev_t[ne] = t
        ev_det[ne] = det
        ev_pre[ne] = pop
        ev_post[ne] = b.real**2 + b.imag**2
        ev_alpha[ne] = alpha
        ne += 1
        if kind == 2 and det == DETECTOR_A:
            status = _HERALDED
            max_pop = 1.0
            break
    return status, gi, ne, t, max_pop, a, b


def trajectory_rng(master_seed: int, traj_index: int) -> np.random.Generator:
    """Counter-based stream for one trajectory."""
    key = np.array([master_seed, traj_index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


@dataclass
class _Raw:
    status: int
    times: np.ndarray
    pops: np.ndarray
    alphas: np.ndarray
    ev_t: np.ndarray
    ev_det: np.ndarray
    ev_pre: np.ndarray
    ev_post: np.ndarray
    ev_alpha: np.ndarray
    t_end: float
    max_pop: float
    end_pop: float


def _event_capacity(cfg: SimConfig) -> int:
    # LO photons dominate the click count of a fixed oscillator
    expected = (abs(cfg.scheme.alpha) ** 2 + cfg.params.gamma) * cfg.t_max
    return 64 + int(1.25 * expected + 6.0 * math.sqrt(expected))


def _simulate(cfg: SimConfig, traj_index: int, grid: np.ndarray, capacity: int = 0) -> _Raw:
    p = cfg.params
    capacity = capacity or _event_capacity(cfg)
    s0 = from_populations(p.pi_e)
    ng = grid.shape[0]
    while True:
        s_pop = np.empty(ng)
        s_alpha = np.empty(ng, dtype=np.complex128)
        ev_t = np.empty(capacity)
        ev_det = np.empty(capacity, dtype=np.int64)
        ev_pre = np.empty(capacity)
        ev_post = np.empty(capacity)
        ev_alpha = np.empty(capacity, dtype=np.complex128)
        status, ns, ne, t_end, max_pop, _, b = _kernel(
            trajectory_rng(cfg.master_seed, traj_index),
            s0.a, s0.b, int(cfg.scheme.kind), cfg.scheme.alpha, p.mu, p.gamma,
            float(cfg.t_max), float(cfg.p_jump_max), grid,
            s_pop, s_alpha, ev_t, ev_det, ev_pre, ev_post, ev_alpha,
        )
        if status != _OVERFLOW:
            break
        capacity *= 4
    if status == _DIVERGED:
        raise FloatingPointError(
            f"trajectory {traj_index}: ground population fell below the adaptive-alpha floor"
        )
    return _Raw(status, grid[:ns], s_pop[:ns], s_alpha[:ns], ev_t[:ne], ev_det[:ne],
                ev_pre[:ne], ev_post[:ne], ev_alpha[:ne], t_end, max_pop, abs(b) ** 2)


def _label(raw: _Raw) -> str:
    """Detector letters in order, then "0" once the emitter has decayed.

    Heralded trajectories end on their A click; trajectories still visibly
    excited at t_max end in "?".
    """
    letters = "".join("A" if d == DETECTOR_A else "B" for d in raw.ev_det)
    if raw.status == _HERALDED:
        return letters
    return letters + ("0" if raw.end_pop < TRUNCATION_POPULATION else "?")


def run_trajectory(cfg: SimConfig, traj_index: int = 0) -> TrajectoryRecord:
    """Simulate one trajectory, sampling the population on ``cfg.grid()``."""
    raw = _simulate(cfg, traj_index, cfg.grid())
    events = [
        Event(float(t), "A" if d == DETECTOR_A else "B", float(pre), float(post), complex(al))
        for t, d, pre, post, al in zip(raw.ev_t, raw.ev_det, raw.ev_pre, raw.ev_post, raw.ev_alpha)
    ]
    return TrajectoryRecord(
        times=raw.times,
        populations=raw.pops,
        alphas=raw.alphas,
        events=events,
        terminal="HeraldedExcited" if raw.status == _HERALDED else "Decayed",
        sequence_label=_label(raw),
        max_population=raw.max_pop,
    )


def conditioned_trajectory(
    params: Params,
    scheme: DetectionScheme,
    grid: np.ndarray,
    clicks: Sequence[tuple[float, str]] = (),
) -> TrajectoryRecord:
    """Deterministic trajectory with clicks forced at prescribed times.

    The state follows the no-jump evolution between the given ``(t, detector)``
    clicks. Under the adaptive scheme an A click ends the record.
    """
    clicks = sorted(clicks)
    state = from_populations(params.pi_e)
    times, pops, alphas, events = [], [], [], []

    def alpha_of(s):
        if scheme.kind == Scheme.ADAPTIVE_LO:
            return adaptive_alpha(s, params)
        return scheme.alpha

    t = 0.0
    terminal = "Decayed"
    pending = [(float(tc), "click", det) for tc, det in clicks]
    pending += [(float(tg), "sample", "") for tg in grid]
    pending.sort(key=lambda item: (item[0], item[1] == "sample"))
    for tk, what, det in pending:
        if tk > t:
            state, _ = no_jump_step(state, alpha_of(state), params, tk - t)
            t = tk
        if what == "sample":
            times.append(t)
            pops.append(excited_population(state))
            alphas.append(alpha_of(state))
            continue
        alpha = alpha_of(state)
        outcome, state = apply_jump(state, det, alpha, params)
        events.append(Event(t, det, outcome.pre_population, outcome.post_population, alpha))
        if scheme.kind == Scheme.ADAPTIVE_LO and det == "A":
            terminal = "HeraldedExcited"
            break
    label = "".join(e.detector for e in events)
    if terminal == "Decayed":
        label += "0" if excited_population(state) < TRUNCATION_POPULATION else "?"
    return TrajectoryRecord(
        times=np.asarray(times), populations=np.asarray(pops),
        alphas=np.asarray(alphas, dtype=complex), events=events, terminal=terminal,
        sequence_label=label, max_population=max(pops + [e.post_population for e in events]),
    )


@dataclass
class _Chunk:
    """Partial sums over one chunk of consecutive trajectory indices."""

    sum_pop: np.ndarray
    sum_pop2: np.ndarray
    labels: Counter = field(default_factory=Counter)
    n_with_events: int = 0
    n_events: int = 0
    sum_abs_step: float = 0.0
    max_pops: list = field(default_factory=list)


def _run_chunk(cfg: SimConfig, start: int, stop: int) -> _Chunk:
    grid = cfg.grid()
    out = _Chunk(np.zeros_like(grid), np.zeros_like(grid))
    gamma = cfg.params.gamma
    for i in range(start, stop):
        raw = _simulate(cfg, i, grid)
        pops = np.empty_like(grid)
        ns = raw.pops.size
        pops[:ns] = raw.pops
        if ns < grid.size:
            # heralded: the unobserved excited emitter decays on from t_A
            pops[ns:] = np.exp(-gamma * (grid[ns:] - raw.t_end))
        out.sum_pop += pops
        out.sum_pop2 += pops * pops
        out.labels[_label(raw)] += 1
        ne = raw.ev_t.size
        out.n_with_events += ne > 0
        out.n_events += ne
        out.sum_abs_step += float(np.abs(raw.ev_post - raw.ev_pre).sum())
        out.max_pops.append(raw.max_pop)
    return out


def _run_chunk_args(args):
    return _run_chunk(*args)


def _run_all(cfg: SimConfig, workers: int = 1) -> list[_Chunk]:
    bounds = [(s, min(s + CHUNK_SIZE, cfg.n_traj)) for s in range(0, cfg.n_traj, CHUNK_SIZE)]
    if workers <= 1 or len(bounds) == 1:
        return [_run_chunk(cfg, s, e) for s, e in bounds]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_chunk_args, [(cfg, s, e) for s, e in bounds]))


def _merge_labels(chunks: Sequence[_Chunk]) -> dict[str, int]:
    total: Counter = Counter()
    for c in chunks:
        total.update(c.labels)
    return dict(sorted(total.items(), key=lambda kv: (len(kv[0]), kv[0])))


def run_ensemble(cfg: SimConfig, workers: int = 1) -> EnsembleStats:
    """Average ``cfg.n_traj`` trajectories on the sampling grid.

    Under the adaptive scheme a heralded trajectory stops at its A click;
    for the mean it is continued by the deterministic decay exp(-gamma (t - t_A))
    of the then fully excited, unobserved emitter.
    """
    chunks = _run_all(cfg, workers)
    n = cfg.n_traj
    s1 = np.zeros_like(chunks[0].sum_pop)
    s2 = np.zeros_like(s1)
    for c in chunks:
        s1 += c.sum_pop
        s2 += c.sum_pop2
    mean = s1 / n
    if n > 1:
        var = np.maximum(s2 - n * mean**2, 0.0) / (n - 1)
        se = np.sqrt(var / n)
    else:
        se = np.zeros_like(mean)
    return EnsembleStats(cfg.grid(), mean, se, _merge_labels(chunks), n)


def classify_and_estimate(cfg: SimConfig, workers: int = 1) -> SequenceEstimate:
    """Frequencies of the event sequences B^n A and B^m 0 (adaptive scheme)."""
    if cfg.scheme.kind != Scheme.ADAPTIVE_LO:
        raise ValueError("sequence classification needs the adaptive scheme")
    counts = _merge_labels(_run_all(_no_grid(cfg), workers))
    undecided = sum(v for k, v in counts.items() if k.endswith("?"))
    return SequenceEstimate(counts, cfg.n_traj, undecided)


def counting_jump_fraction(cfg: SimConfig, workers: int = 1) -> float:
    """Fraction of photon-counting trajectories with at least one click."""
    if cfg.scheme.kind != Scheme.COUNTING:
        raise ValueError("jump fraction is defined for the counting scheme")
    chunks = _run_all(_no_grid(cfg), workers)
    return sum(c.n_with_events for c in chunks) / cfg.n_traj


def strong_lo_excursion_probability(cfg: SimConfig, threshold=0.99, workers: int = 1):
    """Fraction of trajectories whose population ever exceeds ``threshold``.

    ``threshold`` may be a sequence; all thresholds are evaluated on the same
    set of trajectories.
    """
    if cfg.scheme.kind != Scheme.FIXED_LO:
        raise ValueError("excursion probability is defined for a fixed oscillator")
    chunks = _run_all(_no_grid(cfg), workers)
    peaks = np.concatenate([np.asarray(c.max_pops) for c in chunks])
    th = np.asarray(threshold, dtype=float)
    frac = (peaks[:, None] > th.reshape(-1)[None, :]).mean(axis=0)
    return frac.reshape(th.shape) if th.ndim else float(frac[0])


def mean_population_step(cfg: SimConfig, workers: int = 1) -> float:
    """Mean absolute population change per click over the ensemble."""
    chunks = _run_all(_no_grid(cfg), workers)
    n_events = sum(c.n_events for c in chunks)
    if n_events == 0:
        return 0.0
    return sum(c.sum_abs_step for c in chunks) / n_events


def _no_grid(cfg: SimConfig) -> SimConfig:
    # a single sample at t=0 keeps the grid from capping the step size
    return SimConfig(cfg.params, cfg.scheme, cfg.t_max, cfg.p_jump_max, cfg.n_traj,
                     cfg.master_seed, 1, 0.0, 1)
