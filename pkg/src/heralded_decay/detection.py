"""Jump operators, click rates and no-jump propagation.

The local oscillator is an undepleted classical amplitude ``alpha``, so the
two detector operators act on the emitter as

    C_A = sqrt(1-mu) alpha + sqrt(mu gamma) |g><e|
    C_B = sqrt(mu) alpha   - sqrt((1-mu) gamma) |g><e|

The underscore-prefixed kernels work on bare complex amplitudes and are
compiled with numba so the trajectory engine can call them in its inner loop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from .qubit import EmitterState, Params, excited_population, normalize

DETECTOR_A = 0
DETECTOR_B = 1

#: |a|^2 below which the adaptive oscillator amplitude is treated as divergent.
ALPHA_FLOOR = 1e-12


@numba.njit(cache=True)
def _jump_amplitudes(a, b, detector, alpha, mu, gamma):
    if detector == DETECTOR_A:
        t, r = math.sqrt(1.0 - mu), math.sqrt(mu * gamma)
    else:
        t, r = math.sqrt(mu), -math.sqrt((1.0 - mu) * gamma)
    return t * alpha * a + r * b, t * alpha * b


@numba.njit(cache=True)
def _rates(a, b, alpha, mu, gamma):
    ga, ea = _jump_amplitudes(a, b, DETECTOR_A, alpha, mu, gamma)
    gb, eb = _jump_amplitudes(a, b, DETECTOR_B, alpha, mu, gamma)
    rate_a = ga.real**2 + ga.imag**2 + ea.real**2 + ea.imag**2
    rate_b = gb.real**2 + gb.imag**2 + eb.real**2 + eb.imag**2
    return rate_a, rate_b


@numba.njit(cache=True)
def _adaptive_alpha(a, b, mu, gamma):
    return -math.sqrt(gamma * mu / (1.0 - mu)) * b / a


@numba.njit(cache=True)
def _no_jump(a, b, alpha2, gamma, dt):
    """Exact no-jump propagation; returns normalized amplitudes and survival.

    exp(-|alpha|^2 dt / 2) multiplies both amplitudes and is applied to the
    survival only, so large |alpha|^2 dt cannot underflow the state.
    """
    b1 = b * math.exp(-0.5 * gamma * dt)
    n2 = a.real**2 + a.imag**2 + b1.real**2 + b1.imag**2
    inv = 1.0 / math.sqrt(n2)
    return a * inv, b1 * inv, n2 * math.exp(-alpha2 * dt)


@dataclass(frozen=True)
class RatePair:
    rate_a: float
    rate_b: float

    @property
    def total(self) -> float:
        return self.rate_a + self.rate_b


@dataclass(frozen=True)
class JumpOutcome:
    detector: str
    pre_population: float
    post_population: float
    weight: float


def _detector_index(detector: str) -> int:
    try:
        return {"A": DETECTOR_A, "B": DETECTOR_B}[detector]
    except KeyError:
        raise ValueError(f"detector must be 'A' or 'B', got {detector!r}") from None


def rates(s: EmitterState, alpha: complex, p: Params) -> RatePair:
    """Click rates of both detectors, ``<C^dag C>`` for the current state."""
    ra, rb = _rates(complex(s.a), complex(s.b), complex(alpha), p.mu, p.gamma)
    return RatePair(ra, rb)


def adaptive_alpha(s: EmitterState, p: Params) -> complex:
    """Oscillator amplitude that cancels the ground component of ``C_A|psi>``."""
    if abs(s.a) ** 2 < ALPHA_FLOOR:
        raise ZeroDivisionError(
            f"adaptive alpha diverges: ground population {abs(s.a) ** 2:.3g} below floor"
        )
    return _adaptive_alpha(complex(s.a), complex(s.b), p.mu, p.gamma)


def apply_jump(
    s: EmitterState, detector: str, alpha: complex, p: Params
) -> tuple[JumpOutcome, EmitterState]:
    """Project onto the post-click state of ``detector``.

    The outcome weight is the squared norm of the un-normalized post-state,
    i.e. the click rate, so ``weight * dt`` is the click probability.
    """
    g, e = _jump_amplitudes(
        complex(s.a), complex(s.b), _detector_index(detector), complex(alpha), p.mu, p.gamma
    )
    unnorm = EmitterState(g, e)
    if not unnorm.norm2 > 0.0:
        raise ValueError(f"detector {detector} has zero click rate in this state")
    post, weight = normalize(unnorm)
    outcome = JumpOutcome(detector, excited_population(s), excited_population(post), weight)
    return outcome, post


def no_jump_step(
    s: EmitterState, alpha: complex, p: Params, dt: float
) -> tuple[EmitterState, float]:
    """Evolve ``dt`` conditioned on no click, holding ``alpha`` fixed.

    Returns the normalized state and the no-click probability of the step.
    """
    if not dt > 0.0:
        raise ValueError(f"dt must be positive, got {dt!r}")
    a, b, survival = _no_jump(complex(s.a), complex(s.b), abs(alpha) ** 2, p.gamma, dt)
    return EmitterState(a, b), survival


def b_jump_population_map(x, mu):
    """Excited population after a B click under the adaptive oscillator.

    The click multiplies the amplitude ratio b/a by ``mu``. Vectorizes over
    numpy arrays.
    """
    x = np.asarray(x, dtype=float)
    out = mu**2 * x / (1.0 - x + mu**2 * x)
    return out if out.ndim else float(out)
