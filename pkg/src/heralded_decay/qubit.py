"""State and parameter types shared by the detection, trajectory and
analytic modules.

Times are in units of 1/gamma and local-oscillator amplitudes in units of
sqrt(gamma) unless a non-default ``gamma`` is given.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field


@dataclass(frozen=True)
class Params:
    """Physical parameters of one run.

    Parameters
    ----------
    pi_e : float
        Initial excited-state population, in [0, 1).
    mu : float
        Beam-splitter intensity transmission, strictly inside (0, 1).
    gamma : float
        Spontaneous decay rate.
    """

    pi_e: float
    mu: float = 0.5
    gamma: float = 1.0
    pi_g: float = field(init=False)

    def __post_init__(self) -> None:
        if not 0.0 <= self.pi_e < 1.0:
            raise ValueError(f"pi_e must lie in [0, 1), got {self.pi_e!r}")
        if not 0.0 < self.mu < 1.0:
            raise ValueError(f"mu must lie in (0, 1), got {self.mu!r}")
        if not self.gamma > 0.0:
            raise ValueError(f"gamma must be positive, got {self.gamma!r}")
        object.__setattr__(self, "pi_g", 1.0 - self.pi_e)

    @property
    def ratio(self) -> float:
        """Initial excited-to-ground population ratio pi_e / pi_g."""
        return self.pi_e / self.pi_g

    @property
    def k(self) -> float:
        """Exponent mu/(1-mu) * pi_e/pi_g of the adaptive no-jump solution."""
        return self.mu / (1.0 - self.mu) * self.ratio

    def with_pi_e(self, pi_e: float) -> "Params":
        return Params(pi_e=pi_e, mu=self.mu, gamma=self.gamma)


@dataclass(frozen=True)
class EmitterState:
    """Pure state ``a|g> + b|e>``; not necessarily normalized."""

    a: complex
    b: complex

    @property
    def norm2(self) -> float:
        return abs(self.a) ** 2 + abs(self.b) ** 2


@dataclass(frozen=True)
class UnnormalizedDensity:
    """No-jump density matrix whose trace is the survival probability."""

    rho_gg: float
    rho_ee: float
    rho_ge: complex

    @property
    def rho_eg(self) -> complex:
        return complex(self.rho_ge).conjugate()

    @property
    def trace(self) -> float:
        return self.rho_gg + self.rho_ee

    @property
    def excited_fraction(self) -> float:
        """Normalized conditional excited population."""
        return self.rho_ee / self.trace

    def positivity_gap(self) -> float:
        """``rho_gg*rho_ee - |rho_ge|^2``; zero for a pure state."""
        return self.rho_gg * self.rho_ee - abs(self.rho_ge) ** 2


class Scheme(enum.IntEnum):
    COUNTING = 0
    FIXED_LO = 1
    ADAPTIVE_LO = 2


@dataclass(frozen=True)
class DetectionScheme:
    """Photodetection setup. ``alpha`` is only meaningful for FIXED_LO."""

    kind: Scheme
    alpha: complex = 0j

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", Scheme(self.kind))
        object.__setattr__(self, "alpha", complex(self.alpha))
        if self.kind != Scheme.FIXED_LO and self.alpha != 0:
            raise ValueError(f"{self.kind.name} does not take a fixed alpha")

    @classmethod
    def counting(cls) -> "DetectionScheme":
        return cls(Scheme.COUNTING)

    @classmethod
    def fixed_lo(cls, alpha: complex) -> "DetectionScheme":
        return cls(Scheme.FIXED_LO, alpha)

    @classmethod
    def adaptive(cls) -> "DetectionScheme":
        return cls(Scheme.ADAPTIVE_LO)


def from_populations(pi_e: float) -> EmitterState:
    """Real, non-negative amplitudes with excited population ``pi_e``."""
    if not 0.0 <= pi_e < 1.0:
        raise ValueError(f"pi_e must lie in [0, 1), got {pi_e!r}")
    return EmitterState(complex(math.sqrt(1.0 - pi_e)), complex(math.sqrt(pi_e)))


def excited_population(s: EmitterState) -> float:
    return abs(s.b) ** 2


def normalize(s: EmitterState) -> tuple[EmitterState, float]:
    """Return the unit-norm state and the squared norm it was divided by."""
    n2 = s.norm2
    if not n2 > 0.0:
        raise ValueError("cannot normalize a zero-norm state")
    n = math.sqrt(n2)
    return EmitterState(s.a / n, s.b / n), n2
