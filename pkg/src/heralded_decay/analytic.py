"""Closed-form no-jump dynamics and event-sequence probabilities for the
adaptive oscillator scheme.

All time integrals are taken in the variable u = exp(-gamma t), which maps
[0, inf) onto (0, 1] and turns every integrand into a smooth function on a
finite interval. The no-jump density of an epoch that starts from a
normalized state with excited/ground ratio r is

    rho_gg = pi_g exp(-k (1 - u)),   rho_ee = pi_e u exp(-k (1 - u)),

with k = mu/(1-mu) r. A B click multiplies the ratio by mu**2, so every
multi-click probability reduces to nested one-dimensional integrals over
the click times.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import integrate, optimize

from .detection import b_jump_population_map
from .qubit import Params, UnnormalizedDensity

QUAD_EPSABS = 1e-12
QUAD_EPSREL = 1e-10

SEQUENCES = ("0", "A", "B0", "BA", "BB0", "BBA")


def _phi(k):
    """(k - 1 + exp(-k)) / k**2 = int_0^1 u exp(-k (1 - u)) du, stable near 0."""
    k = np.asarray(k, dtype=float)
    small = np.abs(k) < 1e-2
    ks = np.where(small, 1.0, k)
    direct = (ks + np.expm1(-ks)) / ks**2
    series = 0.5 - k / 6 + k**2 / 24 - k**3 / 120 + k**4 / 720
    out = np.where(small, series, direct)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class ClosedFormConstants:
    k: float
    a0: float
    a1: float
    a2: float


def closed_form_constants(p: Params) -> ClosedFormConstants:
    r, mu = p.ratio, p.mu
    k = mu / (1 - mu) * r
    a0 = mu**5 / (1 - mu) * p.pi_e**3 / p.pi_g**2 * math.exp(-k)
    return ClosedFormConstants(k, a0, (mu + mu**2) * r, mu**3 / (1 - mu) * r)


# -- no-jump evolution --------------------------------------------------------


def nojump_density(t: float, p: Params) -> UnnormalizedDensity:
    """Un-normalized density after time ``t`` without any click."""
    u = math.exp(-p.gamma * t)
    f = math.exp(-p.k * (1.0 - u))
    coh = math.sqrt(p.pi_e * p.pi_g) * math.exp(-0.5 * p.gamma * t) * f
    return UnnormalizedDensity(p.pi_g * f, p.pi_e * u * f, complex(coh))


def nojump_density_ode(t_eval, p: Params) -> np.ndarray:
    """Reference solution of the no-jump equation of motion by ODE integration.

    Returns an array of shape (len(t_eval), 3) holding rho_gg, rho_ee, rho_ge.
    """
    g, mu = p.gamma, p.mu

    def rhs(_, y):
        gg, ee, ge = y
        alpha2 = mu * g / (1 - mu) * ee / gg
        return [-alpha2 * gg, -(alpha2 + g) * ee, -(alpha2 + 0.5 * g) * ge]

    t_eval = np.atleast_1d(np.asarray(t_eval, dtype=float))
    y0 = [p.pi_g, p.pi_e, math.sqrt(p.pi_e * p.pi_g)]
    sol = integrate.solve_ivp(
        rhs, (0.0, float(t_eval.max())), y0, method="DOP853",
        t_eval=t_eval, rtol=1e-12, atol=1e-300,
    )
    if not sol.success:
        raise RuntimeError(sol.message)
    return sol.y.T


def nojump_ode_residual(t: float, p: Params) -> float:
    """|rho_gg'' - (rho_gg'^2 / rho_gg - gamma rho_gg')| on the closed form."""
    g = p.gamma
    rho = nojump_density(t, p).rho_gg
    kgu = p.k * g * math.exp(-g * t)
    d1 = -kgu * rho
    d2 = rho * (kgu**2 + g * kgu)
    return abs(d2 - (d1**2 / rho - g * d1))


def counting_conditional_population(t, p: Params):
    """Excited population of a photon-counting trajectory with no click yet."""
    decay = np.exp(-p.gamma * np.asarray(t, dtype=float))
    out = p.pi_e * decay / (p.pi_g + p.pi_e * decay)
    return out if out.ndim else float(out)


def p0_of_t(t, p: Params):
    """Probability of no click in [0, t]."""
    u = np.exp(-p.gamma * np.asarray(t, dtype=float))
    out = (p.pi_g + p.pi_e * u) * np.exp(-p.k * (1.0 - u))
    return out if out.ndim else float(out)


def p0(p: Params) -> float:
    """Probability that no click ever occurs."""
    return p.pi_g * math.exp(-p.k)


# -- single A click -----------------------------------------------------------


def _a_density_u(u, p: Params):
    # mu gamma rho_ee^2 / rho_gg, times dt/du = 1/(gamma u)
    return p.mu * p.pi_e**2 / p.pi_g * u * np.exp(-p.k * (1.0 - u))


def _quad_u(f, k, args=()):
    # the weight exp(-k(1-u)) piles up within ~1/k of u = 1; tell quad where
    pts = [1.0 - j / k for j in (1.0, 8.0, 40.0) if k > j]
    val, _ = integrate.quad(f, 0.0, 1.0, args=args, epsabs=QUAD_EPSABS,
                            epsrel=QUAD_EPSREL, points=pts or None, limit=200)
    return val


def p_a_quad(p: Params) -> float:
    """Probability that the first click is an A click, by quadrature."""
    if p.pi_e == 0.0:
        return 0.0
    return _quad_u(_a_density_u, p.k, (p,))


def p_a_closed(p: Params) -> float:
    return p.mu * p.pi_e**2 / p.pi_g * _phi(p.k)


def p_a_closed_vec(pi_e, mu):
    """Vectorized closed form of the first-click-A probability."""
    pi_e = np.asarray(pi_e, dtype=float)
    mu = np.asarray(mu, dtype=float)
    pi_g = 1.0 - pi_e
    k = mu / (1.0 - mu) * pi_e / pi_g
    return mu * pi_e**2 / pi_g * _phi(k)


def p_a_printed(p: Params) -> float:
    """Appendix expression for P_A taken literally, with A = exp(k)."""
    big_a = math.exp(p.k)
    with np.errstate(over="ignore", invalid="ignore"):
        ea = np.exp(big_a)
        return float(p.mu * p.pi_e**2 / p.pi_g * (ea / big_a**2 + (1.0 - ea) / big_a**3))


def p_a(p: Params, check: bool = True) -> float:
    """First-click-A probability.

    Evaluated by quadrature; with ``check`` the closed form is evaluated as
    well and the two must agree to 1e-9.
    """
    val = p_a_quad(p)
    if check:
        closed = p_a_closed(p)
        if abs(val - closed) > 1e-9:
            raise ArithmeticError(f"quadrature {val!r} and closed form {closed!r} disagree")
    return val


# -- B clicks and event sequences ---------------------------------------------


def _b_density_u(u, pi_e: float, mu: float):
    """B-click density per unit u for an epoch starting at population pi_e."""
    r = pi_e / (1.0 - pi_e)
    k = mu / (1.0 - mu) * r
    return pi_e / (1.0 - mu) * np.exp(-k * (1.0 - u)) * (1.0 + mu**2 * r * u)


def _post_b_pi_e(u, pi_e: float, mu: float):
    r2 = mu**2 * pi_e / (1.0 - pi_e) * u
    return r2 / (1.0 + r2)


def post_b_rebase(t_b: float, p: Params) -> Params:
    """Initial condition of the epoch that follows a B click at ``t_b``."""
    rho = nojump_density(t_b, p)
    return p.with_pi_e(float(b_jump_population_map(rho.excited_fraction, p.mu)))


def _seq_prob(seq: str, pi_e: float, mu: float, gamma: float) -> float:
    if pi_e == 0.0:
        return 1.0 if seq == "0" else 0.0
    p = Params(pi_e, mu, gamma)
    if seq == "0":
        return p0(p)
    if seq == "A":
        return p_a_closed(p)
    rest = seq[1:]

    def integrand(u):
        return _b_density_u(u, pi_e, mu) * _seq_prob(rest, _post_b_pi_e(u, pi_e, mu), mu, gamma)

    return _quad_u(integrand, p.k)


def p_sequence(seq: str, p: Params) -> float:
    """Probability of the click sequence ``seq``: B^m 0 or B^n A, m, n <= 2.

    B clicks are integrated over their times with the no-jump evolution
    restarted from the post-click state; the innermost A factor uses the
    closed form for the first-click-A probability of the last epoch.
    """
    if seq not in SEQUENCES:
        raise ValueError(f"unsupported sequence {seq!r}; expected one of {SEQUENCES}")
    if seq == "A":
        return p_a(p)
    return _seq_prob(seq, p.pi_e, p.mu, p.gamma)


def p_b0_closed(p: Params) -> float:
    c = closed_form_constants(p)
    if p.pi_e == 0.0:
        return 0.0
    return p.pi_e * math.exp(-c.k) * math.expm1(c.a1) / ((1 - p.mu) * c.a1)


def p_ba_closed(p: Params) -> float:
    """Closed form of P_BA from the ordered double integral over click times."""
    if p.pi_e == 0.0:
        return 0.0
    c = closed_form_constants(p)
    mu = p.mu
    pre = mu**5 / (1 - mu) * p.pi_e**3 / p.pi_g**2 / c.a1
    return pre * (_phi(c.a2) - _phi(c.k))


def p_ba_printed(p: Params) -> float:
    """Appendix closed form of P_BA taken literally."""
    c = closed_form_constants(p)
    a12 = c.a1 + c.a2
    with np.errstate(over="ignore", invalid="ignore"):
        e2, e12 = np.exp(c.a2), np.exp(a12)
        first = e2 * ((1 - e2) / c.a2**2 + e2 / c.a2)
        second = (1 - e12) / a12**2 + e12 / a12
        return float(c.a0 / c.a1 * (first - second))


def p_ba_dblquad(p: Params) -> float:
    """P_BA as a two-dimensional integral over (t_B, t_A), t_B < t_A."""
    if p.pi_e == 0.0:
        return 0.0
    mu = p.mu

    def integrand(ub, ua):
        # ub: B time, ua: A time, both as u = exp(-gamma t); ua < ub
        pe2 = _post_b_pi_e(ub, p.pi_e, mu)
        k2 = mu / (1 - mu) * pe2 / (1 - pe2)
        v = ua / ub
        a_rate = mu * pe2**2 / (1 - pe2) * v * v * math.exp(-k2 * (1 - v))
        return _b_density_u(ub, p.pi_e, mu) * a_rate / ua

    val, _ = integrate.dblquad(integrand, 0.0, 1.0, lambda ua: ua, 1.0,
                               epsabs=1e-11, epsrel=1e-9)
    return val


@dataclass
class AppendixReport:
    """Literal appendix closed forms checked against quadrature."""

    pi_e: float
    mu: float
    p_a_quadrature: float
    p_a_rederived: float
    p_a_printed: float
    p_ba_nested: float
    p_ba_dblquad: float
    p_ba_rederived: float
    p_ba_printed: float

    @property
    def p_a_printed_deviation(self) -> float:
        return self.p_a_printed - self.p_a_quadrature

    @property
    def p_ba_printed_deviation(self) -> float:
        return self.p_ba_printed - self.p_ba_dblquad


def appendix_report(p: Params) -> AppendixReport:
    return AppendixReport(
        p.pi_e, p.mu,
        p_a_quad(p), p_a_closed(p), p_a_printed(p),
        p_sequence("BA", p), p_ba_dblquad(p), p_ba_closed(p), p_ba_printed(p),
    )


# -- tables -------------------------------------------------------------------


@dataclass
class ProbabilityTable:
    """Sequence probabilities at one (pi_e, mu).

    ``p_n[N]`` accumulates B^n A for n <= N and ``q_m[M]`` is one minus the
    accumulated B^m 0 for m <= M. ``p_hom`` is only filled by a Monte Carlo
    estimate of the strong-oscillator excursion probability.
    """

    pi_e: float
    mu: float
    p0: float
    p_a: float
    p_ba: float
    p_bba: float
    p_b0: float
    p_bb0: float
    p_n: tuple = ()
    q_m: tuple = ()
    mc: Optional[object] = None
    p_hom: Optional[float] = None
    extra: dict = field(default_factory=dict)

    def check(self, tol: float = 1e-10) -> None:
        entries = [self.p0, self.p_a, self.p_ba, self.p_bba, self.p_b0, self.p_bb0,
                   *self.p_n, *self.q_m]
        if any(not -tol <= v <= 1 + tol for v in entries):
            raise ValueError("probability outside [0, 1]")
        if any(b < a - tol for a, b in zip(self.p_n, self.p_n[1:])):
            raise ValueError("P_N must be nondecreasing in N")
        if any(b > a + tol for a, b in zip(self.q_m, self.q_m[1:])):
            raise ValueError("Q_M must be nonincreasing in M")
        if self.p_n and self.q_m and max(self.p_n) > min(self.q_m) + tol:
            raise ValueError("P_N exceeds Q_M")
        if self.p_n and max(self.p_n) > self.pi_e + tol:
            raise ValueError("P_N exceeds pi_e")

    @property
    def accounted(self) -> float:
        return self.p0 + self.p_a + self.p_ba + self.p_bba + self.p_b0 + self.p_bb0


def accumulate(p: Params, n_max: int = 2, m_max: int = 2) -> ProbabilityTable:
    """Sequence probabilities with the cumulative P_N and Q_M (N, M <= 2)."""
    if not (0 <= n_max <= 2 and 0 <= m_max <= 2):
        raise ValueError("only sequences with at most two B clicks are supported")
    vals = {s: p_sequence(s, p) for s in SEQUENCES}
    success = np.cumsum([vals["A"], vals["BA"], vals["BBA"]])[: n_max + 1]
    silent = 1.0 - np.cumsum([vals["0"], vals["B0"], vals["BB0"]])[: m_max + 1]
    table = ProbabilityTable(
        p.pi_e, p.mu, vals["0"], vals["A"], vals["BA"], vals["BBA"], vals["B0"], vals["BB0"],
        tuple(float(v) for v in success), tuple(float(v) for v in silent),
    )
    table.check()
    return table


# -- beam-splitter optimization -----------------------------------------------

MU_BOUNDS = (1e-4, 1.0 - 1e-4)


@dataclass(frozen=True)
class MuOptimum:
    pi_e: float
    mu_star: float
    p_a_star: float
    mu_grid: float
    p_a_grid: float
    grid_step: float


def optimize_mu(pi_e: float, n_grid: int = 10_000) -> MuOptimum:
    """Transmission that maximizes the first-click-A probability.

    Bounded Brent maximization, cross-checked by a uniform grid scan.
    """
    if not 0.0 < pi_e < 1.0:
        raise ValueError(f"pi_e must lie in (0, 1), got {pi_e!r}")
    res = optimize.minimize_scalar(
        lambda m: -p_a_closed_vec(pi_e, m), bounds=MU_BOUNDS, method="bounded",
        options={"xatol": 1e-9},
    )
    grid = np.linspace(*MU_BOUNDS, n_grid)
    vals = p_a_closed_vec(pi_e, grid)
    i = int(np.argmax(vals))
    return MuOptimum(pi_e, float(res.x), float(-res.fun), float(grid[i]), float(vals[i]),
                     float(grid[1] - grid[0]))
