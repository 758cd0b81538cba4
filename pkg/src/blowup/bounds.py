"""Path-wise stopping-time bounds for the coupled system.

Everything here is a deterministic functional of one sampled noise path
pair: the lower bound tau_star (first time a weighted exponential
functional of the paths crosses an initial-data threshold), the upper
bounds theta_1/theta_2 (first crossing of the integral of the smaller of
two growth kernels g_{1,2}, g_{2,1} started at the anchor time r0), the
chaining tau <= (r0 + theta)(1 + 2^alpha), the growth factors whose
divergence defines tau_star, and the truncated global-existence
criterion.  The general variants drop the algebraic coupling condition
and carry the raw exponent weights instead; under the coupling condition
they reduce bitwise to the coupled forms.

Integrals with the singular weight r^{-q} are computed cell by cell
against the exact power-law antiderivative with the exponential factor
linearized inside each cell; the weight on (0, first node] is integrated
in closed form against the exponential frozen at the first node.  Path
values between grid nodes are piecewise-linear.  Crossings are refined by
linear interpolation of the cumulative integral between the bracketing
nodes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import lambertw

from .fbm import FbmPathPair
from .model import (
    DerivedConstants,
    InitialData,
    ModelParams,
    ScaledInitialData,
    derive_constants,
)
from .stable import StableProfile, default_r0, r_constant

CROSSED = "crossed"
NOT_REACHED = "not-reached-within-horizon"
DIVERGENT_AT_ORIGIN = "divergent-at-origin"
HYPOTHESIS_FAILED = "hypothesis-failed"


class MissingLambda(ValueError):
    """The bound needs a common effective drift (gamma1 == gamma2)."""


class CouplingViolated(ValueError):
    """The bound needs the algebraic coupling condition on the noise matrix."""


class UnequalBetas(ValueError):
    """theta_one applies only when beta1 == beta2."""


class EqualBetas(ValueError):
    """epsilon_zero/theta_two apply only when beta1 > beta2."""


class Nca4Violated(ValueError):
    """The epsilon_0 smallness condition fails; theta_two refuses to run."""


class DivergentAtOrigin(ValueError):
    """r^{-q} with q >= 1 is not integrable at the origin."""


@dataclass(frozen=True)
class Crossing:
    """A resolved stopping time: value (when crossed) plus its status."""

    time: float | None
    status: str
    component: int | None = None
    threshold: float | None = None

    @property
    def crossed(self) -> bool:
        return self.status in (CROSSED, DIVERGENT_AT_ORIGIN)

    def to_dict(self) -> dict:
        return {
            "time": self.time,
            "status": self.status,
            "component": self.component,
            "threshold": self.threshold,
        }


# ---------------------------------------------------------------------------
# quadrature kernels


def _power_segment(a: np.ndarray, b: np.ndarray, p: float) -> np.ndarray:
    """int_a^b r^{p-1} dr, stable for p near 0 (a, b > 0)."""
    if p == 0.0:
        return np.log(b / a)
    return a ** p * np.expm1(p * np.log(b / a)) / p


def _window(paths: FbmPathPair, t0: float, t1: float):
    """Times [t0, nodes in (t0, t1]] and path values there (linear at t0)."""
    nodes = paths.grid.nodes
    if not 0.0 <= t0 < t1 <= nodes[-1] + 1e-12:
        raise ValueError(f"window [{t0}, {t1}] outside the path horizon {nodes[-1]}")
    k0 = int(np.searchsorted(nodes, t0, side="right"))
    k1 = int(np.searchsorted(nodes, min(t1, nodes[-1]), side="right")) - 1
    if k1 < k0:
        raise ValueError("window contains no grid nodes")
    ts = np.concatenate([[t0], nodes[k0 : k1 + 1]])
    if k0 >= 1 and t0 == nodes[k0 - 1]:
        b1 = paths.b1[k0 - 1 : k1 + 1]
        b2 = paths.b2[k0 - 1 : k1 + 1]
    else:
        s1, s2 = paths.interp(t0)
        b1 = np.concatenate([[s1], paths.b1[k0 : k1 + 1]])
        b2 = np.concatenate([[s2], paths.b2[k0 : k1 + 1]])
    return ts, b1, b2


def exp_integral(
    paths: FbmPathPair,
    w1: float,
    w2: float,
    c: float,
    q: float,
    t0: float,
    t1: float,
):
    """Cumulative I(t_j) = int_{t0}^{t_j} exp(w1 B1 + w2 B2 + c r) r^{-q} dr.

    Returns (ts, cum) with ts[0] = t0 and cum[0] = 0; the remaining ts are
    the grid nodes in (t0, t1].  Requires q < 1 when t0 = 0.
    """
    if q < 0.0:
        raise ValueError("q must be nonnegative")
    if t0 == 0.0 and q >= 1.0:
        raise DivergentAtOrigin(f"r^(-{q}) is not integrable at 0")
    ts, b1, b2 = _window(paths, t0, t1)
    with np.errstate(over="ignore"):
        g = np.exp(w1 * b1 + w2 * b2 + c * ts)
    cells = np.empty(len(ts) - 1)
    a_arr, b_arr = ts[:-1], ts[1:]
    g_a, g_b = g[:-1], g[1:]
    start = 0
    if ts[0] == 0.0:
        # closed form against the exponential frozen at the first node
        cells[0] = g[1] * ts[1] ** (1.0 - q) / (1.0 - q)
        start = 1
    a, b = a_arr[start:], b_arr[start:]
    p0 = _power_segment(a, b, 1.0 - q)
    p1 = _power_segment(a, b, 2.0 - q) - a * p0
    cells[start:] = g_a[start:] * p0 + (g_b[start:] - g_a[start:]) * p1 / (b - a)
    cum = np.empty(len(ts))
    cum[0] = 0.0
    np.cumsum(cells, out=cum[1:])
    return ts, cum


def first_crossing(ts: np.ndarray, cum: np.ndarray, threshold: float,
                   component: int | None = None) -> Crossing:
    """First time the cumulative array reaches the threshold, linearly refined."""
    hit = cum >= threshold
    if not hit.any():
        return Crossing(None, NOT_REACHED, component, threshold)
    j = int(np.argmax(hit))
    if j == 0:
        return Crossing(float(ts[0]), CROSSED, component, threshold)
    lo, hi = cum[j - 1], cum[j]
    frac = 0.0 if not np.isfinite(hi) else (threshold - lo) / (hi - lo)
    t = float(ts[j - 1] + frac * (ts[j] - ts[j - 1]))
    return Crossing(t, CROSSED, component, threshold)


def _earlier(a: Crossing, b: Crossing) -> Crossing:
    if not a.crossed:
        return b
    if not b.crossed:
        return a
    return a if a.time <= b.time else b


# ---------------------------------------------------------------------------
# tau_star (lower bound)


def _tau_star_from_weights(paths, params, lam, variants):
    """Shared tau_star kernel: variants = [(w1, w2, beta, threshold), ...]."""
    horizon = paths.grid.t_end
    for idx, (_, _, beta, _) in enumerate(variants, start=1):
        if params.d * beta / params.alpha >= 1.0:
            # the component integral is infinite for every t > 0
            return Crossing(0.0, DIVERGENT_AT_ORIGIN, idx, None)
    best = Crossing(None, NOT_REACHED)
    for idx, (w1, w2, beta, thr) in enumerate(variants, start=1):
        q = params.d * beta / params.alpha
        ts, cum = exp_integral(paths, w1, w2, lam * beta, q, 0.0, horizon)
        best = _earlier(best, first_crossing(ts, cum, thr, idx))
    return best


def _scaled_thresholds(init: ScaledInitialData, params: ModelParams, p10: float):
    thr = []
    for i, beta in ((1, params.beta1), (2, params.beta2)):
        c = init.scale(i)
        thr.append(1.0 / (beta * p10 ** beta * c ** beta * init.psi_sup ** beta))
    return thr


def tau_star_scaled(
    paths: FbmPathPair,
    params: ModelParams,
    derived: DerivedConstants,
    init: ScaledInitialData,
    profile: StableProfile,
) -> Crossing:
    """Lower bound tau_star under the coupling condition and a common drift.

    First time either component integral

        int_0^t exp(rho1 B1 + rho2 B2 + lambda beta_i r) r^{-d beta_i/alpha} dr

    reaches 1/(beta_i p(1,0)^{beta_i} C_i^{beta_i} ||psi||_inf^{beta_i}).
    Returns time 0 with a divergence flag when d beta_i / alpha >= 1 (the
    integral is infinite for every positive time).
    """
    if not derived.coupling_ok:
        raise CouplingViolated("tau_star_scaled requires the coupling condition")
    if not derived.lambda_defined:
        raise MissingLambda("tau_star_scaled requires equal effective drifts")
    if not isinstance(init, ScaledInitialData):
        raise TypeError("tau_star_scaled needs scaled initial data (C1 psi, C2 psi)")
    thr1, thr2 = _scaled_thresholds(init, params, profile.p10)
    variants = [
        (derived.rho1, derived.rho2, params.beta1, thr1),
        (derived.rho1, derived.rho2, params.beta2, thr2),
    ]
    return _tau_star_from_weights(paths, params, derived.lam, variants)


def tau_star_general(
    paths: FbmPathPair,
    params: ModelParams,
    init: ScaledInitialData,
    profile: StableProfile,
    threshold_mode: str = "as-printed",
) -> Crossing:
    """Lower bound without the coupling condition: the two integrals carry
    the raw exponent weights ((1+b1)k21-k11, (1+b1)k22-k12) and
    ((1+b2)k11-k21, (1+b2)k12-k22).

    The source states the second threshold equal to the first
    (beta1, C1); ``threshold_mode="symmetric"`` selects the (beta2, C2)
    form instead.  No silent correction is applied.
    """
    if threshold_mode not in ("as-printed", "symmetric"):
        raise ValueError("threshold_mode must be 'as-printed' or 'symmetric'")
    derived = derive_constants(params)
    if not derived.lambda_defined:
        raise MissingLambda("tau_star_general requires equal effective drifts")
    if not isinstance(init, ScaledInitialData):
        raise TypeError("tau_star_general needs scaled initial data")
    b1, b2 = params.beta1, params.beta2
    k11, k12, k21, k22 = params.k11, params.k12, params.k21, params.k22
    thr1, thr2_sym = _scaled_thresholds(init, params, profile.p10)
    thr2 = thr1 if threshold_mode == "as-printed" else thr2_sym
    variants = [
        ((1.0 + b1) * k21 - k11, (1.0 + b1) * k22 - k12, b1, thr1),
        ((1.0 + b2) * k11 - k21, (1.0 + b2) * k12 - k22, b2, thr2),
    ]
    return _tau_star_from_weights(paths, params, derived.lam, variants)


# ---------------------------------------------------------------------------
# growth kernels and theta (upper bound)


def g_ij(
    paths: FbmPathPair,
    params: ModelParams,
    derived: DerivedConstants,
    i: int,
    s,
    weights: tuple[float, float] | None = None,
):
    """Growth kernel g_{i,j}(s) for component i (j is the other index):

        2^{-d(1+beta_i)/alpha} exp(k_{i,j} s + w1 B1(s) + w2 B2(s)) s^{-d beta_i/alpha}

    with (w1, w2) = (rho1, rho2) by default.  Path values between nodes
    are linearly interpolated.
    """
    s = np.asarray(s, dtype=float)
    if np.any(s <= 0.0):
        raise ValueError("g_ij requires s > 0")
    if weights is None:
        weights = (derived.rho1, derived.rho2)
    beta = params.beta(i)
    drift = derived.k12_drift if i == 1 else derived.k21_drift
    b1, b2 = paths.interp(s)
    pref = 2.0 ** (-params.d * (1.0 + beta) / params.alpha)
    with np.errstate(over="ignore"):
        return pref * np.exp(drift * s + weights[0] * b1 + weights[1] * b2) * s ** (
            -params.d * beta / params.alpha
        )


def min_g_cumulative(paths, params, derived, weights, start: float):
    """Times and cumulative trapezoid of min(g_{1,2}, g_{2,1}) from ``start``."""
    ts, b1, b2 = _window(paths, start, paths.grid.t_end)
    base = weights[0] * b1 + weights[1] * b2
    d, alpha = params.d, params.alpha
    with np.errstate(over="ignore"):
        vals = None
        for beta, drift in (
            (params.beta1, derived.k12_drift),
            (params.beta2, derived.k21_drift),
        ):
            g = (
                2.0 ** (-d * (1.0 + beta) / alpha)
                * np.exp(drift * ts + base)
                * ts ** (-d * beta / alpha)
            )
            vals = g if vals is None else np.minimum(vals, g)
    cum = np.empty(len(ts))
    cum[0] = 0.0
    np.cumsum(0.5 * (vals[1:] + vals[:-1]) * np.diff(ts), out=cum[1:])
    return ts, cum


def initial_mass(derived: DerivedConstants, r1: float, r2: float, r0: float) -> float:
    """The anchor value r1 e^{-N1 r0} + r2 e^{-N2 r0} entering every theta
    threshold."""
    return r1 * math.exp(-derived.n1 * r0) + r2 * math.exp(-derived.n2 * r0)


def theta_one_threshold(params, derived, r1, r2, r0) -> float:
    beta = params.beta1
    e0 = initial_mass(derived, r1, r2, r0)
    return 2.0 ** (1.0 + beta) / (beta * e0 ** beta)


def epsilon_zero(
    params: ModelParams,
    derived: DerivedConstants,
    r1: float,
    r2: float,
    r0: float,
    h1_at_r0: float | None = None,
) -> tuple[float, bool]:
    """The Young-inequality tuning constant epsilon_0 and whether its
    smallness condition holds (required by theta_two).

    ``h1_at_r0`` defaults to r1 e^{-N1 r0}, the initial value of the lower
    envelope of the first component.
    """
    if params.beta1 <= params.beta2:
        raise EqualBetas("epsilon_zero requires beta1 > beta2")
    b1, b2 = params.beta1, params.beta2
    d1 = derived.d1
    if h1_at_r0 is None:
        h1_at_r0 = r1 * math.exp(-derived.n1 * r0)
    e0_mass = initial_mass(derived, r1, r2, r0)
    eps = min(
        1.0,
        (h1_at_r0 / d1 ** (1.0 / (1.0 + b2))) ** (b1 - b2),
        (2.0 ** (-(1.0 + b2)) * e0_mass ** (1.0 + b2) / d1) ** ((b1 - b2) / (1.0 + b1)),
    )
    nca4_ok = (
        2.0 ** (-(1.0 + b2)) * eps * e0_mass ** (1.0 + b2)
        >= eps ** ((1.0 + b1) / (b1 - b2)) * d1
    )
    return eps, nca4_ok


def theta_two_threshold(params, derived, r1, r2, r0, eps0: float) -> float:
    b1, b2 = params.beta1, params.beta2
    e0 = initial_mass(derived, r1, r2, r0)
    bracket = eps0 / 2.0 ** (1.0 + b2) - eps0 ** ((1.0 + b1) / (b1 - b2)) * derived.d1 / e0 ** (
        1.0 + b2
    )
    if bracket <= 0.0:
        return math.inf
    return 1.0 / (b2 * e0 ** b2 * bracket)


def theta_one(
    paths: FbmPathPair,
    params: ModelParams,
    derived: DerivedConstants,
    r1: float,
    r2: float,
    r0: float,
) -> Crossing:
    """Equal-exponent upper-bound time: first t > r0 with

        int_{r0}^t min(g_{1,2}, g_{2,1}) ds >= 2^{1+beta} / (beta (r1 e^{-N1 r0} + r2 e^{-N2 r0})^beta).
    """
    if params.beta1 != params.beta2:
        raise UnequalBetas("theta_one requires beta1 == beta2")
    if not derived.coupling_ok:
        raise CouplingViolated("theta_one requires the coupling condition")
    thr = theta_one_threshold(params, derived, r1, r2, r0)
    ts, cum = min_g_cumulative(paths, params, derived, (derived.rho1, derived.rho2), r0)
    return first_crossing(ts, cum, thr)


def theta_two(
    paths: FbmPathPair,
    params: ModelParams,
    derived: DerivedConstants,
    r1: float,
    r2: float,
    r0: float,
    eps0: float | None = None,
) -> Crossing:
    """Unequal-exponent upper-bound time (beta1 > beta2), valid only under
    the epsilon_0 smallness condition."""
    if params.beta1 <= params.beta2:
        raise EqualBetas("theta_two requires beta1 > beta2")
    if not derived.coupling_ok:
        raise CouplingViolated("theta_two requires the coupling condition")
    if eps0 is None:
        eps0, ok = epsilon_zero(params, derived, r1, r2, r0)
        if not ok:
            raise Nca4Violated("epsilon_0 smallness condition fails")
    thr = theta_two_threshold(params, derived, r1, r2, r0, eps0)
    ts, cum = min_g_cumulative(paths, params, derived, (derived.rho1, derived.rho2), r0)
    return first_crossing(ts, cum, thr)


def theta_general(
    paths: FbmPathPair,
    params: ModelParams,
    r1: float,
    r2: float,
    r0: float,
) -> Crossing:
    """Upper-bound time without the coupling condition: the earlier of the
    two crossings obtained with the raw exponent weight pairs
    ((1+b1)k21-k11, (1+b1)k22-k12) and ((1+b2)k11-k21, (1+b2)k12-k22).
    Reduces bitwise to theta_one/theta_two when the coupling holds.
    """
    derived = derive_constants(params)
    b1, b2 = params.beta1, params.beta2
    k11, k12, k21, k22 = params.k11, params.k12, params.k21, params.k22
    if b1 == b2:
        thr = theta_one_threshold(params, derived, r1, r2, r0)
    else:
        eps0, ok = epsilon_zero(params, derived, r1, r2, r0)
        if not ok:
            raise Nca4Violated("epsilon_0 smallness condition fails")
        thr = theta_two_threshold(params, derived, r1, r2, r0, eps0)
    best = Crossing(None, NOT_REACHED)
    for idx, weights in enumerate(
        (
            ((1.0 + b1) * k21 - k11, (1.0 + b1) * k22 - k12),
            ((1.0 + b2) * k11 - k21, (1.0 + b2) * k12 - k22),
        ),
        start=1,
    ):
        ts, cum = min_g_cumulative(paths, params, derived, weights, r0)
        best = _earlier(best, first_crossing(ts, cum, thr, idx))
    return best


def tau_upper_from_theta(theta: float, r0: float, alpha: float) -> float:
    """Chained upper bound (r0 + theta)(1 + 2^alpha) for the blow-up time."""
    return (r0 + theta) * (1.0 + 2.0 ** alpha)


def eta_constant(params: ModelParams, derived: DerivedConstants, r0: float) -> float:
    """Smallest usable window start eta > r0 beyond which
    s^{-d beta1/alpha} e^{k_{1,2} s} > e^{2 k_{1,2} s} (k_{1,2} < 0).

    The boundary roots of (d beta1/alpha) ln s = -k_{1,2} s come from the
    two real branches of the Lambert W function; past the larger root the
    inequality holds for every s.  When b/a > 1/e there is no root and the
    inequality holds everywhere, so eta sits just above r0.
    """
    if derived.k12_drift >= 0.0:
        raise ValueError("eta is defined for k_{1,2} < 0 only")
    a = params.d * params.beta1 / params.alpha
    b = -derived.k12_drift
    floor = r0 * (1.0 + 1e-9)
    if b / a > math.exp(-1.0):
        return floor
    u = -lambertw(-b / a, k=-1).real
    return max(a * u / b, floor)


# ---------------------------------------------------------------------------
# growth factors and global existence


@dataclass
class GrowthFactors:
    """Per-component growth factors on grid nodes; +inf past divergence."""

    t_nodes: np.ndarray
    g1: np.ndarray
    g2: np.ndarray

    def divergence_index(self, i: int) -> int | None:
        arr = self.g1 if i == 1 else self.g2
        idx = np.nonzero(~np.isfinite(arr))[0]
        return int(idx[0]) if idx.size else None


def growth_factor(
    paths: FbmPathPair,
    params: ModelParams,
    derived: DerivedConstants,
    init: ScaledInitialData,
    profile: StableProfile,
    t_nodes: np.ndarray | None = None,
) -> GrowthFactors:
    """Bracket-to-the-power -1/beta_i growth factors

        G_i(t) = [1 - beta_i p(1,0)^{beta_i} ||f_i||_inf^{beta_i} I_i(t)]^{-1/beta_i}

    with I_i the tau_star integrand; nodes past the bracket's zero are
    marked infinite, and the first infinite node brackets the tau_star
    crossing of the same component.
    """
    if not derived.coupling_ok:
        raise CouplingViolated("growth factors require the coupling condition")
    if not derived.lambda_defined:
        raise MissingLambda("growth factors require equal effective drifts")
    horizon = paths.grid.t_end
    out = []
    for i, beta in ((1, params.beta1), (2, params.beta2)):
        q = params.d * beta / params.alpha
        if q >= 1.0:
            raise DivergentAtOrigin(
                f"component {i}: d beta/alpha >= 1, growth factor degenerate"
            )
        kappa = beta * (profile.p10 * init.sup_norm(i)) ** beta
        ts, cum = exp_integral(paths, derived.rho1, derived.rho2, derived.lam * beta, q,
                               0.0, horizon)
        bracket = 1.0 - kappa * cum
        with np.errstate(divide="ignore", invalid="ignore"):
            g = np.where(bracket > 0.0, bracket ** (-1.0 / beta), np.inf)
        out.append((ts, g))
    ts = out[0][0]
    factors = GrowthFactors(t_nodes=ts, g1=out[0][1], g2=out[1][1])
    if t_nodes is not None:
        g1 = np.interp(t_nodes, ts, factors.g1)
        g2 = np.interp(t_nodes, ts, factors.g2)
        return GrowthFactors(t_nodes=np.asarray(t_nodes, float), g1=g1, g2=g2)
    return factors


GLOBAL_VIOLATED = "violated"
GLOBAL_SATISFIED = "satisfied-on-horizon"
GLOBAL_INCONCLUSIVE = "inconclusive"


@dataclass
class GlobalExistenceReport:
    status: str
    scaled_integrals: tuple[float, float]  # beta_i * J_i, compared against 1
    log_slopes: tuple[float, float]
    bound_factors: tuple[float, float] | None
    t_max: float
    sigma: float

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "scaled_integrals": list(self.scaled_integrals),
            "log_slopes": list(self.log_slopes),
            "bound_factors": None if self.bound_factors is None else list(self.bound_factors),
            "t_max": self.t_max,
            "sigma": self.sigma,
        }


def global_existence_check(
    paths: FbmPathPair,
    params: ModelParams,
    derived: DerivedConstants,
    init: InitialData,
    profile: StableProfile,
    t_max: float,
    sigma: float = 0.1,
) -> GlobalExistenceReport:
    """Truncated test of the sufficient condition for a global solution:

        beta_i p(1,0)^{beta_i} ||f_i||_inf^{beta_i}
            int_0^inf exp(rho1 B1 + rho2 B2 + N_i beta_i r) r^{-d beta_i/alpha} dr < 1.

    Violated when either truncated integral already reaches 1; satisfied
    on the horizon when both integrands decay with log-slope below -sigma
    over the last decade of [0, t_max]; inconclusive otherwise.  When
    satisfied, reports the per-component amplification factors
    (1 - beta_i J_i)^{-1/beta_i} of the pointwise solution bound.
    """
    if not derived.coupling_ok:
        raise CouplingViolated("the global-existence criterion assumes the coupling condition")
    if not 0.0 < t_max <= paths.grid.t_end:
        raise ValueError("t_max must lie within the path horizon")
    scaled = []
    slopes = []
    for i, beta in ((1, params.beta1), (2, params.beta2)):
        q = params.d * beta / params.alpha
        drift = derived.drift(i) * beta
        kappa = (profile.p10 * init.sup_norm(i)) ** beta
        if q >= 1.0:
            scaled.append(math.inf)
            slopes.append(math.inf)
            continue
        ts, cum = exp_integral(paths, derived.rho1, derived.rho2, drift, q, 0.0, t_max)
        scaled.append(beta * kappa * cum[-1])
        window = ts >= t_max / 10.0
        tw = ts[window]
        b1w, b2w = paths.interp(tw)
        logphi = derived.rho1 * b1w + derived.rho2 * b2w + drift * tw - q * np.log(tw)
        slope = np.polyfit(tw, logphi, 1)[0] if tw.size >= 2 else math.inf
        slopes.append(float(slope))
    scaled_t = (scaled[0], scaled[1])
    slopes_t = (slopes[0], slopes[1])
    if scaled_t[0] >= 1.0 or scaled_t[1] >= 1.0:
        return GlobalExistenceReport(GLOBAL_VIOLATED, scaled_t, slopes_t, None, t_max, sigma)
    if slopes_t[0] <= -sigma and slopes_t[1] <= -sigma:
        factors = tuple(
            (1.0 - s) ** (-1.0 / beta)
            for s, beta in zip(scaled_t, (params.beta1, params.beta2))
        )
        return GlobalExistenceReport(GLOBAL_SATISFIED, scaled_t, slopes_t, factors, t_max, sigma)
    return GlobalExistenceReport(GLOBAL_INCONCLUSIVE, scaled_t, slopes_t, None, t_max, sigma)


# ---------------------------------------------------------------------------
# one-path driver


@dataclass
class BlowupBounds:
    """Per-path bound record: tau_star, theta, the chained upper bound, and
    the hypothesis flags that qualify them."""

    tau_star: Crossing | None
    theta: Crossing | None
    theta_kind: str | None
    tau_upper: float | None
    epsilon0: float | None
    nca4_ok: bool | None
    r0: float
    r1: float
    r2: float
    coupling_ok: bool
    lambda_defined: bool
    horizon: float

    def to_dict(self) -> dict:
        return {
            "tau_star": None if self.tau_star is None else self.tau_star.to_dict(),
            "theta": None if self.theta is None else self.theta.to_dict(),
            "theta_kind": self.theta_kind,
            "tau_upper": self.tau_upper,
            "epsilon0": self.epsilon0,
            "nca4_ok": self.nca4_ok,
            "r0": self.r0,
            "r1": self.r1,
            "r2": self.r2,
            "coupling_ok": self.coupling_ok,
            "lambda_defined": self.lambda_defined,
            "horizon": self.horizon,
        }


def r_constants(
    profile: StableProfile,
    derived: DerivedConstants,
    init: InitialData,
    r0: float,
) -> tuple[float, float]:
    """Initial-mass constants (r1, r2) for the theta thresholds."""
    out = []
    for i in (1, 2):
        fld, scale = init.component(i)
        out.append(r_constant(profile, derived.drift(i), fld.func, r0, scale=scale))
    return out[0], out[1]


def compute_bounds(
    paths: FbmPathPair,
    params: ModelParams,
    derived: DerivedConstants,
    init: InitialData,
    profile: StableProfile,
    r0: float | None = None,
    tau_threshold_mode: str = "as-printed",
) -> BlowupBounds:
    """Compute every bound whose hypotheses the configuration satisfies.

    tau_star needs scaled initial data and a common effective drift (the
    coupled form when the coupling condition holds, otherwise the general
    form).  theta uses the coupled equal/unequal-exponent forms under the
    coupling condition and the general form otherwise.
    """
    if r0 is None:
        r0 = default_r0(profile)
    r1, r2 = r_constants(profile, derived, init, r0)

    tau = None
    if isinstance(init, ScaledInitialData) and derived.lambda_defined:
        if derived.coupling_ok:
            tau = tau_star_scaled(paths, params, derived, init, profile)
        else:
            tau = tau_star_general(paths, params, init, profile, tau_threshold_mode)

    eps0 = None
    nca4_ok = None
    theta = None
    theta_kind = None
    if params.beta1 > params.beta2:
        eps0, nca4_ok = epsilon_zero(params, derived, r1, r2, r0)
    if derived.coupling_ok:
        if params.beta1 == params.beta2:
            theta = theta_one(paths, params, derived, r1, r2, r0)
            theta_kind = "equal-exponents"
        elif nca4_ok:
            theta = theta_two(paths, params, derived, r1, r2, r0, eps0)
            theta_kind = "unequal-exponents"
        else:
            theta = Crossing(None, HYPOTHESIS_FAILED)
            theta_kind = "unequal-exponents"
    else:
        if params.beta1 == params.beta2 or nca4_ok:
            theta = theta_general(paths, params, r1, r2, r0)
            theta_kind = "general"
        else:
            theta = Crossing(None, HYPOTHESIS_FAILED)
            theta_kind = "general"

    tau_upper = None
    if theta is not None and theta.status == CROSSED:
        tau_upper = tau_upper_from_theta(theta.time, r0, params.alpha)

    return BlowupBounds(
        tau_star=tau,
        theta=theta,
        theta_kind=theta_kind,
        tau_upper=tau_upper,
        epsilon0=eps0,
        nca4_ok=nca4_ok,
        r0=r0,
        r1=r1,
        r2=r2,
        coupling_ok=derived.coupling_ok,
        lambda_defined=derived.lambda_defined,
        horizon=paths.grid.t_end,
    )
