"""Model parameters, derived constants, and blow-up regime classification.

The coupled system has two components with nonlinearity exponents
beta1 >= beta2 > 0, linear drift rates gamma1, gamma2 > 0 and a 2x2 matrix
``k`` of multiplicative noise coefficients (all entries nonzero), driven by
two independent fractional Brownian motions with Hurst index 1/2 <= H < 1.

Everything here is pure arithmetic on the inputs: the coupled noise
exponents (rho1, rho2), the algebraic coupling condition that makes the
transformed system's exponentials collapse onto them, the cross-drift
constants k_{1,2} and k_{2,1}, the effective drifts after the Ito
correction at H = 1/2, and the Young-inequality constant D1 used by the
unequal-exponent upper bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.special import gamma as gamma_fn


class ParameterError(ValueError):
    """Raised when model inputs violate their domain constraints."""


Matrix2 = tuple[tuple[float, float], tuple[float, float]]

REGIME_ALMOST_SURE = "almost-sure-blowup"
REGIME_BOUNDED_PROBABILITY = "bounded-probability"
REGIME_INDETERMINATE = "indeterminate"


@dataclass(frozen=True)
class ModelParams:
    """All scalar inputs of the coupled system.

    alpha   stability index in (0, 2]; alpha = 2 is the Laplacian case
    d       spatial dimension >= 1
    H       Hurst index in [1/2, 1)
    beta1, beta2   nonlinearity exponents, beta1 >= beta2 > 0
    gamma1, gamma2 linear drift rates > 0
    k       2x2 noise coefficient matrix, every entry nonzero
    """

    alpha: float
    d: int
    H: float
    beta1: float
    beta2: float
    gamma1: float
    gamma2: float
    k: Matrix2

    def __post_init__(self):
        if not 0.0 < self.alpha <= 2.0:
            raise ParameterError(f"alpha must be in (0, 2], got {self.alpha}")
        if not (isinstance(self.d, (int, np.integer)) and self.d >= 1):
            raise ParameterError(f"d must be a positive integer, got {self.d}")
        if not 0.5 <= self.H < 1.0:
            raise ParameterError(f"H must be in [1/2, 1), got {self.H}")
        if not self.beta1 >= self.beta2 > 0.0:
            raise ParameterError(
                f"need beta1 >= beta2 > 0, got beta1={self.beta1}, beta2={self.beta2}"
            )
        if self.gamma1 <= 0.0 or self.gamma2 <= 0.0:
            raise ParameterError("gamma1 and gamma2 must be positive")
        krows = self.k
        if len(krows) != 2 or any(len(row) != 2 for row in krows):
            raise ParameterError("k must be a 2x2 matrix")
        if any(entry == 0.0 for row in krows for entry in row):
            raise ParameterError("every noise coefficient k_ij must be nonzero")
        object.__setattr__(self, "k", tuple(tuple(float(v) for v in row) for row in krows))

    @property
    def k11(self) -> float:
        return self.k[0][0]

    @property
    def k12(self) -> float:
        return self.k[0][1]

    @property
    def k21(self) -> float:
        return self.k[1][0]

    @property
    def k22(self) -> float:
        return self.k[1][1]

    def beta(self, i: int) -> float:
        return self.beta1 if i == 1 else self.beta2

    def gamma(self, i: int) -> float:
        return self.gamma1 if i == 1 else self.gamma2


def effective_drifts(params: ModelParams) -> tuple[float, float]:
    """Effective linear drifts N_i: gamma_i for H > 1/2, and the
    Ito-corrected gamma_i - (k_i1^2 + k_i2^2)/2 at H = 1/2."""
    if params.H > 0.5:
        return params.gamma1, params.gamma2
    n1 = params.gamma1 - (params.k11 ** 2 + params.k12 ** 2) / 2.0
    n2 = params.gamma2 - (params.k21 ** 2 + params.k22 ** 2) / 2.0
    return n1, n2


@dataclass(frozen=True)
class DerivedConstants:
    """Constants derived from ModelParams used by the bound formulas.

    ``lam`` is the common effective drift, populated only when the two
    effective drifts coincide exactly; operations that need it check
    ``lambda_defined`` instead of silently averaging.  ``d1`` is the
    Young-inequality constant, absent when beta1 == beta2.
    """

    rho1: float
    rho2: float
    coupling_ok: bool
    k12_drift: float
    k21_drift: float
    n1: float
    n2: float
    lam: float | None
    lambda_defined: bool
    d1: float | None

    def drift(self, i: int) -> float:
        return self.n1 if i == 1 else self.n2


def derive_constants(params: ModelParams) -> DerivedConstants:
    """Populate every derived constant used by the stopping-time theorems.

    The coupling condition compares its two defining expressions with exact
    float equality (tolerance 0): it is a modeling choice on user-supplied
    inputs, not a numerical result.
    """
    b1, b2 = params.beta1, params.beta2
    k11, k12, k21, k22 = params.k11, params.k12, params.k21, params.k22
    rho1 = (1.0 + b1) * k21 - k11
    rho2 = (1.0 + b1) * k22 - k12
    coupling_ok = (
        (1.0 + b1) * k21 - k11 == (1.0 + b2) * k11 - k21
        and (1.0 + b1) * k22 - k12 == (1.0 + b2) * k12 - k22
    )
    n1, n2 = effective_drifts(params)
    k12_drift = -n1 + (1.0 + b1) * n2
    k21_drift = -n2 + (1.0 + b2) * n1
    lambda_defined = n1 == n2
    lam = n1 if lambda_defined else None
    if b1 > b2:
        d1 = ((b1 - b2) / (1.0 + b1)) * ((1.0 + b1) / (1.0 + b2)) ** ((1.0 + b2) / (b1 - b2))
    else:
        d1 = None
    return DerivedConstants(
        rho1=rho1,
        rho2=rho2,
        coupling_ok=coupling_ok,
        k12_drift=k12_drift,
        k21_drift=k21_drift,
        n1=n1,
        n2=n2,
        lam=lam,
        lambda_defined=lambda_defined,
        d1=d1,
    )


def _nudge_exact(expr_a, expr_b, y0: float) -> float:
    """Scan y over a few ulps around y0 until expr_a(y) == expr_b(y) exactly."""
    if expr_a(y0) == expr_b(y0):
        return y0
    up = dn = y0
    for _ in range(64):
        up = float(np.nextafter(up, math.inf))
        dn = float(np.nextafter(dn, -math.inf))
        for cand in (up, dn):
            if expr_a(cand) == expr_b(cand):
                return cand
    raise ParameterError("could not realize the coupling condition in float arithmetic")


def coupling_matrix(rho1: float, rho2: float, beta1: float, beta2: float) -> Matrix2:
    """Build a noise matrix satisfying the coupling condition for the
    requested (rho1, rho2) by solving the defining 2x2 linear system.

    Closed form: k_{i,col} = rho_col * (2 + beta_i) / D with
    D = (1 + beta1)(1 + beta2) - 1.  Because the coupling condition is
    checked with exact float equality, the second row entry is nudged by a
    few ulps when rounding breaks the identity.
    """
    if rho1 == 0.0 or rho2 == 0.0:
        raise ParameterError("rho1 and rho2 must be nonzero (all k entries nonzero)")
    det = (1.0 + beta1) * (1.0 + beta2) - 1.0
    cols = []
    for rho in (rho1, rho2):
        top = rho * (2.0 + beta1) / det
        bot = rho * (2.0 + beta2) / det

        def expr_a(y, top=top):
            return (1.0 + beta1) * y - top

        def expr_b(y, top=top):
            return (1.0 + beta2) * top - y

        bot = _nudge_exact(expr_a, expr_b, bot)
        cols.append((top, bot))
    return ((cols[0][0], cols[1][0]), (cols[0][1], cols[1][1]))


@dataclass(frozen=True)
class RegimeReport:
    regime: str
    hypothesis: str
    assumptions: tuple[str, ...]


def classify_regime(params: ModelParams, derived: DerivedConstants) -> RegimeReport:
    """Classify the qualitative blow-up regime from the derived constants.

    Returns almost-sure blow-up when the positive cross-drift hypothesis
    holds (k_{1,2} > 0 with both noise exponents positive and ordered
    positive effective drifts), or in the critical-dimension case at
    H = 1/2 with vanishing effective drifts and d <= alpha/beta1.  Returns
    the bounded-probability regime when k_{1,2} < 0 (the non-explosion
    probability bounds apply).  Anything else is indeterminate.
    """
    assumptions = (
        "both noise exponents rho1, rho2 > 0 are required for every branch; "
        "the source statements leave this implicit for the k_{1,2} < 0 bounds",
    )
    rho_pos = derived.rho1 > 0.0 and derived.rho2 > 0.0
    if not rho_pos:
        return RegimeReport(
            REGIME_INDETERMINATE,
            "noise exponents rho1, rho2 not both positive",
            assumptions,
        )
    if derived.k12_drift > 0.0 and derived.n1 >= derived.n2 > 0.0:
        return RegimeReport(
            REGIME_ALMOST_SURE,
            "positive cross-drift k_{1,2} > 0 with ordered positive effective drifts",
            assumptions,
        )
    if params.H == 0.5 and derived.n1 == 0.0 and derived.n2 == 0.0:
        if params.d <= params.alpha / params.beta1:
            return RegimeReport(
                REGIME_ALMOST_SURE,
                "vanishing effective drifts at H = 1/2 in dimension d <= alpha/beta1",
                assumptions,
            )
        return RegimeReport(
            REGIME_INDETERMINATE,
            "vanishing effective drifts but d > alpha/beta1",
            assumptions,
        )
    if derived.k12_drift < 0.0:
        return RegimeReport(
            REGIME_BOUNDED_PROBABILITY,
            "negative cross-drift k_{1,2} < 0: non-explosion probability bounds apply",
            assumptions,
        )
    return RegimeReport(
        REGIME_INDETERMINATE,
        "no classification hypothesis met (k_{1,2} = 0 boundary or drift ordering fails)",
        assumptions,
    )


# ---------------------------------------------------------------------------
# Initial data


def ball_volume(d: int, radius: float) -> float:
    return math.pi ** (d / 2.0) * radius ** d / gamma_fn(d / 2.0 + 1.0)


def sphere_area(d: int) -> float:
    """Surface measure of the unit sphere in R^d (equals 2 for d = 1)."""
    return 2.0 * math.pi ** (d / 2.0) / gamma_fn(d / 2.0)


@dataclass(frozen=True)
class RadialIndicator:
    """Indicator of the centered ball of given radius, scaled by height."""

    radius: float
    height: float = 1.0
    is_radial = True

    def radial(self, r):
        r = np.asarray(r, dtype=float)
        return np.where(r <= self.radius, self.height, 0.0)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self.radial(np.sqrt(np.sum(x * x, axis=-1)))


@dataclass(frozen=True)
class RadialBump:
    """Smooth compactly supported bump h * exp(1 - 1/(1 - (r/R)^2))."""

    radius: float
    height: float = 1.0
    is_radial = True

    def radial(self, r):
        r = np.asarray(r, dtype=float)
        u2 = np.clip((r / self.radius) ** 2, 0.0, 1.0)
        with np.errstate(divide="ignore", over="ignore"):
            vals = self.height * np.exp(1.0 - 1.0 / (1.0 - u2))
        return np.where(u2 < 1.0, vals, 0.0)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self.radial(np.sqrt(np.sum(x * x, axis=-1)))


@dataclass(frozen=True)
class Field:
    """An evaluable nonnegative initial-data component with its norms."""

    func: object  # callable on points of shape (..., d); .radial(r) when is_radial
    sup: float
    l1: float
    support_radius: float
    is_radial: bool = False

    def __post_init__(self):
        if self.sup < 0.0 or self.l1 < 0.0:
            raise ParameterError("norms must be nonnegative")
        if self.sup == 0.0 or self.l1 == 0.0:
            raise ParameterError("initial data must not be identically zero")


@dataclass(frozen=True)
class ScaledInitialData:
    """Initial data of the form f1 = C1*psi, f2 = C2*psi with C1 <= C2."""

    c1: float
    c2: float
    psi: Field

    kind = "scaled"

    def __post_init__(self):
        if not 0.0 < self.c1 <= self.c2:
            raise ParameterError(f"need 0 < C1 <= C2, got C1={self.c1}, C2={self.c2}")

    @property
    def psi_sup(self) -> float:
        return self.psi.sup

    @property
    def psi_l1(self) -> float:
        return self.psi.l1

    def scale(self, i: int) -> float:
        return self.c1 if i == 1 else self.c2

    def component(self, i: int) -> tuple[Field, float]:
        return self.psi, self.scale(i)

    def sup_norm(self, i: int) -> float:
        return self.scale(i) * self.psi.sup

    def l1_norm(self, i: int) -> float:
        return self.scale(i) * self.psi.l1


@dataclass(frozen=True)
class GeneralInitialData:
    """Arbitrary nonnegative bounded initial data (f1, f2)."""

    f1: Field
    f2: Field

    kind = "general"

    def component(self, i: int) -> tuple[Field, float]:
        return (self.f1 if i == 1 else self.f2), 1.0

    def sup_norm(self, i: int) -> float:
        return self.component(i)[0].sup

    def l1_norm(self, i: int) -> float:
        return self.component(i)[0].l1


InitialData = ScaledInitialData | GeneralInitialData


def radial_field(profile, d: int) -> Field:
    """Wrap a radial profile object into a Field, computing its norms.

    The sup norm assumes the profile is maximal at the origin (true for
    the provided indicator and bump families); the L1 norm is computed by
    radial quadrature over the support.
    """
    l1, _ = quad(
        lambda r: float(profile.radial(r)) * r ** (d - 1), 0.0, profile.radius, limit=200
    )
    return Field(
        func=profile,
        sup=float(profile.radial(0.0)),
        l1=sphere_area(d) * l1,
        support_radius=profile.radius,
        is_radial=True,
    )


def scaled_initial_data(
    c1: float,
    c2: float,
    d: int,
    shape: str = "indicator",
    radius: float = 1.0,
    height: float = 1.0,
) -> ScaledInitialData:
    """Convenience builder for scaled initial data with a standard profile."""
    if shape == "indicator":
        psi = RadialIndicator(radius=radius, height=height)
    elif shape == "bump":
        psi = RadialBump(radius=radius, height=height)
    else:
        raise ParameterError(f"unknown profile shape {shape!r}")
    return ScaledInitialData(c1=c1, c2=c2, psi=radial_field(psi, d))
