"""Long/flat round-trip policy: closed forms, threshold equation, verification.

The trader either holds one pairs position Z (long stock 1, short stock 2)
or nothing.  After reducing to the price ratio y = x2/x1, the optimal rule
is a pair of thresholds 0 < k1 < k2:

  * holding Z, close it the first time y <= k1;
  * flat, open Z the first time y >= k2, then close at k1.

k1 and the coefficient c2 come from pasting the linear payoff branch onto
c2 y^delta2 at k1.  k2 is the larger root of the strictly convex threshold
function f (see `threshold_function`), and c1 follows from pasting at k2.
`verify_policy` certifies a solved policy by checking the six region-wise
variational inequalities that identify the constructed value functions
with the solution of the dynamic-programming equations.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError, NoBracket
from .gbm_core import (CharacteristicRoots, CostFactors, ValidatedParams,
                       characteristic_roots)
from .verification import (VerificationReport, apply_generator, check_grid,
                           inequality_check, make_log_grid, SmoothFitCheck)

_ROOT_RTOL = 4 * np.finfo(float).eps  # brentq minimum; well under 1e-12
_ROOT_MAXITER = 200


class Region(enum.Enum):
    """Partition of the ratio line: close region, hold region, open region."""

    GAMMA1 = "Gamma1"  # (0, k1]
    GAMMA2 = "Gamma2"  # (k1, k2)
    GAMMA3 = "Gamma3"  # [k2, inf)


@dataclass(frozen=True)
class RoundTripPolicy:
    """Solved long/flat policy.

    Invariants (established by `solve_policy`, checked in tests):
    0 < k1 < k2; c1, c2 > 0; k1 equals its closed form exactly;
    f(k2) = 0 to root tolerance with f'(k2) > 0 (larger root);
    k2 > (rho - mu1) beta_b / ((rho - mu2) beta_s).
    """

    k1: float
    k2: float
    c1: float
    c2: float
    roots: CharacteristicRoots
    costs: CostFactors
    market: ValidatedParams


def _coef_c2(roots: CharacteristicRoots, costs: CostFactors) -> float:
    # (beta_s/(1-d2))^(1-d2) * (beta_b/(-d2))^d2, in log space: the two
    # factors individually under/overflow for large |d2| while the product
    # stays representable.
    d2 = roots.delta2
    return math.exp((1.0 - d2) * math.log(costs.beta_s / (1.0 - d2))
                    + d2 * math.log(costs.beta_b / (-d2)))


def threshold_function(y, c2: float, roots: CharacteristicRoots,
                       costs: CostFactors):
    """f(y) = c2 (d1 - d2) y^d2 + beta_s (d1 - 1) y - beta_b d1.

    Strictly convex on (0, inf), diverging to +inf at both ends; its larger
    root is the open threshold k2.  Vectorized over y.
    """
    ya = np.asarray(y, dtype=float)
    if np.any(~np.isfinite(ya)) or np.any(ya <= 0.0):
        raise DomainError("threshold function defined for y > 0 only")
    d1, d2 = roots.delta1, roots.delta2
    out = (c2 * (d1 - d2) * ya ** d2
           + costs.beta_s * (d1 - 1.0) * ya - costs.beta_b * d1)
    return float(out) if np.isscalar(y) else out


def _threshold_slope(y: float, c2: float, roots: CharacteristicRoots,
                     costs: CostFactors) -> float:
    d1, d2 = roots.delta1, roots.delta2
    return c2 * d2 * (d1 - d2) * y ** (d2 - 1.0) + costs.beta_s * (d1 - 1.0)


def threshold_bracket(c2: float, roots: CharacteristicRoots,
                      costs: CostFactors) -> tuple[float, float]:
    """Bracket [y_c, y_up] guaranteed to straddle the larger root of f.

    y_c is the global minimum of f (f(y_c) < 0 whenever costs are
    admissible); at y_up = beta_b d1 / (beta_s (d1 - 1)) the linear terms
    of f cancel exactly, leaving f(y_up) = c2 (d1 - d2) y_up^d2 > 0.
    """
    d1, d2 = roots.delta1, roots.delta2
    log_yc = (math.log(costs.beta_s * (d1 - 1.0))
              - math.log(c2 * (-d2) * (d1 - d2))) / (d2 - 1.0)
    y_c = math.exp(log_yc)
    y_up = costs.beta_b * d1 / (costs.beta_s * (d1 - 1.0))
    return y_c, y_up


def solve_policy(v: ValidatedParams) -> RoundTripPolicy:
    """Solve the long/flat model for validated parameters.

    k1 and c2 are closed forms; k2 is found by bracketed root-finding on
    [y_c, y_up] (both bracket signs guaranteed, see `threshold_bracket`)
    followed by one Newton polish, so |f(k2)| lands at rounding level.
    """
    roots = characteristic_roots(v)
    costs = v.costs
    d1, d2 = roots.delta1, roots.delta2

    k1 = (costs.beta_s / costs.beta_b) * (-d2) / (1.0 - d2)
    c2 = _coef_c2(roots, costs)

    y_c, y_up = threshold_bracket(c2, roots, costs)
    f = lambda y: threshold_function(y, c2, roots, costs)
    f_lo, f_hi = f(y_c), f(y_up)
    if not (y_c < y_up and f_lo < 0.0 < f_hi):
        raise NoBracket(
            f"f has signs ({f_lo:.3e}, {f_hi:.3e}) on [{y_c:.6g}, {y_up:.6g}]")
    k2 = brentq(f, y_c, y_up, xtol=1e-300, rtol=_ROOT_RTOL,
                maxiter=_ROOT_MAXITER)
    slope = _threshold_slope(k2, c2, roots, costs)
    if slope > 0.0:  # polish on the increasing side of the convex f
        k2 -= f(k2) / slope

    c1 = (c2 * d2 * k2 ** (d2 - 1.0) + costs.beta_s) / (d1 * k2 ** (d1 - 1.0))
    return RoundTripPolicy(k1=k1, k2=k2, c1=c1, c2=c2, roots=roots,
                           costs=costs, market=v)


# ---------------------------------------------------------------------------
# Value functions.  Branch labels used throughout:
#   w1: "linear"   beta_s - beta_b y           (y < k1)
#       "power"    c2 y^d2                     (y >= k1)
#   w0: "hold"     c1 y^d1                     (y < k2)
#       "stopped"  c2 y^d2 - beta_b + beta_s y (y >= k2)
# ---------------------------------------------------------------------------

def _check_ratio(y) -> np.ndarray:
    ya = np.asarray(y, dtype=float)
    if np.any(~np.isfinite(ya)) or np.any(ya <= 0.0):
        raise DomainError("price ratio must be positive and finite")
    return ya


def _w1_branch(y: np.ndarray, policy: RoundTripPolicy, branch: str,
               derivs: bool = False):
    bs, bb = policy.costs.beta_s, policy.costs.beta_b
    d2, c2 = policy.roots.delta2, policy.c2
    if branch == "linear":
        w = bs - bb * y
        if not derivs:
            return w
        return w, np.full_like(y, -bb), np.zeros_like(y)
    w = c2 * y ** d2
    if not derivs:
        return w
    wp = c2 * d2 * y ** (d2 - 1.0)
    wpp = c2 * d2 * (d2 - 1.0) * y ** (d2 - 2.0)
    return w, wp, wpp


def _w0_branch(y: np.ndarray, policy: RoundTripPolicy, branch: str,
               derivs: bool = False):
    bs, bb = policy.costs.beta_s, policy.costs.beta_b
    d1, d2 = policy.roots.delta1, policy.roots.delta2
    c1, c2 = policy.c1, policy.c2
    if branch == "hold":
        w = c1 * y ** d1
        if not derivs:
            return w
        wp = c1 * d1 * y ** (d1 - 1.0)
        wpp = c1 * d1 * (d1 - 1.0) * y ** (d1 - 2.0)
        return w, wp, wpp
    # stopped branch shares its power term with w1 so that the identity
    # w0 = w1 - beta_b + beta_s y is exact in floating point on Gamma3
    w = c2 * y ** d2 - bb + bs * y
    if not derivs:
        return w
    wp = c2 * d2 * y ** (d2 - 1.0) + bs
    wpp = c2 * d2 * (d2 - 1.0) * y ** (d2 - 2.0)
    return w, wp, wpp


def w1(y, policy: RoundTripPolicy):
    """Value per unit of stock-1 price when holding the pairs position."""
    ya = _check_ratio(y)
    scalar = ya.ndim == 0
    ya = np.atleast_1d(ya)
    out = np.empty_like(ya)
    m = ya >= policy.k1
    out[~m] = _w1_branch(ya[~m], policy, "linear")
    out[m] = _w1_branch(ya[m], policy, "power")
    return float(out[0]) if scalar else out


def w0(y, policy: RoundTripPolicy):
    """Value per unit of stock-1 price when flat."""
    ya = _check_ratio(y)
    scalar = ya.ndim == 0
    ya = np.atleast_1d(ya)
    out = np.empty_like(ya)
    m = ya >= policy.k2
    out[~m] = _w0_branch(ya[~m], policy, "hold")
    out[m] = _w0_branch(ya[m], policy, "stopped")
    return float(out[0]) if scalar else out


def value(x1, x2, i: int, policy: RoundTripPolicy):
    """Discounted value v_i(x1, x2) = x1 w_i(x2/x1); homogeneous of degree 1."""
    x1a, x2a = np.asarray(x1, dtype=float), np.asarray(x2, dtype=float)
    if (np.any(~np.isfinite(x1a)) or np.any(~np.isfinite(x2a))
            or np.any(x1a <= 0.0) or np.any(x2a <= 0.0)):
        raise DomainError("prices must be positive and finite")
    if i not in (0, 1):
        raise DomainError(f"initial position must be 0 or 1, got {i!r}")
    wfun = w1 if i == 1 else w0
    return x1a * wfun(x2a / x1a, policy)


def classify(y: float, policy: RoundTripPolicy) -> Region:
    """Region membership with the closed/open endpoint conventions above."""
    ya = _check_ratio(y)
    if ya.ndim != 0:
        raise DomainError("classify takes a scalar ratio")
    yv = float(ya)
    if yv <= policy.k1:
        return Region.GAMMA1
    if yv < policy.k2:
        return Region.GAMMA2
    return Region.GAMMA3


def verify_policy(policy: RoundTripPolicy,
                  grid: np.ndarray | None = None) -> VerificationReport:
    """Check the six variational inequalities and both pasting conditions.

    Each inequality is evaluated on the closure of its region (threshold
    points therefore appear in both neighboring regions, once per
    one-sided branch; the pasting is C1 but not C2, so one-sided second
    derivatives legitimately differ).
    """
    g = make_log_grid() if grid is None else check_grid(grid)
    k1, k2 = policy.k1, policy.k2
    costs, mkt = policy.costs, policy.market.params
    bs, bb = costs.beta_s, costs.beta_b
    lam = policy.market.derived.lam

    def gen(y, triple):
        w, wp, wpp = triple
        return apply_generator(y, w, wp, wpp, mkt.mu1, mkt.mu2, mkt.rho, lam)

    y1 = np.unique(np.append(g[g <= k1], k1))
    y2 = np.unique(np.concatenate([g[(g >= k1) & (g <= k2)], [k1, k2]]))
    y3 = np.unique(np.append(g[g >= k2], k2))

    checks = [
        inequality_check(
            "(rho-L)w1 >= 0", "Gamma1", y1,
            gen(y1, _w1_branch(y1, policy, "linear", derivs=True))),
        inequality_check(
            "w0 - w1 + beta_b - beta_s*y >= 0", "Gamma1", y1,
            _w0_branch(y1, policy, "hold") - _w1_branch(y1, policy, "linear")
            + bb - bs * y1),
        inequality_check(
            "w1 - beta_s + beta_b*y >= 0", "Gamma2", y2,
            _w1_branch(y2, policy, "power") - bs + bb * y2),
        inequality_check(
            "w0 - w1 + beta_b - beta_s*y >= 0", "Gamma2", y2,
            _w0_branch(y2, policy, "hold") - _w1_branch(y2, policy, "power")
            + bb - bs * y2),
        inequality_check(
            "w1 - beta_s + beta_b*y >= 0", "Gamma3", y3,
            _w1_branch(y3, policy, "power") - bs + bb * y3),
        inequality_check(
            "(rho-L)w0 >= 0", "Gamma3", y3,
            gen(y3, _w0_branch(y3, policy, "stopped", derivs=True))),
    ]

    ka1 = np.atleast_1d(np.float64(k1))
    ka2 = np.atleast_1d(np.float64(k2))
    lo_w, lo_p, _ = _w1_branch(ka1, policy, "linear", derivs=True)
    hi_w, hi_p, _ = _w1_branch(ka1, policy, "power", derivs=True)
    fit_k1 = SmoothFitCheck("k1", k1, float(hi_w[0] - lo_w[0]),
                            float(hi_p[0] - lo_p[0]))
    lo_w, lo_p, _ = _w0_branch(ka2, policy, "hold", derivs=True)
    hi_w, hi_p, _ = _w0_branch(ka2, policy, "stopped", derivs=True)
    fit_k2 = SmoothFitCheck("k2", k2, float(hi_w[0] - lo_w[0]),
                            float(hi_p[0] - lo_p[0]))

    return VerificationReport(inequalities=checks,
                              smooth_fit=[fit_k1, fit_k2])
