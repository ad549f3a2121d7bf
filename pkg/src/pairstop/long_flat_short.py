"""Long/flat/short policy: closed-form thresholds, trade signal, verification.

With shorting allowed, four candidate thresholds (flat->short, long->flat,
short->flat, flat->long) collapse pairwise: the smooth-fit system for the
middle value function is solved exactly by the corner point where the
coefficients of the flat-state value equal those of the one-sided values
(b1 = c1, b2 = c2).  The result is a two-threshold rule

    k1_star = (-d2/(1-d2)) (beta_s/beta_b)     (sell Z at or below)
    k2_star = (d1/(d1-1)) (beta_b/beta_s)      (buy Z at or above)

with k1_star identical to the long/flat close threshold.  The collapsed
smooth-fit system survives as `system_residuals`, the independent check
that (k1_star, k2_star) actually solves it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .gbm_core import (CharacteristicRoots, CostFactors, ValidatedParams,
                       characteristic_roots)
from .long_flat import _coef_c2
from .verification import (SmoothFitCheck, VerificationReport,
                           apply_generator, check_grid, inequality_check,
                           make_log_grid)


@dataclass(frozen=True)
class ThreeRegimePolicy:
    """Solved long/flat/short policy.

    b1 == c1 and b2 == c2 hold exactly (the collapse); they are carried
    separately because the flat-state value function is conceptually
    b1 y^d1 + b2 y^d2 on the hold region.
    """

    k1_star: float
    k2_star: float
    c1: float
    c2: float
    b1: float
    b2: float
    roots: CharacteristicRoots
    costs: CostFactors
    market: ValidatedParams


@dataclass(frozen=True)
class TradeSignal:
    """One-share trade decision: -1 sell Z, 0 hold, +1 buy Z."""

    action: int
    position: int


def solve_policy_three(v: ValidatedParams) -> ThreeRegimePolicy:
    """Closed-form solve; no root-finding is needed in this model."""
    roots = characteristic_roots(v)
    costs = v.costs
    d1, d2 = roots.delta1, roots.delta2
    k1_star = (-d2 / (1.0 - d2)) * (costs.beta_s / costs.beta_b)
    k2_star = (d1 / (d1 - 1.0)) * (costs.beta_b / costs.beta_s)
    c1 = math.exp(d1 * math.log(costs.beta_s / d1)
                  + (d1 - 1.0) * math.log((d1 - 1.0) / costs.beta_b))
    c2 = _coef_c2(roots, costs)
    return ThreeRegimePolicy(k1_star=k1_star, k2_star=k2_star,
                             c1=c1, c2=c2, b1=c1, b2=c2,
                             roots=roots, costs=costs, market=v)


def system_residuals(k2_candidate: float, k3_candidate: float,
                     v: ValidatedParams) -> tuple[float, float]:
    """Residuals of the two smooth-fit equations at candidate thresholds.

    The candidates play the roles of the flat->short and short->flat...
    strictly, of the interior pasting points of the flat-state value; the
    solved policy's (k1_star, k2_star) zeroes both residuals.  Depends on
    the cost factors only through their ratio.
    """
    r, s = float(k2_candidate), float(k3_candidate)
    if not (math.isfinite(r) and math.isfinite(s)) or r <= 0.0 or s <= 0.0:
        raise DomainError("threshold candidates must be positive and finite")
    roots = characteristic_roots(v)
    costs = v.costs
    d1, d2 = roots.delta1, roots.delta2
    gamma = costs.beta_b / costs.beta_s
    k1 = (-d2 / (1.0 - d2)) / gamma
    k4 = (d1 / (d1 - 1.0)) * gamma
    span = d1 - d2
    f1 = (((1.0 - d2) * s ** (1.0 - d1) + d2 * r ** (-d1)) / span
          + ((d2 * s ** (-d1) + (1.0 - d2) * r ** (1.0 - d1)) / span) * gamma
          - k4 ** (1.0 - d1) / d1)
    f2 = (((1.0 - d1) * s ** (1.0 - d2) + d1 * r ** (-d2)) / span
          + ((d1 * s ** (-d2) + (1.0 - d1) * r ** (1.0 - d2)) / span) * gamma
          - gamma * k1 ** (1.0 - d2) / (-d2))
    return f1, f2


# ---------------------------------------------------------------------------
# Value functions.  All three extend continuously to y = 0:
# w1(0) = beta_s, w_minus1(0) = 0, w0(0) = beta_s.
# ---------------------------------------------------------------------------

def _check_ratio_nonneg(y) -> np.ndarray:
    ya = np.asarray(y, dtype=float)
    if np.any(~np.isfinite(ya)) or np.any(ya < 0.0):
        raise DomainError("price ratio must be nonnegative and finite")
    return ya


def _w1_branch(y, policy, branch, derivs=False):
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
    return (w, c2 * d2 * y ** (d2 - 1.0),
            c2 * d2 * (d2 - 1.0) * y ** (d2 - 2.0))


def _wm1_branch(y, policy, branch, derivs=False):
    bs, bb = policy.costs.beta_s, policy.costs.beta_b
    d1, c1 = policy.roots.delta1, policy.c1
    if branch == "linear":
        w = bs * y - bb
        if not derivs:
            return w
        return w, np.full_like(y, bs), np.zeros_like(y)
    w = c1 * y ** d1
    if not derivs:
        return w
    return (w, c1 * d1 * y ** (d1 - 1.0),
            c1 * d1 * (d1 - 1.0) * y ** (d1 - 2.0))


def _piecewise(y, policy, branch_fn, cut, low, high):
    scalar = y.ndim == 0
    ya = np.atleast_1d(y)
    out = np.empty_like(ya)
    m = ya >= cut
    out[~m] = branch_fn(ya[~m], policy, low)
    out[m] = branch_fn(ya[m], policy, high)
    return float(out[0]) if scalar else out


def w1_three(y, policy: ThreeRegimePolicy):
    """Value per unit of stock-1 price when long one share of Z."""
    ya = _check_ratio_nonneg(y)
    return _piecewise(ya, policy, _w1_branch, policy.k1_star,
                      "linear", "power")


def w_minus1(y, policy: ThreeRegimePolicy):
    """Value per unit of stock-1 price when short one share of Z."""
    ya = _check_ratio_nonneg(y)
    return _piecewise(ya, policy, _wm1_branch, policy.k2_star,
                      "power", "linear")


def w0_three(y, policy: ThreeRegimePolicy):
    """Value per unit of stock-1 price when flat.

    Computed as w1_three + w_minus1: the two branch boundaries are exactly
    the pasting points of the flat-state value, so the additivity is an
    identity branch by branch, not merely on the hold region.
    """
    ya = _check_ratio_nonneg(y)
    return w1_three(ya, policy) + w_minus1(ya, policy)


def value_three(x1, x2, i: int, policy: ThreeRegimePolicy):
    """Discounted value v_i(x1, x2) = x1 w_i(x2/x1), i in {-1, 0, 1}."""
    x1a, x2a = np.asarray(x1, dtype=float), np.asarray(x2, dtype=float)
    if (np.any(~np.isfinite(x1a)) or np.any(~np.isfinite(x2a))
            or np.any(x1a <= 0.0) or np.any(x2a <= 0.0)):
        raise DomainError("prices must be positive and finite")
    if i == 1:
        return x1a * w1_three(x2a / x1a, policy)
    if i == -1:
        return x1a * w_minus1(x2a / x1a, policy)
    if i == 0:
        return x1a * w0_three(x2a / x1a, policy)
    raise DomainError(f"initial position must be -1, 0 or 1, got {i!r}")


def signal(x1: float, x2: float, i: int, policy: ThreeRegimePolicy) -> TradeSignal:
    """Trade decision at prices (x1, x2) holding position i.

    Sell one share of Z when flat or long and x2 <= x1*k1_star; buy one
    share when flat or short and x2 >= x1*k2_star; otherwise hold.
    """
    if not (math.isfinite(x1) and math.isfinite(x2)) or x1 <= 0 or x2 <= 0:
        raise DomainError("prices must be positive and finite")
    if i not in (-1, 0, 1):
        raise DomainError(f"position must be -1, 0 or 1, got {i!r}")
    if i in (0, 1) and x2 <= x1 * policy.k1_star:
        return TradeSignal(action=-1, position=i)
    if i in (-1, 0) and x2 >= x1 * policy.k2_star:
        return TradeSignal(action=1, position=i)
    return TradeSignal(action=0, position=i)


def verify_policy_three(policy: ThreeRegimePolicy,
                        grid: np.ndarray | None = None) -> VerificationReport:
    """Check the seven variational inequalities and all pasting conditions.

    Region conventions mirror the long/flat model: Gamma1 = (0, k1_star],
    Gamma2 = (k1_star, k2_star), Gamma3 = [k2_star, inf).  Inequalities on
    composite regions are evaluated segment-wise with the segment's own
    branches (closures included, so thresholds are checked on both sides).
    """
    g = make_log_grid() if grid is None else check_grid(grid)
    k1, k2 = policy.k1_star, policy.k2_star
    mkt = policy.market.params
    bs, bb = policy.costs.beta_s, policy.costs.beta_b
    lam = policy.market.derived.lam

    y1 = np.unique(np.append(g[g <= k1], k1))
    y2 = np.unique(np.concatenate([g[(g >= k1) & (g <= k2)], [k1, k2]]))
    y3 = np.unique(np.append(g[g >= k2], k2))
    y12 = np.unique(np.concatenate([y1, y2]))
    y23 = np.unique(np.concatenate([y2, y3]))

    def gen(y, triple):
        w, wp, wpp = triple
        return apply_generator(y, w, wp, wpp, mkt.mu1, mkt.mu2, mkt.rho, lam)

    # Branch selectors over composite regions (boundary points go to the
    # lower segment; the closure overlap already covers the other side).
    def w1_on(y):
        return np.where(y >= k1, _w1_branch(y, policy, "power"),
                        _w1_branch(y, policy, "linear"))

    def wm1_on(y):
        return np.where(y >= k2, _wm1_branch(y, policy, "linear"),
                        _wm1_branch(y, policy, "power"))

    def w0_on(y):
        return w1_on(y) + wm1_on(y)

    def gen_w0(y):
        # (rho-L)w0 piecewise: sum of the segment's branch triples
        out = np.empty_like(y)
        for mask, b1, bm in ((y <= k1, "linear", "power"),
                             ((y > k1) & (y < k2), "power", "power"),
                             (y >= k2, "power", "linear")):
            if not np.any(mask):
                continue
            ys = y[mask]
            t1 = _w1_branch(ys, policy, b1, derivs=True)
            tm = _wm1_branch(ys, policy, bm, derivs=True)
            out[mask] = gen(ys, tuple(a + b for a, b in zip(t1, tm)))
        return out

    checks = [
        inequality_check(
            "(rho-L)w1 >= 0", "Gamma1", y1,
            gen(y1, _w1_branch(y1, policy, "linear", derivs=True))),
        inequality_check(
            "w1 - beta_s + beta_b*y >= 0", "G2+G3", y23,
            _w1_branch(y23, policy, "power") - bs + bb * y23),
        inequality_check(
            "w-1 + beta_b - beta_s*y >= 0", "G1+G2", y12,
            _wm1_branch(y12, policy, "power") + bb - bs * y12),
        inequality_check(
            "(rho-L)w-1 >= 0", "Gamma3", y3,
            gen(y3, _wm1_branch(y3, policy, "linear", derivs=True))),
        inequality_check(
            "(rho-L)w0 >= 0", "G1+G3",
            np.concatenate([y1, y3]),
            np.concatenate([gen_w0(y1), gen_w0(y3)])),
        inequality_check(
            "w0 - w1 + beta_b - beta_s*y >= 0", "G1+G2", y12,
            w0_on(y12) - w1_on(y12) + bb - bs * y12),
        inequality_check(
            "w0 - w-1 - beta_s + beta_b*y >= 0", "G2+G3", y23,
            w0_on(y23) - wm1_on(y23) - bs + bb * y23),
    ]

    fits = []
    ka1 = np.atleast_1d(np.float64(k1))
    ka2 = np.atleast_1d(np.float64(k2))
    for label, loc, fn, lo, hi in (
            ("w1@k1*", ka1, _w1_branch, "linear", "power"),
            ("w-1@k2*", ka2, _wm1_branch, "power", "linear")):
        lw, lp, _ = fn(loc, policy, lo, derivs=True)
        hw, hp, _ = fn(loc, policy, hi, derivs=True)
        fits.append(SmoothFitCheck(label, float(loc[0]),
                                   float(hw[0] - lw[0]), float(hp[0] - lp[0])))
    # w0 pastes wherever its summands do; the gaps coincide with w1's at
    # k1_star and w_minus1's at k2_star, reported once more for the record.
    fits.append(SmoothFitCheck("w0@k1*", k1, fits[0].value_gap,
                               fits[0].slope_gap))
    fits.append(SmoothFitCheck("w0@k2*", k2, fits[1].value_gap,
                               fits[1].slope_gap))

    return VerificationReport(inequalities=checks, smooth_fit=fits)
