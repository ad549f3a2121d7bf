"""Model parameters, derived diffusion quantities, and characteristic roots.

Two stocks follow correlated geometric Brownian motions

    dX_i = X_i (mu_i dt + sum_j sigma_ij dW_j),    i = 1, 2.

All trading policies in this package depend on the market only through the
effective covariance a = sigma sigma^T, the log-ratio diffusion coefficient
lambda = (a11 - 2 a12 + a22)/2, and the two roots delta1 > 1 > 0 > delta2
of the characteristic quadratic

    delta^2 - (1 + (mu1 - mu2)/lambda) delta - (rho - mu1)/lambda = 0.

Standing assumptions: rho > mu1, rho > mu2 (so the roots are real and
straddle [0, 1] as above) and lambda > 0 (the ratio X2/X1 actually
diffuses).  `validate_params` enforces them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BadCost, DegenerateDiffusion, DiscountTooLow, DomainError

# Below this value of lambda the Euler-equation reduction is numerically
# meaningless and the input is rejected.
LAMBDA_TOL = 1e-12


@dataclass(frozen=True)
class MarketParams:
    """Full parameterization of the two-stock market.

    mu1, mu2    -- drifts (per year)
    sigma_ij    -- volatility matrix entries (per sqrt(year))
    rho         -- discount rate (per year)
    K           -- proportional transaction-cost rate (dimensionless)
    """

    mu1: float
    mu2: float
    sigma11: float
    sigma12: float
    sigma21: float
    sigma22: float
    rho: float
    K: float

    @property
    def sigma(self) -> np.ndarray:
        return np.array([[self.sigma11, self.sigma12],
                         [self.sigma21, self.sigma22]])

    @classmethod
    def from_sigma(cls, mu1: float, mu2: float, sigma: np.ndarray,
                   rho: float, K: float) -> "MarketParams":
        s = np.asarray(sigma, dtype=float)
        if s.shape != (2, 2):
            raise DomainError("sigma must be a 2x2 matrix")
        return cls(mu1, mu2, s[0, 0], s[0, 1], s[1, 0], s[1, 1], rho, K)


@dataclass(frozen=True)
class CostFactors:
    """Per-unit proceeds and cost factors encoding transaction costs.

    beta_s = 1 - K is the seller's net proceeds per unit of price,
    beta_b = 1 + K the buyer's gross cost, and beta = beta_b/beta_s >= 1
    (strictly greater exactly when K > 0).
    """

    beta_s: float
    beta_b: float
    beta: float


@dataclass(frozen=True)
class DiffusionDerived:
    """Effective covariance entries and the log-ratio diffusion coefficient."""

    a11: float
    a12: float
    a22: float
    lam: float


@dataclass(frozen=True)
class CharacteristicRoots:
    """Roots of the characteristic quadratic: delta1 > 1, delta2 < 0."""

    delta1: float
    delta2: float


@dataclass(frozen=True)
class ValidatedParams:
    """Market parameters that passed validation, with derived quantities."""

    params: MarketParams
    costs: CostFactors
    derived: DiffusionDerived

    @property
    def sigma_is_symmetric(self) -> bool:
        # Asymmetric matrices are accepted; this flag feeds diagnostics only.
        return self.params.sigma12 == self.params.sigma21


def effective_covariance(p: MarketParams) -> DiffusionDerived:
    """Entries of a = sigma sigma^T and lambda = (a11 - 2 a12 + a22)/2.

    Pure arithmetic; performs no validation.  lambda computed this way
    equals the sum-of-squares form
    ((sigma11-sigma21)^2 + (sigma12-sigma22)^2)/2 up to rounding.
    """
    a11 = p.sigma11 ** 2 + p.sigma12 ** 2
    a12 = p.sigma11 * p.sigma21 + p.sigma12 * p.sigma22
    a22 = p.sigma21 ** 2 + p.sigma22 ** 2
    # The difference-of-rows form is exact for lambda >= 0; the quadratic
    # form a11 - 2 a12 + a22 can go slightly negative in floating point.
    lam = 0.5 * ((p.sigma11 - p.sigma21) ** 2 + (p.sigma12 - p.sigma22) ** 2)
    return DiffusionDerived(a11=a11, a12=a12, a22=a22, lam=lam)


def cost_factors(p: MarketParams) -> CostFactors:
    beta_s = 1.0 - p.K
    beta_b = 1.0 + p.K
    return CostFactors(beta_s=beta_s, beta_b=beta_b, beta=beta_b / beta_s)


def validate_params(p: MarketParams) -> ValidatedParams:
    """Check the standing assumptions and package the derived quantities.

    Raises
    ------
    DomainError          any field non-finite
    BadCost              K outside [0, 1)
    DiscountTooLow       rho <= mu1 or rho <= mu2
    DegenerateDiffusion  lambda <= LAMBDA_TOL
    """
    fields = (p.mu1, p.mu2, p.sigma11, p.sigma12, p.sigma21, p.sigma22,
              p.rho, p.K)
    if not all(math.isfinite(x) for x in fields):
        raise DomainError("market parameters must be finite")
    if not 0.0 <= p.K < 1.0:
        raise BadCost(f"K={p.K!r} outside [0, 1)")
    if p.rho <= p.mu1 or p.rho <= p.mu2:
        raise DiscountTooLow(
            f"rho={p.rho} must exceed both drifts (mu1={p.mu1}, mu2={p.mu2})")
    derived = effective_covariance(p)
    if derived.lam <= LAMBDA_TOL:
        raise DegenerateDiffusion(
            f"lambda={derived.lam:.3e} <= {LAMBDA_TOL:.0e}: volatility rows "
            "coincide and the price ratio does not diffuse")
    return ValidatedParams(params=p, costs=cost_factors(p), derived=derived)


def characteristic_roots(v: ValidatedParams) -> CharacteristicRoots:
    """Solve delta^2 - p_c delta - q_c = 0 for delta1 > 1 and delta2 < 0.

    The larger-magnitude root is computed from the quadratic formula and
    the other recovered through the product identity delta1 delta2 = -q_c,
    avoiding cancellation when (rho - mu1)/lambda is small.
    """
    p = v.params
    lam = v.derived.lam
    p_c = 1.0 + (p.mu1 - p.mu2) / lam
    q_c = (p.rho - p.mu1) / lam  # > 0 after validation
    disc = math.sqrt(p_c * p_c + 4.0 * q_c)
    if p_c >= 0.0:
        delta1 = 0.5 * (p_c + disc)
        delta2 = -q_c / delta1
    else:
        delta2 = 0.5 * (p_c - disc)
        delta1 = -q_c / delta2
    return CharacteristicRoots(delta1=delta1, delta2=delta2)
