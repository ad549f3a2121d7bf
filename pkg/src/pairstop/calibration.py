"""Parameter estimation from two-asset price histories.

Log-return increments over a sampling interval dt are stationary Gaussian
with mean (mu_i - a_ii/2) dt and covariance a_ij dt, so moment matching on
log returns (equivalent to maximum likelihood for exact GBM increments)
recovers the infinitesimal covariance as the sample covariance divided by
dt and the drifts as mean/dt plus the Ito correction.  The volatility
matrix is taken to be the unique symmetric positive-semidefinite square
root of the recovered covariance, matching the symmetric convention of the
bundled example parameters.

The discount rate and the transaction-cost rate are never estimated; they
are exogenous inputs.
"""

from __future__ import annotations

import csv
import datetime as _dt
import io
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DegenerateDiffusion, DomainError, OrderError, ParseError, TooShort
from .gbm_core import LAMBDA_TOL, MarketParams, validate_params

TRADING_DT = 1.0 / 252.0  # default year fraction per (daily) observation


@dataclass(frozen=True)
class PriceSeries:
    """Aligned positive price observations at strictly increasing dates.

    timestamps are observation times in days; only their ordering matters
    to the estimator, which treats consecutive rows as dt apart.
    """

    timestamps: np.ndarray
    p1: np.ndarray
    p2: np.ndarray

    def __post_init__(self):
        t, p1, p2 = (np.asarray(a, dtype=float) for a in
                     (self.timestamps, self.p1, self.p2))
        if not (len(t) == len(p1) == len(p2)):
            raise DomainError("timestamps and price arrays must align")
        if len(t) < 3:
            raise TooShort(f"need at least 3 observations, got {len(t)}")
        if np.any(~np.isfinite(p1)) or np.any(~np.isfinite(p2)) \
                or np.any(p1 <= 0) or np.any(p2 <= 0):
            raise DomainError("prices must be positive and finite")
        if np.any(np.diff(t) <= 0):
            raise OrderError("observation times must be strictly increasing")
        object.__setattr__(self, "timestamps", t)
        object.__setattr__(self, "p1", p1)
        object.__setattr__(self, "p2", p2)

    def __len__(self) -> int:
        return len(self.timestamps)

    def head_fraction(self, fraction: float) -> "PriceSeries":
        """First `fraction` of the rows (at least 3), for split calibration."""
        if not 0.0 < fraction <= 1.0:
            raise DomainError("fraction must be in (0, 1]")
        k = max(3, int(round(fraction * len(self))))
        return PriceSeries(self.timestamps[:k], self.p1[:k], self.p2[:k])


@dataclass(frozen=True)
class CalibrationDiagnostics:
    n_returns: int
    mean_log_returns: np.ndarray   # per asset, per observation interval
    var_log_returns: np.ndarray    # sample variance, ddof=1
    a: np.ndarray                  # infinitesimal covariance (per year)
    sigma_symmetry_residual: float


@dataclass(frozen=True)
class CalibrationResult:
    params: MarketParams
    diagnostics: CalibrationDiagnostics


def load_csv(source) -> PriceSeries:
    """Parse `date,price1,price2` CSV text into a PriceSeries.

    Accepts a filesystem path or a text/byte stream.  Any malformed,
    non-numeric or non-positive row fails the whole file with its line
    number; silent skipping would bias the estimator.
    """
    if hasattr(source, "read"):
        raw = source.read()
        text = raw.decode("utf-8") if isinstance(raw, bytes) else raw
    else:
        text = Path(source).read_text(encoding="utf-8")

    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise ParseError(1, "empty file")
    header = [c.strip() for c in rows[0]]
    if header != ["date", "price1", "price2"]:
        raise ParseError(1, f"expected header 'date,price1,price2', got {rows[0]!r}")

    dates: list[int] = []
    p1: list[float] = []
    p2: list[float] = []
    prev: int | None = None
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue  # trailing blank line
        if len(row) != 3:
            raise ParseError(lineno, f"expected 3 fields, got {len(row)}")
        try:
            day = _dt.date.fromisoformat(row[0].strip()).toordinal()
        except ValueError as exc:
            raise ParseError(lineno, f"bad date {row[0]!r}: {exc}") from None
        try:
            v1, v2 = float(row[1]), float(row[2])
        except ValueError:
            raise ParseError(lineno, f"non-numeric price in {row[1:]!r}") from None
        if not (math.isfinite(v1) and math.isfinite(v2)) or v1 <= 0 or v2 <= 0:
            raise ParseError(lineno, f"prices must be positive, got {row[1:]!r}")
        if prev is not None and day <= prev:
            raise OrderError(f"line {lineno}: date {row[0]!r} not increasing")
        prev = day
        dates.append(day)
        p1.append(v1)
        p2.append(v2)

    if len(dates) < 3:
        raise TooShort(f"need at least 3 data rows, got {len(dates)}")
    return PriceSeries(np.array(dates, dtype=float), np.array(p1), np.array(p2))


def spd_sqrt_2x2(a: np.ndarray) -> np.ndarray:
    """Symmetric PSD square root of a symmetric PSD 2x2 matrix.

    Closed form: sqrt(A) = (A + sqrt(det A) I) / sqrt(tr A + 2 sqrt(det A)).
    """
    a = np.asarray(a, dtype=float)
    det = a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]
    s = math.sqrt(max(det, 0.0))
    t = a[0, 0] + a[1, 1] + 2.0 * s
    if t <= 0.0:
        raise DegenerateDiffusion("covariance matrix is numerically zero")
    return (a + s * np.eye(2)) / math.sqrt(t)


def estimate(series: PriceSeries, dt: float = TRADING_DT, *, rho: float,
             K: float) -> CalibrationResult:
    """Moment-matching estimator for drifts and volatility matrix.

    Raises DegenerateDiffusion for (near-)deterministic ratio dynamics,
    and whatever `validate_params` raises if the supplied rho or K are
    inadmissible for the estimated drifts.
    """
    if dt <= 0 or not math.isfinite(dt):
        raise DomainError("dt must be positive and finite")
    r = np.diff(np.log(np.column_stack([series.p1, series.p2])), axis=0)
    mean = r.mean(axis=0)
    cov = np.cov(r.T, ddof=1)
    a = cov / dt
    lam = 0.5 * (a[0, 0] - 2.0 * a[0, 1] + a[1, 1])
    if lam <= LAMBDA_TOL:
        raise DegenerateDiffusion(
            f"log-ratio variance {lam:.3e} at or below {LAMBDA_TOL:.0e}; "
            "the series are (numerically) perfectly coupled or constant")
    mu = mean / dt + 0.5 * np.diag(a)
    sigma = spd_sqrt_2x2(a)
    params = MarketParams(mu1=float(mu[0]), mu2=float(mu[1]),
                          sigma11=float(sigma[0, 0]), sigma12=float(sigma[0, 1]),
                          sigma21=float(sigma[1, 0]), sigma22=float(sigma[1, 1]),
                          rho=rho, K=K)
    validate_params(params)  # surfaces DiscountTooLow / BadCost
    diag = CalibrationDiagnostics(
        n_returns=r.shape[0],
        mean_log_returns=mean,
        var_log_returns=r.var(axis=0, ddof=1),
        a=a,
        sigma_symmetry_residual=float(abs(sigma[0, 1] - sigma[1, 0])))
    return CalibrationResult(params=params, diagnostics=diag)
