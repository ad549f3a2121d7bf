"""Shared machinery for variational-inequality verification reports.

Both threshold models certify their candidate value functions the same
way: evaluate a list of region-wise inequality residuals on a log-spaced
grid, check value/slope pasting at each threshold, and report the worst
residual per inequality with its location.  A report passes when every
inequality residual stays above -INEQUALITY_TOL and every pasting
residual stays below PASTING_TOL.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GridError

INEQUALITY_TOL = 1e-8
PASTING_TOL = 1e-9


def make_log_grid(y_min: float = 1e-3, y_max: float = 1e3,
                  n: int = 10_000) -> np.ndarray:
    """Log-spaced verification grid on [y_min, y_max] subset of (0, inf)."""
    if not (np.isfinite(y_min) and np.isfinite(y_max)):
        raise GridError("grid bounds must be finite")
    if y_min <= 0.0 or y_min >= y_max:
        raise GridError(f"need 0 < y_min < y_max, got [{y_min}, {y_max}]")
    if n < 2:
        raise GridError(f"need at least 2 grid points, got {n}")
    return np.logspace(np.log10(y_min), np.log10(y_max), n)


def check_grid(grid: np.ndarray) -> np.ndarray:
    g = np.asarray(grid, dtype=float)
    if g.ndim != 1 or g.size < 2:
        raise GridError("grid must be a 1-D array with at least 2 points")
    if not np.all(np.isfinite(g)) or np.any(g <= 0.0):
        raise GridError("grid points must be finite and positive")
    return g


def apply_generator(y, w, wp, wpp, mu1: float, mu2: float, rho: float,
                    lam: float):
    """(rho - L)w from pointwise values of w, w', w''.

    L is the Euler reduction of the two-dimensional generator:
    Lw = lam y^2 w'' + (mu2 - mu1) y w' + mu1 w.
    """
    return rho * w - (lam * y * y * wpp + (mu2 - mu1) * y * wp + mu1 * w)


@dataclass(frozen=True)
class InequalityCheck:
    """Residuals of one inequality over (the closure of) its region."""

    name: str
    region: str
    y: np.ndarray
    residual: np.ndarray
    min_residual: float
    argmin_y: float

    @property
    def passed(self) -> bool:
        return self.min_residual >= -INEQUALITY_TOL


@dataclass(frozen=True)
class SmoothFitCheck:
    """Value and first-derivative pasting gaps at one threshold."""

    threshold: str
    location: float
    value_gap: float
    slope_gap: float

    @property
    def passed(self) -> bool:
        return (abs(self.value_gap) < PASTING_TOL
                and abs(self.slope_gap) < PASTING_TOL)


@dataclass(frozen=True)
class VerificationReport:
    inequalities: list[InequalityCheck] = field(default_factory=list)
    smooth_fit: list[SmoothFitCheck] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return (all(c.passed for c in self.inequalities)
                and all(s.passed for s in self.smooth_fit))

    def summary_lines(self) -> list[str]:
        lines = []
        for c in self.inequalities:
            status = "ok " if c.passed else "FAIL"
            lines.append(f"{status} {c.name:38s} [{c.region:8s}] "
                         f"worst {c.min_residual:+.3e} at y={c.argmin_y:.6g}")
        for s in self.smooth_fit:
            status = "ok " if s.passed else "FAIL"
            lines.append(f"{status} pasting at {s.threshold:4s} "
                         f"(y={s.location:.6g}) value gap {s.value_gap:+.3e} "
                         f"slope gap {s.slope_gap:+.3e}")
        return lines


def inequality_check(name: str, region: str, y: np.ndarray,
                     residual: np.ndarray) -> InequalityCheck:
    i = int(np.argmin(residual))
    return InequalityCheck(name=name, region=region, y=y, residual=residual,
                           min_residual=float(residual[i]),
                           argmin_y=float(y[i]))
