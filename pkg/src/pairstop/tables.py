"""Sensitivity sweeps of the threshold pairs over one-parameter grids.

Each sweep varies a single market parameter over a five-point grid
centered on the bundled example parameter set and reports both model's
thresholds.  The grids and the base set are the ones used throughout the
documentation and the golden tests; `pairstop tables` prints all fourteen
(seven per model).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .gbm_core import MarketParams, validate_params
from .long_flat import solve_policy
from .long_flat_short import solve_policy_three

# Bundled example parameter set (see config.example.json): a calibrated
# large-cap equity pair with an exogenous discount rate and cost rate.
EXAMPLE_PARAMS = MarketParams(
    mu1=0.09696, mu2=0.14347,
    sigma11=0.19082, sigma12=0.04036, sigma21=0.04036, sigma22=0.13988,
    rho=0.5, K=0.001)


@dataclass(frozen=True)
class SweepSpec:
    """One swept parameter and its five grid values."""

    param: str
    values: tuple[float, ...]


SWEEPS: tuple[SweepSpec, ...] = (
    SweepSpec("mu1", (-0.00304, 0.04696, 0.09696, 0.14696, 0.19696)),
    SweepSpec("mu2", (0.04347, 0.09347, 0.14347, 0.19347, 0.24347)),
    SweepSpec("sigma11", (0.09082, 0.14082, 0.19082, 0.24082, 0.29082)),
    SweepSpec("sigma22", (0.03988, 0.08988, 0.13988, 0.18988, 0.23988)),
    SweepSpec("sigma12", (-0.05964, -0.00964, 0.04036, 0.09036, 0.14036)),
    SweepSpec("rho", (0.4, 0.45, 0.5, 0.55, 0.6)),
    SweepSpec("K", (0.0, 0.0005, 0.001, 0.0015, 0.002)),
)


@dataclass(frozen=True)
class SensitivityTable:
    model: str            # "long-flat" | "long-flat-short"
    param: str
    values: tuple[float, ...]
    labels: tuple[str, str]          # threshold names
    rows: tuple[tuple[float, ...], tuple[float, ...]]


def apply_sweep_value(base: MarketParams, param: str, value: float) -> MarketParams:
    """Set one swept parameter; sigma12 sweeps keep the matrix symmetric."""
    if param == "sigma12":
        return replace(base, sigma12=value, sigma21=value)
    return replace(base, **{param: value})


def sweep_table(model: str, spec: SweepSpec,
                base: MarketParams = EXAMPLE_PARAMS) -> SensitivityTable:
    lows: list[float] = []
    highs: list[float] = []
    for value in spec.values:
        v = validate_params(apply_sweep_value(base, spec.param, value))
        if model == "long-flat":
            pol = solve_policy(v)
            lows.append(pol.k1)
            highs.append(pol.k2)
        elif model == "long-flat-short":
            pol3 = solve_policy_three(v)
            lows.append(pol3.k1_star)
            highs.append(pol3.k2_star)
        else:
            raise ValueError(f"unknown model {model!r}")
    labels = ("k1", "k2") if model == "long-flat" else ("k1*", "k2*")
    return SensitivityTable(model=model, param=spec.param, values=spec.values,
                            labels=labels, rows=(tuple(lows), tuple(highs)))


def all_tables(base: MarketParams = EXAMPLE_PARAMS) -> list[SensitivityTable]:
    """All fourteen sweeps: the seven long-flat tables, then the seven
    long-flat-short ones, each in the canonical parameter order."""
    out = [sweep_table("long-flat", s, base) for s in SWEEPS]
    out += [sweep_table("long-flat-short", s, base) for s in SWEEPS]
    return out
