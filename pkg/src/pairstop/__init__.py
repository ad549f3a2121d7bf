"""Round-trip pairs-trading threshold policies under correlated GBMs.

Solves, verifies and empirically validates the optimal open/close
thresholds on the price ratio of two stocks, for a long/flat book and for
a long/flat/short book, plus calibration from price histories, Monte
Carlo policy validation, backtesting, and a CLI (`pairstop`).
"""

from .calibration import (CalibrationDiagnostics, CalibrationResult,
                          PriceSeries, estimate, load_csv, spd_sqrt_2x2)
from .errors import (BadCost, DegenerateDiffusion, DiscountTooLow,
                     DomainError, GridError, NoBracket, OrderError,
                     PairstopError, ParseError, TooShort)
from .gbm_core import (CharacteristicRoots, CostFactors, DiffusionDerived,
                       MarketParams, ValidatedParams, characteristic_roots,
                       cost_factors, effective_covariance, validate_params)
from .long_flat import (Region, RoundTripPolicy, classify, solve_policy,
                        threshold_bracket, threshold_function, value,
                        verify_policy, w0, w1)
from .long_flat_short import (ThreeRegimePolicy, TradeSignal, signal,
                              solve_policy_three, system_residuals,
                              value_three, verify_policy_three, w0_three,
                              w1_three, w_minus1)
from .simulator import (Action, McEstimate, Path, PathConfig, PathEnsemble,
                        TradeEvent, TradeLedger, backtest, event_cash_flow,
                        mc_value, run_round_trip, run_three_regime,
                        simulate_paths)
from .tables import EXAMPLE_PARAMS, SWEEPS, SensitivityTable, all_tables
from .verification import (InequalityCheck, SmoothFitCheck,
                           VerificationReport, make_log_grid)

__version__ = "0.1.0"
