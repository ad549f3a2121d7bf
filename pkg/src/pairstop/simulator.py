"""Path simulation, policy execution, Monte Carlo validation, backtesting.

Price paths use the exact lognormal step

    X_i(t+dt) = X_i(t) exp((mu_i - a_ii/2) dt + (sigma dW)_i),

so the only systematic error in Monte Carlo value estimates is
first-passage detection on the discrete grid (no Brownian-bridge
correction; the bias is controlled by halving dt, not eliminated) and
horizon truncation, bounded by exp(-rho t_max) times a linear price bound.

Randomness contract
-------------------
All normal draws come from SFC64 streams keyed by SeedSequence tuples:

    (seed, 0, chunk)        pair-increment blocks, shape (16, 2, n_paths)
    (seed, 1, chunk)        log-ratio blocks, shape (16, n_paths)
    (seed, 2, path, event)  scalar draws at stopping times

Step s of path p always reads the same block element regardless of which
other paths have finished and which policy is being executed, so runs with
a common seed share their randomness path by path (common random numbers),
and any subset of chunks can be regenerated independently.

The value estimator `mc_value` simulates the log ratio z = ln(X2/X1)
(one normal per path-step) and reconstructs the stock-1 log price at
stopping times from its exact conditional law given the ratio path: the
regression component alpha (z - z0 - drift t) plus an independent
N(0, var_eta t) draw.  The joint law of (ratio path, prices at stopping
times) is identical to the two-normal scheme's, at half the cost.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .gbm_core import CostFactors, ValidatedParams
from .long_flat import RoundTripPolicy
from .long_flat_short import ThreeRegimePolicy

_CHUNK = 16


@dataclass(frozen=True)
class PathConfig:
    """Ensemble configuration.

    The horizon truncates the paper-style infinite-horizon stopping; the
    induced bias is bounded by exp(-rho t_max) times a linear function of
    the terminal prices (about exp(-20) with the default horizon at
    rho = 0.5).
    """

    x1_0: float
    x2_0: float
    dt: float
    t_max: float = 40.0
    n_paths: int = 1
    seed: int = 0

    def __post_init__(self):
        if not all(math.isfinite(x) and x > 0.0 for x in
                   (self.x1_0, self.x2_0, self.dt, self.t_max)):
            raise DomainError("prices, dt and t_max must be positive finite")
        if self.dt >= self.t_max:
            raise DomainError("dt must be smaller than t_max")
        if self.n_paths < 1:
            raise DomainError("n_paths must be at least 1")
        if not isinstance(self.seed, (int, np.integer)):
            raise DomainError("seed must be an integer")

    @property
    def n_steps(self) -> int:
        return max(1, int(round(self.t_max / self.dt)))


@dataclass(frozen=True)
class Path:
    times: np.ndarray
    x1: np.ndarray
    x2: np.ndarray


@dataclass(frozen=True)
class PathEnsemble:
    times: np.ndarray
    x1: np.ndarray  # (n_paths, n_steps+1)
    x2: np.ndarray

    @property
    def n_paths(self) -> int:
        return self.x1.shape[0]

    def path(self, i: int) -> Path:
        return Path(times=self.times, x1=self.x1[i], x2=self.x2[i])


class Action(str, enum.Enum):
    OPEN_LONG = "open_long_Z"
    CLOSE_LONG = "close_long_Z"
    OPEN_SHORT = "open_short_Z"
    CLOSE_SHORT = "close_short_Z"
    EXPIRE = "expire"


@dataclass(frozen=True)
class TradeEvent:
    time: float
    action: Action
    x1: float
    x2: float
    cash_flow: float  # discounted to time 0


@dataclass(frozen=True)
class TradeLedger:
    """Ordered open/close events of one round trip on one path.

    Event times are nondecreasing and there is at most one open and one
    close.  A path that never triggers holds an empty ledger; a position
    still open at the horizon is marked by a zero-flow `expire` event.
    """

    events: list[TradeEvent] = field(default_factory=list)

    @property
    def total_cash_flow(self) -> float:
        return sum(e.cash_flow for e in self.events)

    def to_csv(self) -> str:
        lines = ["time,action,x1,x2,cash_flow"]
        for e in self.events:
            lines.append(f"{e.time!r},{e.action.value},{e.x1!r},{e.x2!r},"
                         f"{e.cash_flow!r}")
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        return json.dumps([{"time": e.time, "action": e.action.value,
                            "x1": e.x1, "x2": e.x2,
                            "cash_flow": e.cash_flow}
                           for e in self.events], indent=2)


@dataclass(frozen=True)
class McEstimate:
    mean: float
    stderr: float
    n: int

    def __post_init__(self):
        if self.n < 2:
            raise DomainError("a Monte Carlo estimate needs n >= 2 paths")


def event_cash_flow(action: Action, time: float, x1: float, x2: float,
                    costs: CostFactors, rho: float) -> float:
    """Discounted cash flow of a single trade event.

    Opening the long pair buys stock 1 and shorts stock 2; the short side
    mirrors it.  Expiry carries no flow.
    """
    disc = math.exp(-rho * time)
    bs, bb = costs.beta_s, costs.beta_b
    if action is Action.CLOSE_LONG:
        return disc * (bs * x1 - bb * x2)
    if action is Action.OPEN_LONG:
        return -disc * (bb * x1 - bs * x2)
    if action is Action.OPEN_SHORT:
        return disc * (bs * x1 - bb * x2)
    if action is Action.CLOSE_SHORT:
        return -disc * (bb * x1 - bs * x2)
    return 0.0


def _normal_block(seed: int, stream: int, chunk: int, shape) -> np.ndarray:
    ss = np.random.SeedSequence(entropy=(seed % 2 ** 64, stream, chunk))
    return np.random.Generator(np.random.SFC64(ss)).standard_normal(shape)


def _event_normal(seed: int, path: int, event: int) -> float:
    ss = np.random.SeedSequence(entropy=(seed % 2 ** 64, 2, path, event))
    return float(np.random.Generator(np.random.SFC64(ss)).standard_normal())


def simulate_paths(v: ValidatedParams, cfg: PathConfig) -> PathEnsemble:
    """Exact-scheme GBM ensemble; bit-identical for identical seeds."""
    p, d = v.params, v.derived
    n, m = cfg.n_paths, cfg.n_steps
    dt = cfg.dt
    sdt = math.sqrt(dt)
    b1 = (p.mu1 - 0.5 * d.a11) * dt
    b2 = (p.mu2 - 0.5 * d.a22) * dt

    inc1 = np.empty((m, n))
    inc2 = np.empty((m, n))
    for c in range((m + _CHUNK - 1) // _CHUNK):
        blk = _normal_block(cfg.seed, 0, c, (_CHUNK, 2, n))
        s0 = c * _CHUNK
        rows = min(_CHUNK, m - s0)
        w1 = blk[:rows, 0]
        w2 = blk[:rows, 1]
        inc1[s0:s0 + rows] = b1 + sdt * (p.sigma11 * w1 + p.sigma12 * w2)
        inc2[s0:s0 + rows] = b2 + sdt * (p.sigma21 * w1 + p.sigma22 * w2)

    x1 = np.empty((n, m + 1))
    x2 = np.empty((n, m + 1))
    x1[:, 0] = cfg.x1_0
    x2[:, 0] = cfg.x2_0
    x1[:, 1:] = cfg.x1_0 * np.exp(np.cumsum(inc1, axis=0)).T
    x2[:, 1:] = cfg.x2_0 * np.exp(np.cumsum(inc2, axis=0)).T
    times = np.arange(m + 1) * dt
    return PathEnsemble(times=times, x1=x1, x2=x2)


def _first_index(cond: np.ndarray, start: int = 0) -> int | None:
    idx = np.nonzero(cond[start:])[0]
    return int(idx[0]) + start if idx.size else None


def run_round_trip(path: Path, policy: RoundTripPolicy, i0: int,
                   rho: float) -> TradeLedger:
    """Execute the long/flat stopping rule on one stored path.

    First-passage times are detected on the discrete grid: the first
    sample at which region membership holds (time 0 included).
    """
    if i0 not in (0, 1):
        raise DomainError(f"initial position must be 0 or 1, got {i0!r}")
    y = path.x2 / path.x1
    costs = policy.costs
    events: list[TradeEvent] = []

    def emit(action: Action, j: int):
        t = float(path.times[j])
        x1v, x2v = float(path.x1[j]), float(path.x2[j])
        events.append(TradeEvent(
            time=t, action=action, x1=x1v, x2=x2v,
            cash_flow=event_cash_flow(action, t, x1v, x2v, costs, rho)))

    if i0 == 0:
        j = _first_index(y >= policy.k2)
        if j is None:
            return TradeLedger(events=[])
        emit(Action.OPEN_LONG, j)
        jj = _first_index(y <= policy.k1, start=j)
        if jj is None:
            emit(Action.EXPIRE, len(y) - 1)
            return TradeLedger(events=events)
        emit(Action.CLOSE_LONG, jj)
        return TradeLedger(events=events)

    j = _first_index(y <= policy.k1)
    if j is None:
        emit(Action.EXPIRE, len(y) - 1)
        return TradeLedger(events=events)
    emit(Action.CLOSE_LONG, j)
    return TradeLedger(events=events)


def run_three_regime(path: Path, policy: ThreeRegimePolicy, i0: int,
                     rho: float) -> TradeLedger:
    """Execute the long/flat/short stopping rule on one stored path.

    From flat, the trade direction is decided by which side of the hold
    region is hit first; the leg then closes at the opposite threshold.
    """
    if i0 not in (-1, 0, 1):
        raise DomainError(f"initial position must be -1, 0 or 1, got {i0!r}")
    y = path.x2 / path.x1
    k_lo, k_hi = policy.k1_star, policy.k2_star
    costs = policy.costs
    events: list[TradeEvent] = []

    def emit(action: Action, j: int):
        t = float(path.times[j])
        x1v, x2v = float(path.x1[j]), float(path.x2[j])
        events.append(TradeEvent(
            time=t, action=action, x1=x1v, x2=x2v,
            cash_flow=event_cash_flow(action, t, x1v, x2v, costs, rho)))

    def close_leg(direction: int, start: int) -> None:
        if direction == 1:
            jj = _first_index(y <= k_lo, start=start)
            act = Action.CLOSE_LONG
        else:
            jj = _first_index(y >= k_hi, start=start)
            act = Action.CLOSE_SHORT
        if jj is None:
            emit(Action.EXPIRE, len(y) - 1)
        else:
            emit(act, jj)

    if i0 == 0:
        j = _first_index((y <= k_lo) | (y >= k_hi))
        if j is None:
            return TradeLedger(events=[])
        if y[j] <= k_lo:
            emit(Action.OPEN_SHORT, j)
            close_leg(-1, j)
        else:
            emit(Action.OPEN_LONG, j)
            close_leg(1, j)
        return TradeLedger(events=events)

    close_leg(i0, 0)
    return TradeLedger(events=events)


def backtest(series, policy, i0: int, rho: float, dt: float) -> TradeLedger:
    """Replay the stopping rule on observed prices.

    Observation j is assigned time j*dt (the series timestamps validate
    ordering only).  No intrabar interpolation: a threshold crossed
    between observations triggers at the first observation beyond it.
    """
    if dt <= 0 or not math.isfinite(dt):
        raise DomainError("dt must be positive and finite")
    times = np.arange(len(series.p1)) * dt
    path = Path(times=times, x1=np.asarray(series.p1, dtype=float),
                x2=np.asarray(series.p2, dtype=float))
    if isinstance(policy, ThreeRegimePolicy):
        return run_three_regime(path, policy, i0, rho)
    return run_round_trip(path, policy, i0, rho)


# ---------------------------------------------------------------------------
# Streaming Monte Carlo value estimation
# ---------------------------------------------------------------------------

# per-path state codes inside mc_value
_DONE = 2


def mc_value(v: ValidatedParams, cfg: PathConfig, policy, i0: int) -> McEstimate:
    """Estimate V_i(x1_0, x2_0) as the mean per-path discounted ledger total.

    The dynamics come from `v`, the stopping rule from `policy` (which may
    be a perturbed policy for optimality comparisons; a shared seed then
    gives common random numbers).  Standard error is sample-std/sqrt(n).
    """
    three = isinstance(policy, ThreeRegimePolicy)
    if three:
        if i0 not in (-1, 0, 1):
            raise DomainError(f"initial position must be -1, 0 or 1, got {i0!r}")
        k_lo, k_hi = policy.k1_star, policy.k2_star
    else:
        if i0 not in (0, 1):
            raise DomainError(f"initial position must be 0 or 1, got {i0!r}")
        k_lo, k_hi = policy.k1, policy.k2
    if cfg.n_paths < 2:
        raise DomainError("mc_value needs n_paths >= 2")

    p, d = v.params, v.derived
    rho = p.rho
    costs = policy.costs
    n, m, dt = cfg.n_paths, cfg.n_steps, cfg.dt
    seed = cfg.seed

    lk_lo, lk_hi = math.log(k_lo), math.log(k_hi)
    z0 = math.log(cfg.x2_0 / cfg.x1_0)
    bz_rate = p.mu2 - p.mu1 - 0.5 * (d.a22 - d.a11)
    bz_step = bz_rate * dt
    sz = math.sqrt(2.0 * d.lam * dt)
    b1_rate = p.mu1 - 0.5 * d.a11
    alpha = (d.a12 - d.a11) / (2.0 * d.lam)
    var_eta = max(d.a11 - alpha * alpha * 2.0 * d.lam, 0.0)

    z = np.full(n, z0)
    stage = np.full(n, i0, dtype=np.int8)
    flows = np.zeros(n)
    h = np.zeros(n)        # independent log-price component at last event
    t_prev = np.zeros(n)   # time of last event
    ev_count = np.zeros(n, dtype=np.int8)

    n_flat = n if i0 == 0 else 0
    n_held = 0 if i0 == 0 else n  # long or short legs still open

    def settle(idx: np.ndarray, t: float, action: Action, new_stage: int):
        nonlocal n_flat, n_held
        bs, bb = costs.beta_s, costs.beta_b
        credit = action in (Action.CLOSE_LONG, Action.OPEN_SHORT)
        disc = math.exp(-rho * t)
        for pi in idx:
            pi = int(pi)
            if t == 0.0:
                x1v, x2v = cfg.x1_0, cfg.x2_0
            else:
                dt_ev = t - t_prev[pi]
                if var_eta > 0.0 and dt_ev > 0.0:
                    h[pi] += math.sqrt(var_eta * dt_ev) * _event_normal(
                        seed, pi, int(ev_count[pi]))
                ev_count[pi] += 1
                log_x1 = b1_rate * t + alpha * (z[pi] - z0 - bz_rate * t) + h[pi]
                x1v = cfg.x1_0 * math.exp(log_x1)
                x2v = x1v * math.exp(z[pi])
            if credit:
                flows[pi] += disc * (bs * x1v - bb * x2v)
            else:
                flows[pi] -= disc * (bb * x1v - bs * x2v)
            t_prev[pi] = t
            stage[pi] = new_stage
        if action in (Action.OPEN_LONG, Action.OPEN_SHORT):
            n_flat -= len(idx)
            n_held += len(idx)
        else:
            n_held -= len(idx)

    blk = None
    tmp = np.empty(n)
    for s in range(m + 1):
        if n_flat + n_held == 0:
            break
        t = s * dt
        # event masks from the pre-step snapshot: a position opened at t
        # cannot also close at t (the regions are disjoint)
        if n_held:
            if three:
                cl = (stage == 1) & (z <= lk_lo)
                cs = (stage == -1) & (z >= lk_hi)
                if cl.any():
                    settle(np.flatnonzero(cl), t, Action.CLOSE_LONG, _DONE)
                if cs.any():
                    settle(np.flatnonzero(cs), t, Action.CLOSE_SHORT, _DONE)
            else:
                cl = (stage == 1) & (z <= lk_lo)
                if cl.any():
                    settle(np.flatnonzero(cl), t, Action.CLOSE_LONG, _DONE)
        if n_flat:
            flat = stage == 0
            ol = flat & (z >= lk_hi)
            if ol.any():
                settle(np.flatnonzero(ol), t, Action.OPEN_LONG, 1)
            if three:
                os_ = flat & (z <= lk_lo)
                if os_.any():
                    settle(np.flatnonzero(os_), t, Action.OPEN_SHORT, -1)
        if s < m:
            r = s % _CHUNK
            if r == 0:
                blk = _normal_block(seed, 1, s // _CHUNK, (_CHUNK, n))
            np.multiply(blk[r], sz, out=tmp)
            z += tmp
            z += bz_step

    mean = float(np.mean(flows))
    stderr = float(np.std(flows, ddof=1) / math.sqrt(n))
    return McEstimate(mean=mean, stderr=stderr, n=n)
