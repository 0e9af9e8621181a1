"""Series preprocessing: scaling, unit-root tests, differencing, lag design.

The unit-root decisions drive how much differencing the non-seasonal
models receive and whether seasonal dummy columns are attached. Critical
values for both tests are Monte-Carlo tables simulated under the
respective null (generators below), tabulated at n in {50, 100, 200} and
interpolated linearly in 1/n.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import ConstantSeries, NotFitted, SeriesTooShort

PERIOD = 12

MONTH_LABELS = (
    "jan", "feb", "mar", "apr", "may", "jun",
    "jul", "aug", "sep", "oct", "nov", "dec",
)

# 5% critical values simulated with simulate_adf_critical_value /
# simulate_ocsb_critical_value (200_000 replications each, default seeds).
ADF_CRIT_5PCT = {50: -3.1637, 100: -2.9997, 200: -2.9305}
OCSB_CRIT_5PCT = {50: -1.7475, 100: -1.7643, 200: -1.7733}


def _interp_crit(table: dict[int, float], n: int) -> float:
    """Piecewise-linear interpolation in 1/n, clamped at the table ends."""
    sizes = sorted(table)
    if n <= sizes[0]:
        return table[sizes[0]]
    if n >= sizes[-1]:
        return table[sizes[-1]]
    inv = 1.0 / n
    for lo, hi in zip(sizes, sizes[1:]):
        if lo <= n <= hi:
            w = (inv - 1.0 / lo) / (1.0 / hi - 1.0 / lo)
            return (1 - w) * table[lo] + w * table[hi]
    raise AssertionError("unreachable")


# ---------------------------------------------------------------------------
# Min-max scaling


@dataclass(frozen=True)
class ScalerState:
    """Per-column minima and maxima from the fitting window."""

    mins: np.ndarray
    maxs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mins", np.atleast_1d(np.asarray(self.mins, float)))
        object.__setattr__(self, "maxs", np.atleast_1d(np.asarray(self.maxs, float)))
        if np.any(self.maxs < self.mins):
            raise ValueError("max < min in scaler state")


def minmax_fit(data: np.ndarray) -> ScalerState:
    """Fit a 0..1 scaler on a vector or a (rows, cols) matrix."""
    arr = np.asarray(data, dtype=float)
    if arr.size == 0:
        raise ValueError("cannot fit a scaler on an empty window")
    if arr.ndim == 1:
        return ScalerState(np.array([arr.min()]), np.array([arr.max()]))
    return ScalerState(arr.min(axis=0), arr.max(axis=0))


def _spread(state: ScalerState) -> np.ndarray:
    spread = state.maxs - state.mins
    # constant columns map to 0 and invert back to the constant
    return np.where(spread == 0, 1.0, spread)


def minmax_apply(state: ScalerState | None, data: np.ndarray) -> np.ndarray:
    """Scale so the fit-window min maps to 0 and max to 1 (no clamping)."""
    if state is None:
        raise NotFitted("scaler has not been fitted")
    arr = np.asarray(data, dtype=float)
    if arr.ndim == 1 and len(state.mins) == 1:
        return (arr - state.mins[0]) / _spread(state)[0]
    return (arr - state.mins) / _spread(state)


def minmax_invert(state: ScalerState | None, data: np.ndarray) -> np.ndarray:
    if state is None:
        raise NotFitted("scaler has not been fitted")
    arr = np.asarray(data, dtype=float)
    if arr.ndim == 1 and len(state.mins) == 1:
        return arr * _spread(state)[0] + state.mins[0]
    return arr * _spread(state) + state.mins


# ---------------------------------------------------------------------------
# Differencing


@dataclass(frozen=True)
class DifferencingSpec:
    """Differencing orders plus the anchor values needed to invert exactly.

    Seasonal differencing (period 12) is applied before the regular one,
    so inversion runs in the reverse order.
    """

    d: int
    D: int
    seasonal_anchor: np.ndarray  # first 12 original values (if D == 1)
    regular_anchor: float  # first seasonally-differenced value (if d == 1)

    def __post_init__(self):
        if self.d not in (0, 1) or self.D not in (0, 1):
            raise ValueError("d and D must each be 0 or 1")
        anchor = np.asarray(self.seasonal_anchor, dtype=float).copy()
        anchor.setflags(write=False)
        object.__setattr__(self, "seasonal_anchor", anchor)

    @property
    def lost(self) -> int:
        """Observations consumed at the front of the series."""
        return self.d + PERIOD * self.D


def difference(y: np.ndarray, d: int, D: int) -> tuple[np.ndarray, DifferencingSpec]:
    """Apply seasonal (D) then regular (d) differencing."""
    y = np.asarray(y, dtype=float)
    lost = d + PERIOD * D
    if len(y) <= lost:
        raise SeriesTooShort(lost + 1, len(y), "differencing input")
    u = y[PERIOD:] - y[:-PERIOD] if D else y
    w = u[1:] - u[:-1] if d else u
    spec = DifferencingSpec(
        d=d,
        D=D,
        seasonal_anchor=y[:PERIOD] if D else np.empty(0),
        regular_anchor=float(u[0]) if d else float("nan"),
    )
    return w, spec


def integrate(w: np.ndarray, spec: DifferencingSpec) -> np.ndarray:
    """Invert :func:`difference`; exact round trip by construction."""
    w = np.asarray(w, dtype=float)
    if spec.d:
        u = np.concatenate(([spec.regular_anchor], spec.regular_anchor + np.cumsum(w)))
    else:
        u = w
    if spec.D:
        y = np.empty(len(u) + PERIOD)
        y[:PERIOD] = spec.seasonal_anchor
        for t in range(len(u)):
            y[PERIOD + t] = u[t] + y[t]
        return y
    return u.copy()


def integrate_next(w: np.ndarray, w_next: float, spec: DifferencingSpec) -> float:
    """Original-scale value implied by appending ``w_next`` to ``w``."""
    extended = np.concatenate([np.asarray(w, dtype=float), [w_next]])
    return float(integrate(extended, spec)[-1])


@dataclass(frozen=True)
class DifferencingDecision:
    d: int
    D: int
    adf_stat: float | None = None
    ocsb_stat: float | None = None

    @property
    def seasonal(self) -> bool:
        return self.D == 1


def decide_differencing(y: np.ndarray) -> DifferencingDecision:
    """Unit-root-test-driven differencing orders for one training window.

    Short or degenerate windows fall back to no differencing on the axis
    whose test cannot run.
    """
    y = np.asarray(y, dtype=float)
    d, adf_stat = 0, None
    if len(y) >= 20 and np.ptp(y) > 0:
        res = adf_test(y)
        adf_stat = res["stat"]
        d = 0 if res["stationary"] else 1
    D, ocsb_stat = 0, None
    if len(y) >= 3 * PERIOD:
        res = ocsb_test(y)
        ocsb_stat = res["stat"]
        D = 1 if res["seasonal_unit_root"] else 0
    return DifferencingDecision(d=d, D=D, adf_stat=adf_stat, ocsb_stat=ocsb_stat)


# ---------------------------------------------------------------------------
# Unit-root tests


@njit(cache=True)
def _chol_factor(G: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor of a small SPD matrix (no LAPACK overhead)."""
    p = G.shape[0]
    L = np.zeros((p, p))
    for i in range(p):
        for j in range(i + 1):
            s = G[i, j]
            for k in range(j):
                s -= L[i, k] * L[j, k]
            if i == j:
                if s <= 0.0:
                    s = 1e-12
                L[i, i] = np.sqrt(s)
            else:
                L[i, j] = s / L[j, j]
    return L


@njit(cache=True)
def _chol_solve(L: np.ndarray, b: np.ndarray) -> np.ndarray:
    p = L.shape[0]
    z = np.empty(p)
    for i in range(p):
        s = b[i]
        for k in range(i):
            s -= L[i, k] * z[k]
        z[i] = s / L[i, i]
    x = np.empty(p)
    for i in range(p - 1, -1, -1):
        s = z[i]
        for k in range(i + 1, p):
            s -= L[k, i] * x[k]
        x[i] = s / L[i, i]
    return x


@njit(cache=True)
def _ols_tstat(X: np.ndarray, y: np.ndarray, col: int) -> float:
    """t-statistic of coefficient ``col`` in an OLS fit."""
    n, k = X.shape
    gram = np.ascontiguousarray(X.T) @ X
    xty = np.ascontiguousarray(X.T) @ y
    L = _chol_factor(gram)
    beta = _chol_solve(L, xty)
    resid = y - X @ beta
    sigma2 = (resid @ resid) / (n - k)
    unit = np.zeros(k)
    unit[col] = 1.0
    inv_col = _chol_solve(L, unit)
    return beta[col] / np.sqrt(sigma2 * inv_col[col])


@njit(cache=True)
def _adf_stat(y: np.ndarray, max_lag: int) -> tuple[float, int]:
    """ADF t-statistic with AIC-selected augmentation order.

    Regression: dy_t = c + phi * y_{t-1} + sum gamma_i dy_{t-i}. Lag order
    is chosen by AIC on the common sample (rows available at max_lag),
    then the statistic is computed on the full sample for that order.
    """
    n = len(y)
    dy = y[1:] - y[:-1]
    n_dy = n - 1
    m = n_dy - max_lag  # common-sample rows
    X = np.empty((m, 2 + max_lag))
    X[:, 0] = 1.0
    for r in range(m):
        t = max_lag + r  # dy index
        X[r, 1] = y[t]  # level lagged once relative to dy_t
        for i in range(max_lag):
            X[r, 2 + i] = dy[t - 1 - i]
    target = dy[max_lag:]
    # one Gram matrix serves every candidate order via leading submatrices
    gram = X.T @ X
    xty = X.T @ target
    yty = target @ target
    best_k = 0
    best_aic = np.inf
    for k in range(max_lag + 1):
        p = 2 + k
        L = _chol_factor(np.ascontiguousarray(gram[:p, :p]))
        beta = _chol_solve(L, xty[:p].copy())
        ssr = yty - beta @ xty[:p]
        if ssr <= 0.0:
            ssr = 1e-300
        aic = m * np.log(ssr / m) + 2.0 * p
        if aic < best_aic:
            best_aic = aic
            best_k = k
    # final regression on all rows available at the chosen order
    m2 = n_dy - best_k
    X2 = np.empty((m2, 2 + best_k))
    X2[:, 0] = 1.0
    for r in range(m2):
        t = best_k + r
        X2[r, 1] = y[t]
        for i in range(best_k):
            X2[r, 2 + i] = dy[t - 1 - i]
    stat = _ols_tstat(X2, dy[best_k:], 1)
    return stat, best_k


def default_adf_max_lag(n: int) -> int:
    """Schwert's rule, capped so the common sample keeps 10 rows."""
    lag = int(np.floor(12.0 * (n / 100.0) ** 0.25))
    return max(0, min(lag, n - 1 - 10 - 2))


def adf_test(y: np.ndarray, max_lag: int | None = None) -> dict:
    """Augmented Dickey-Fuller test (constant, no trend) at the 5% level.

    ``stationary`` is True when the statistic falls below the simulated
    critical value, i.e. the unit-root null is rejected.
    """
    y = np.asarray(y, dtype=float)
    n = len(y)
    if n < 20:
        raise SeriesTooShort(20, n, "ADF input")
    if np.ptp(y) == 0:
        raise ConstantSeries("ADF test is undefined for a constant series")
    if max_lag is None:
        max_lag = default_adf_max_lag(n)
    stat, used_lag = _adf_stat(y, max_lag)
    crit = _interp_crit(ADF_CRIT_5PCT, n)
    return {
        "stationary": bool(stat < crit),
        "stat": float(stat),
        "crit_5pct": crit,
        "used_lag": int(used_lag),
    }


@njit(cache=True)
def _ocsb_stat(y: np.ndarray) -> float:
    """t-statistic of the seasonal-lag regressor in the OCSB regression.

    dd_t = c + a * D12(y)_{t-1} + b * D1(y)_{t-12} + e, where dd is the
    doubly differenced series; the statistic is t(b).
    """
    n = len(y)
    m = n - PERIOD - 1
    X = np.empty((m, 3))
    dd = np.empty(m)
    for r in range(m):
        t = PERIOD + 1 + r
        dd[r] = y[t] - y[t - 1] - y[t - PERIOD] + y[t - PERIOD - 1]
        X[r, 0] = 1.0
        X[r, 1] = y[t - 1] - y[t - 1 - PERIOD]  # seasonal difference, lag 1
        X[r, 2] = y[t - PERIOD] - y[t - PERIOD - 1]  # first difference, lag 12
    return _ols_tstat(X, dd, 2)


def ocsb_test(y: np.ndarray) -> dict:
    """Seasonal unit-root test in the Osborn-Chui-Smith-Birchenhall style.

    The null keeps the seasonal unit root: only a statistic below the
    simulated critical value rejects it (``seasonal_unit_root`` False).
    """
    y = np.asarray(y, dtype=float)
    n = len(y)
    if n < 3 * PERIOD:
        raise SeriesTooShort(3 * PERIOD, n, "OCSB input")
    stat = float(_ocsb_stat(y))
    crit = _interp_crit(OCSB_CRIT_5PCT, n)
    return {
        "seasonal_unit_root": bool(stat >= crit),
        "stat": stat,
        "crit_5pct": crit,
    }


@njit(cache=True)
def _adf_stat_batch(ys: np.ndarray, max_lag: int) -> np.ndarray:
    out = np.empty(ys.shape[0])
    for r in range(ys.shape[0]):
        out[r], _ = _adf_stat(ys[r], max_lag)
    return out


@njit(cache=True)
def _ocsb_stat_batch(ys: np.ndarray) -> np.ndarray:
    out = np.empty(ys.shape[0])
    for r in range(ys.shape[0]):
        out[r] = _ocsb_stat(ys[r])
    return out


def simulate_adf_critical_value(
    n: int, reps: int = 200_000, seed: int = 20240401, quantile: float = 0.05
) -> float:
    """Monte-Carlo critical value of the ADF statistic under a random walk."""
    rng = np.random.default_rng(seed)
    max_lag = default_adf_max_lag(n)
    stats = np.empty(reps)
    chunk = 20_000
    done = 0
    while done < reps:
        size = min(chunk, reps - done)
        walks = np.cumsum(rng.standard_normal((size, n)), axis=1)
        stats[done : done + size] = _adf_stat_batch(walks, max_lag)
        done += size
    return float(np.quantile(stats, quantile))


def simulate_ocsb_critical_value(
    n: int, reps: int = 200_000, seed: int = 20240402, quantile: float = 0.05
) -> float:
    """Monte-Carlo critical value under the seasonal random walk null."""
    rng = np.random.default_rng(seed)
    stats = np.empty(reps)
    chunk = 20_000
    done = 0
    while done < reps:
        size = min(chunk, reps - done)
        eps = rng.standard_normal((size, n))
        ys = eps.copy()
        for t in range(PERIOD, n):
            ys[:, t] = ys[:, t - PERIOD] + eps[:, t]
        stats[done : done + size] = _ocsb_stat_batch(ys)
        done += size
    return float(np.quantile(stats, quantile))


# ---------------------------------------------------------------------------
# Seasonal dummies and lag design


def seasonal_dummies(months: np.ndarray) -> np.ndarray:
    """Month-of-year one-hot columns with December as the reference level.

    ``months`` holds calendar months 1..12; the result has 11 columns
    (January..November), each row of a December month being all zeros.
    """
    months = np.asarray(months, dtype=int)
    out = np.zeros((len(months), 11))
    for j in range(11):
        out[:, j] = months == j + 1
    return out


DUMMY_NAMES = tuple(f"dummy_{MONTH_LABELS[j]}" for j in range(11))


@dataclass(frozen=True)
class LagMatrix:
    """Design matrix of lagged targets plus optional exog and dummy columns.

    Row t predicts ``targets[t]`` from values at strictly earlier months,
    except exogenous drivers which enter contemporaneously. ``query`` is
    the feature row for the month right after the end of the series.
    """

    X: np.ndarray
    targets: np.ndarray
    columns: tuple[str, ...]
    query: np.ndarray
    n_lags: int

    def __post_init__(self):
        for name in ("X", "targets", "query"):
            arr = np.asarray(getattr(self, name), dtype=float).copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


def lag_embed(
    y: np.ndarray,
    n_lags: int,
    exog: np.ndarray | None = None,
    exog_next: np.ndarray | None = None,
    exog_names: tuple[str, ...] = (),
    months: np.ndarray | None = None,
    month_next: int | None = None,
    dummies: bool = False,
) -> LagMatrix:
    """Build the lag design matrix for one training window.

    ``exog`` rows and ``months`` align with ``y``; ``exog_next`` and
    ``month_next`` describe the forecast month for the query row.
    """
    y = np.asarray(y, dtype=float)
    n = len(y)
    if not 1 <= n_lags <= 7:
        raise ValueError(f"lag count must be in 1..7, got {n_lags}")
    if n <= n_lags:
        raise SeriesTooShort(n_lags + 1, n, "lag embedding input")
    rows = n - n_lags
    blocks = []
    names: list[str] = [f"lag{i + 1}" for i in range(n_lags)]
    lag_block = np.empty((rows, n_lags))
    for i in range(n_lags):
        lag_block[:, i] = y[n_lags - 1 - i : n - 1 - i]
    blocks.append(lag_block)
    query_parts = [y[::-1][:n_lags]]
    if exog is not None:
        exog = np.asarray(exog, dtype=float)
        if exog.shape[0] != n:
            raise ValueError("exog rows must align with y")
        if exog_next is None:
            raise ValueError("exog_next is required when exog columns are used")
        blocks.append(exog[n_lags:])
        names.extend(exog_names if exog_names else [f"x{j}" for j in range(exog.shape[1])])
        query_parts.append(np.asarray(exog_next, dtype=float))
    if dummies:
        if months is None or month_next is None:
            raise ValueError("months and month_next are required for dummies")
        months = np.asarray(months, dtype=int)
        if len(months) != n:
            raise ValueError("months must align with y")
        blocks.append(seasonal_dummies(months[n_lags:]))
        names.extend(DUMMY_NAMES)
        query_parts.append(seasonal_dummies(np.array([month_next]))[0])
    return LagMatrix(
        X=np.hstack(blocks),
        targets=y[n_lags:],
        columns=tuple(names),
        query=np.concatenate(query_parts),
        n_lags=n_lags,
    )
