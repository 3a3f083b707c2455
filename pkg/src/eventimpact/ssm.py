"""Structural time-series model: Kalman filter, likelihood, MLE and forecasting.

The model is a univariate unobserved-components model

    y_t = level_t + seasonal_t + x_t' beta + eps_t,          eps_t ~ N(0, obs_var)
    level_{t+1} = level_t + slope_t + eta_t,                 eta_t ~ N(0, level_var)
    slope_{t+1} = slope_t + zeta_t,                          zeta_t ~ N(0, trend_var)
    seasonal_{t+1} = -sum_{j=0..5} seasonal_{t-j} + omega_t, omega_t ~ N(0, seasonal_var)
    beta_{t+1} = beta_t

with the slope and the period-7 seasonal optional. Regression coefficients are
carried as constant states so a single filter pass handles everything.

Initialization is approximately diffuse: covariance ``kappa * I`` with
``kappa = diffuse_kappa * var(y)``, and a prior mean that is zero except for
the level, which starts at the first observation. Anchoring the level makes
the likelihood exactly invariant to adding a constant to ``y``. The first
``d`` one-step terms of the likelihood (``d`` = state dimension) are dropped,
which removes almost all of the remaining dependence on the prior.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import mpmath
import numpy as np
from numba import njit
from scipy import optimize

from .errors import FitError, NumericError, ValidationError

SEASON = 7


@dataclass(frozen=True)
class ModelSpec:
    """Which components the model carries.

    The level is always present; the regression block has one constant state
    per covariate column.
    """

    has_trend: bool = True
    has_weekly_seasonal: bool = False
    n_covariates: int = 0
    has_level: bool = field(default=True, init=False)

    def __post_init__(self):
        if self.n_covariates < 0:
            raise ValidationError("n_covariates must be >= 0")

    @property
    def state_dim(self) -> int:
        return 1 + int(self.has_trend) + (SEASON - 1) * int(self.has_weekly_seasonal) + self.n_covariates

    @property
    def param_names(self) -> tuple[str, ...]:
        names = ["obs_var", "level_var"]
        if self.has_trend:
            names.append("trend_var")
        if self.has_weekly_seasonal:
            names.append("seasonal_var")
        return tuple(names)

    @property
    def _seasonal_index(self) -> int:
        return 1 + int(self.has_trend)

    @property
    def regression_slice(self) -> slice:
        m = self.state_dim
        return slice(m - self.n_covariates, m)

    def transition(self) -> np.ndarray:
        m = self.state_dim
        T = np.zeros((m, m))
        T[0, 0] = 1.0
        if self.has_trend:
            T[0, 1] = 1.0
            T[1, 1] = 1.0
        if self.has_weekly_seasonal:
            s = self._seasonal_index
            T[s, s : s + SEASON - 1] = -1.0
            for i in range(1, SEASON - 1):
                T[s + i, s + i - 1] = 1.0
        r = self.regression_slice
        T[r, r] = np.eye(self.n_covariates)
        return T

    def state_cov(self, params: VarianceParams) -> np.ndarray:
        m = self.state_dim
        Q = np.zeros((m, m))
        Q[0, 0] = params.level_var
        if self.has_trend:
            Q[1, 1] = params.trend_var
        if self.has_weekly_seasonal:
            s = self._seasonal_index
            Q[s, s] = params.seasonal_var
        return Q

    def fixed_design(self) -> np.ndarray:
        """Observation row with the regression entries left at zero."""
        z = np.zeros(self.state_dim)
        z[0] = 1.0
        if self.has_weekly_seasonal:
            z[self._seasonal_index] = 1.0
        return z


@dataclass(frozen=True)
class VarianceParams:
    obs_var: float
    level_var: float
    trend_var: float | None = None
    seasonal_var: float | None = None

    def __post_init__(self):
        vals = [v for v in (self.obs_var, self.level_var, self.trend_var, self.seasonal_var) if v is not None]
        if not all(math.isfinite(v) for v in vals):
            raise ValidationError(f"non-finite variance in {self}")
        if self.obs_var < 0 or any(v < 0 for v in vals):
            raise ValidationError(f"negative variance in {self}")

    def check(self, spec: ModelSpec) -> None:
        if spec.has_trend != (self.trend_var is not None):
            raise ValidationError("trend_var must be given iff the model has a trend")
        if spec.has_weekly_seasonal != (self.seasonal_var is not None):
            raise ValidationError("seasonal_var must be given iff the model has a weekly seasonal")

    def to_vector(self, spec: ModelSpec) -> np.ndarray:
        return np.array([getattr(self, n) for n in spec.param_names], dtype=float)

    @classmethod
    def from_vector(cls, spec: ModelSpec, values) -> VarianceParams:
        return cls(**{n: float(v) for n, v in zip(spec.param_names, values)})


@dataclass(frozen=True, eq=False)
class FilterResult:
    loglik: float
    one_step_means: np.ndarray
    one_step_vars: np.ndarray
    final_state_mean: np.ndarray
    final_state_cov: np.ndarray
    burn_in: int
    kappa: float
    predicted_covs: np.ndarray | None = None
    filtered_covs: np.ndarray | None = None


@dataclass(frozen=True, eq=False)
class FittedModel:
    spec: ModelSpec
    params: VarianceParams
    loglik: float
    filter: FilterResult
    n_obs: int
    # best loglik after each start, in start order (non-decreasing)
    start_trace: tuple[float, ...] = ()
    diagnostics: tuple[str, ...] = ()


@dataclass(frozen=True, eq=False)
class ForecastDraws:
    horizon: int
    mean_path: np.ndarray
    draws: np.ndarray
    seed: int


@dataclass(frozen=True)
class OptimizerConfig:
    """MLE search settings.

    ``start_scales`` multiply ``var(y)`` to give the starting value of every
    variance. Log-variances are bounded to ``var(y) * [lower, upper]``.
    """

    n_starts: int = 3
    tol: float = 1e-6
    max_iter: int = 500
    diffuse_kappa: float = 1e6
    lower: float = 1e-10
    upper: float = 1e4

    @property
    def start_scales(self) -> np.ndarray:
        if self.n_starts == 1:
            return np.array([1.0])
        return np.logspace(-2, 2, self.n_starts)


def _data_scale(y: np.ndarray) -> float:
    v = float(np.var(y)) if y.size > 1 else 0.0
    return v if v > 0 and math.isfinite(v) else 1.0


def _as_inputs(spec: ModelSpec, y, X) -> tuple[np.ndarray, np.ndarray]:
    y = np.asarray(y, dtype=float).reshape(-1)
    if X is None:
        X = np.zeros((y.size, 0))
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if X.shape[0] != y.size:
        raise ValidationError(f"y has {y.size} rows but X has {X.shape[0]}")
    if X.shape[1] != spec.n_covariates:
        raise ValidationError(f"X has {X.shape[1]} columns, spec expects {spec.n_covariates}")
    if not (np.all(np.isfinite(y)) and np.all(np.isfinite(X))):
        raise ValidationError("non-finite values in y or X")
    return np.ascontiguousarray(y), np.ascontiguousarray(X)


@njit(cache=True)
def _triangularize(A):
    """In-place Householder reduction of ``A`` to upper-triangular form.

    Only the triangular factor is kept; the orthogonal factor is discarded,
    which is all an array-form square-root filter needs.
    """
    rows, cols = A.shape
    for j in range(min(rows, cols)):
        norm = 0.0
        for i in range(j, rows):
            norm += A[i, j] * A[i, j]
        norm = np.sqrt(norm)
        if norm == 0.0:
            continue
        alpha = -norm if A[j, j] >= 0 else norm
        v0 = A[j, j] - alpha
        vnorm2 = v0 * v0
        for i in range(j + 1, rows):
            vnorm2 += A[i, j] * A[i, j]
        if vnorm2 == 0.0:
            continue
        for c in range(j + 1, cols):
            s = v0 * A[j, c]
            for i in range(j + 1, rows):
                s += A[i, j] * A[i, c]
            f = 2.0 * s / vnorm2
            A[j, c] -= f * v0
            for i in range(j + 1, rows):
                A[i, c] -= f * A[i, j]
        A[j, j] = alpha
        for i in range(j + 1, rows):
            A[i, j] = 0.0


@njit(cache=True)
def _filter_core(y, X, T, q_sd, H, z0, a0, S0, burn, keep_covs):
    # Square-root covariance filter: P = S S' throughout. The update
    # triangularizes [[sqrt(H), 0], [S'z, S']]; the predict step
    # triangularizes [(T S)'; sqrt(Q)].
    n = y.size
    m = a0.size
    k = X.shape[1]
    off = m - k
    a = a0.copy()
    S = S0.copy()
    z = z0.copy()
    means = np.empty(n)
    variances = np.empty(n)
    n_keep = n if keep_covs else 0
    pred_covs = np.empty((n_keep, m, m))
    filt_covs = np.empty((n_keep, m, m))
    M = np.zeros((m + 1, m + 1))
    Mp = np.zeros((2 * m, m))
    sh = np.sqrt(H)
    ll = 0.0
    for t in range(n):
        for j in range(k):
            z[off + j] = X[t, j]
        if keep_covs:
            pred_covs[t] = S @ S.T
        M[:, :] = 0.0
        M[0, 0] = sh
        for i in range(m):
            s = 0.0
            for j in range(m):
                s += S[j, i] * z[j]
            M[i + 1, 0] = s
            for j in range(m):
                M[i + 1, j + 1] = S[j, i]
        _triangularize(M)
        r0 = M[0, 0]
        v = r0 * r0
        mu = 0.0
        for j in range(m):
            mu += z[j] * a[j]
        means[t] = mu
        variances[t] = v
        if not (v > 0.0) or not np.isfinite(v):
            return ll, means, variances, a, S, pred_covs, filt_covs, t + 1
        e = y[t] - mu
        if t >= burn:
            ll += -0.5 * (np.log(2.0 * np.pi * v) + e * e / v)
        for j in range(m):
            a[j] += M[0, j + 1] * (e / r0)
            for i in range(m):
                S[i, j] = M[j + 1, i + 1]
        if keep_covs:
            filt_covs[t] = S @ S.T
        if t < n - 1:
            a = T @ a
            TS = T @ S
            Mp[:, :] = 0.0
            for i in range(m):
                for j in range(m):
                    Mp[i, j] = TS[j, i]
                Mp[m + i, i] = q_sd[i]
            _triangularize(Mp)
            for i in range(m):
                for j in range(m):
                    S[i, j] = Mp[j, i]
    return ll, means, variances, a, S, pred_covs, filt_covs, 0


def diffuse_kappa(y, scale: float = 1e6) -> float:
    return scale * _data_scale(np.asarray(y, dtype=float))


def prior_mean(spec: ModelSpec, y: np.ndarray) -> np.ndarray:
    a0 = np.zeros(spec.state_dim)
    a0[0] = y[0]
    return a0


def kalman_filter(
    spec: ModelSpec, params: VarianceParams, y, X=None, kappa: float | None = None, keep_covs: bool = False
) -> FilterResult:
    """Run the filter and return the burn-in adjusted log-likelihood.

    Parameters
    ----------
    spec, params : model structure and disturbance variances
    y : (n,) array
    X : (n, spec.n_covariates) array, optional
    kappa : float, optional
        Initial state variance. Defaults to ``1e6 * var(y)``.
    keep_covs : bool
        Also return the predicted and filtered state covariance at every step.
    """
    params.check(spec)
    y, X = _as_inputs(spec, y, X)
    if y.size == 0:
        raise ValidationError("empty series")
    m = spec.state_dim
    if kappa is None:
        kappa = diffuse_kappa(y)
    ll, means, variances, a, S, pred, filt, status = _filter_core(
        y, X, spec.transition(), np.sqrt(np.diag(spec.state_cov(params))), float(params.obs_var),
        spec.fixed_design(), prior_mean(spec, y), math.sqrt(kappa) * np.eye(m), m, keep_covs,
    )
    if status:
        raise NumericError(f"one-step variance collapsed at t={status - 1} (v={variances[status - 1]!r})")
    return FilterResult(
        float(ll), means, variances, a, S @ S.T, burn_in=m, kappa=float(kappa),
        predicted_covs=pred if keep_covs else None, filtered_covs=filt if keep_covs else None,
    )


def loglik_bruteforce(
    spec: ModelSpec, params: VarianceParams, y, X=None, kappa: float | None = None, dps: int = 40
) -> float:
    """Dense joint-Gaussian log-likelihood, for checking :func:`kalman_filter`.

    Builds the full covariance of ``y`` implied by the model (state prior
    propagated without conditioning, plus the lagged cross-covariances), then
    evaluates the density of the observations after the burn-in conditional
    on the burn-in observations. Everything runs in ``dps``-digit arithmetic
    because the near-diffuse prior makes the joint covariance too
    ill-conditioned for float64.
    """
    params.check(spec)
    y, X = _as_inputs(spec, y, X)
    n = y.size
    if n > 12:
        raise ValidationError(f"brute-force likelihood limited to 12 observations, got {n}")
    m = spec.state_dim
    if kappa is None:
        kappa = diffuse_kappa(y)
    d = min(m, n)
    if d == n:
        return 0.0

    with mpmath.workdps(dps):
        mpf = mpmath.mpf
        T = mpmath.matrix(spec.transition().tolist())
        Q = mpmath.matrix(spec.state_cov(params).tolist())
        Zf = np.tile(spec.fixed_design(), (n, 1))
        Zf[:, spec.regression_slice] = X
        Z = [mpmath.matrix(row.tolist()) for row in Zf]

        mean = mpmath.matrix(prior_mean(spec, y).tolist())
        cov = mpmath.eye(m) * mpf(kappa)
        means, covs = [], []
        for t in range(n):
            if t:
                mean = T * mean
                cov = T * cov * T.T + Q
            means.append(mean)
            covs.append(cov)
        powers = [mpmath.eye(m)]
        for _ in range(n):
            powers.append(T * powers[-1])

        # Cov(y_t, y_s) = z_t' T^(t-s) P_s z_s for t >= s
        S = mpmath.matrix(n, n)
        r = mpmath.matrix(n, 1)
        for t in range(n):
            r[t] = mpf(float(y[t])) - (Z[t].T * means[t])[0]
            for s in range(t + 1):
                S[t, s] = S[s, t] = (Z[t].T * powers[t - s] * covs[s] * Z[s])[0]
            S[t, t] += mpf(params.obs_var)

        S11, S12, S22 = S[0:d, 0:d], S[0:d, d:n], S[d:n, d:n]
        A = mpmath.inverse(S11)
        cond_mean = r[d:n, 0] - S12.T * A * r[0:d, 0]
        cond_cov = S22 - S12.T * A * S12
        quad = (cond_mean.T * mpmath.inverse(cond_cov) * cond_mean)[0]
        ll = -(n - d) * mpmath.log(2 * mpmath.pi) / 2 - mpmath.log(mpmath.det(cond_cov)) / 2 - quad / 2
        return float(ll)


def _negloglik(logv, spec, y, X, kappa):
    try:
        params = VarianceParams.from_vector(spec, np.exp(logv))
        ll = kalman_filter(spec, params, y, X, kappa=kappa).loglik
    except (NumericError, ValidationError):
        return 1e300
    return -ll if math.isfinite(ll) else 1e300


def fit_mle(spec: ModelSpec, y, X=None, cfg: OptimizerConfig | None = None) -> FittedModel:
    """Maximum-likelihood fit of the disturbance variances.

    Searches over log-variances with bounded L-BFGS-B from ``cfg.n_starts``
    deterministic starting points and keeps the best.
    """
    cfg = cfg or OptimizerConfig()
    y, X = _as_inputs(spec, y, X)
    if y.size < spec.state_dim + 5:
        raise ValidationError(f"need at least {spec.state_dim + 5} observations, got {y.size}")
    scale = _data_scale(y)
    kappa = cfg.diffuse_kappa * scale
    p = len(spec.param_names)
    bounds = [(math.log(scale * cfg.lower), math.log(scale * cfg.upper))] * p

    best = None
    trace, diagnostics = [], []
    for s in cfg.start_scales:
        x0 = np.full(p, math.log(scale * s))
        f0 = _negloglik(x0, spec, y, X, kappa)
        ftol = cfg.tol / max(1.0, abs(f0)) if f0 < 1e300 else cfg.tol
        res = optimize.minimize(
            _negloglik, x0, args=(spec, y, X, kappa), method="L-BFGS-B", bounds=bounds,
            options={"maxiter": cfg.max_iter, "ftol": ftol, "gtol": 1e-8},
        )
        ok = res.fun < 1e300 and np.all(np.isfinite(res.x))
        diagnostics.append(f"start {s:g}: nll={res.fun:.10g} nit={res.nit} {res.message}")
        if ok and (best is None or res.fun < best.fun):
            best = res
        trace.append(-best.fun if best is not None else -math.inf)
    if best is None:
        raise FitError("no starting point produced a finite log-likelihood", diagnostics)
    params = VarianceParams.from_vector(spec, np.exp(best.x))
    filt = kalman_filter(spec, params, y, X, kappa=kappa)
    return FittedModel(spec, params, filt.loglik, filt, int(y.size), tuple(trace), tuple(diagnostics))


def _psd_sqrt(P: np.ndarray) -> np.ndarray:
    w, V = np.linalg.eigh(0.5 * (P + P.T))
    return V * np.sqrt(np.clip(w, 0.0, None))


def forecast(model: FittedModel, X_post=None, horizon: int | None = None, n_draws: int = 1000, seed: int = 0) -> ForecastDraws:
    """Predict ``horizon`` steps past the end of the training data.

    ``mean_path`` is the Kalman prediction; ``draws`` are simulated
    trajectories that include the filtered-state uncertainty, the state
    disturbances and the observation noise.
    """
    spec = model.spec
    k = spec.n_covariates
    if X_post is None:
        if horizon is None:
            raise ValidationError("give X_post or horizon")
        X_post = np.zeros((horizon, k))
    X_post = np.asarray(X_post, dtype=float)
    if X_post.ndim == 1:
        X_post = X_post.reshape(-1, max(k, 1)) if X_post.size else np.zeros((0, k))
    if horizon is None:
        horizon = X_post.shape[0]
    if X_post.shape != (horizon, k):
        raise ValidationError(f"X_post has shape {X_post.shape}, expected {(horizon, k)}")
    if n_draws < 100:
        raise ValidationError("n_draws must be >= 100")
    if not np.all(np.isfinite(X_post)):
        raise ValidationError("non-finite values in X_post")

    T = spec.transition()
    q_sd = np.sqrt(np.diag(spec.state_cov(model.params)))
    obs_sd = math.sqrt(model.params.obs_var)
    Z = np.tile(spec.fixed_design(), (horizon, 1))
    Z[:, spec.regression_slice] = X_post

    rng = np.random.default_rng(seed)
    a = model.filter.final_state_mean.copy()
    alpha = a + rng.standard_normal((n_draws, a.size)) @ _psd_sqrt(model.filter.final_state_cov).T
    mean_path = np.empty(horizon)
    draws = np.empty((n_draws, horizon))
    for h in range(horizon):
        a = T @ a
        alpha = alpha @ T.T + rng.standard_normal(alpha.shape) * q_sd
        mean_path[h] = Z[h] @ a
        draws[:, h] = alpha @ Z[h] + obs_sd * rng.standard_normal(n_draws)
    return ForecastDraws(int(horizon), mean_path, draws, int(seed))
