"""Linear-Gaussian state-space modelling of per-point concentration series.

Dynamics  x_t = F x_{t-1} + w_t,  w_t ~ N(0, Q)   (Q diagonal)
Observed  y_t = H x_t + v_t,      v_t ~ N(0, R)   (scalar R)

Model kinds
-----------
level   n = 1, F = [1], H = [1]               random-walk level
trend   n = 2, F = [[1, 1], [0, 1]], H = [1, 0]  level + slope
Each seasonal harmonic j (j = 1..k) appends a 2-state rotation block with
angle 2*pi*j/period,

    [[cos a, -sin a],
     [sin a,  cos a]]

and extends H with [1, 0], so the observation picks up the cosine leg of
every harmonic.

Filtering convention: the init FilterState is the prior for day 0. The
filter predicts into each subsequent day and updates only on observed days;
gap days (NaN) contribute no likelihood term. Missing data therefore obey
the exact level-model law var(t + g) = P_t + g * Q.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from datetime import date
from pathlib import Path

import numpy as np
from scipy.optimize import minimize

from .errors import (
    DegenerateModelError,
    InsufficientDataError,
    ModelError,
    ParseError,
)

VARIANCE_FLOOR = 1e-12
DEFAULT_PERIOD = 365.25
MODEL_HEADER = "#icemodel v1"
KINDS = ("level", "trend")


@dataclass(frozen=True, eq=False)
class StateSpaceModel:
    """Immutable model structure plus noise parameters.

    q_diag is the diagonal of the process-noise covariance Q; arrays are
    read-only. Instances compare by identity; use with_noise() to derive
    variants.
    """

    kind: str
    n: int
    F: np.ndarray
    H: np.ndarray
    q_diag: np.ndarray
    r: float
    seasonal_harmonics: int
    seasonal_period: float

    @property
    def Q(self) -> np.ndarray:
        return np.diag(self.q_diag)

    def with_noise(self, q_diag, r: float) -> "StateSpaceModel":
        q = np.asarray(q_diag, dtype=float)
        if q.shape != (self.n,):
            raise ValueError(f"q_diag must have shape ({self.n},), got {q.shape}")
        if np.any(q < 0) or r < 0:
            raise ValueError("noise variances must be non-negative")
        q.setflags(write=False)
        return replace(self, q_diag=q, r=float(r))

    def component_slots(self) -> list[list[int]]:
        """State indices grouped by structural component; each harmonic
        block shares one process variance across its two states."""
        slots = [[0]] if self.kind == "level" else [[0], [1]]
        base = len(slots)
        for j in range(self.seasonal_harmonics):
            slots.append([base + 2 * j, base + 2 * j + 1])
        return slots


@dataclass(frozen=True, eq=False)
class FilterState:
    """Gaussian belief N(m, P) at day index t."""

    m: np.ndarray
    P: np.ndarray
    t: int


@dataclass(frozen=True)
class Forecast:
    """Predictive distribution for the observation at a given horizon."""

    horizon: int
    mean: float
    variance: float

    @property
    def mean_clipped(self) -> float:
        return min(1.0, max(0.0, self.mean))


@dataclass(frozen=True, eq=False)
class FilterResult:
    """Per-day posterior states plus the quantities the smoother needs."""

    states: tuple[FilterState, ...]
    log_likelihood: float
    predicted_means: np.ndarray  # (T, n) prior mean entering each day
    predicted_covs: np.ndarray  # (T, n, n) prior covariance entering each day
    observed: np.ndarray  # (T,) bool


@dataclass(frozen=True, eq=False)
class FitResult:
    model: StateSpaceModel
    log_likelihood: float
    iterations: int
    converged: bool
    trace: tuple[float, ...]  # best-so-far log-likelihood per iteration


def build_model(
    kind: str = "level",
    seasonal_harmonics: int = 0,
    seasonal_period: float = DEFAULT_PERIOD,
    q_diag=None,
    r: float = 0.0,
) -> StateSpaceModel:
    """Assemble F and H for the requested structure; noise defaults to zero."""
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}, got {kind!r}")
    if seasonal_harmonics < 0:
        raise ValueError(f"seasonal_harmonics must be >= 0, got {seasonal_harmonics}")
    if seasonal_period <= 0:
        raise ValueError(f"seasonal_period must be positive, got {seasonal_period}")

    if kind == "level":
        core_f = np.array([[1.0]])
        core_h = [1.0]
    else:
        core_f = np.array([[1.0, 1.0], [0.0, 1.0]])
        core_h = [1.0, 0.0]

    blocks = [core_f]
    h = list(core_h)
    for j in range(1, seasonal_harmonics + 1):
        a = 2.0 * math.pi * j / seasonal_period
        blocks.append(np.array([[math.cos(a), -math.sin(a)], [math.sin(a), math.cos(a)]]))
        h.extend([1.0, 0.0])

    n = sum(b.shape[0] for b in blocks)
    F = np.zeros((n, n))
    at = 0
    for b in blocks:
        k = b.shape[0]
        F[at : at + k, at : at + k] = b
        at += k
    H = np.array(h)

    if q_diag is None:
        q_diag = np.zeros(n)
    q_diag = np.asarray(q_diag, dtype=float)
    if q_diag.shape != (n,):
        raise ValueError(f"q_diag must have shape ({n},), got {q_diag.shape}")
    if np.any(q_diag < 0) or r < 0:
        raise ValueError("noise variances must be non-negative")
    for arr in (F, H, q_diag):
        arr.setflags(write=False)
    return StateSpaceModel(
        kind=kind,
        n=n,
        F=F,
        H=H,
        q_diag=q_diag,
        r=float(r),
        seasonal_harmonics=seasonal_harmonics,
        seasonal_period=float(seasonal_period),
    )


def default_init(model: StateSpaceModel, y) -> FilterState:
    """Documented initialization: level slot starts at the first observed
    value, everything else at 0; P0 = I."""
    y = np.asarray(y, dtype=float)
    observed = y[np.isfinite(y)]
    m = np.zeros(model.n)
    if observed.size:
        m[0] = observed[0]
    return FilterState(m=m, P=np.eye(model.n), t=0)


def _check_dims(state: FilterState, model: StateSpaceModel):
    if state.m.shape != (model.n,) or state.P.shape != (model.n, model.n):
        raise ValueError(
            f"state dimensions {state.m.shape}/{state.P.shape} do not match model n={model.n}"
        )


def _symmetrize(P: np.ndarray) -> np.ndarray:
    P = (P + P.T) / 2.0
    d = np.diagonal(P)
    if d.min() < -1e-12:
        raise DegenerateModelError(f"covariance diagonal went negative: {d.min()}")
    if (d < 0).any():
        P = P.copy()
        np.fill_diagonal(P, np.maximum(d, 0.0))
    return P


def kf_predict(state: FilterState, model: StateSpaceModel) -> FilterState:
    """Time update: m' = F m, P' = F P F^T + Q, t' = t + 1."""
    _check_dims(state, model)
    m = model.F @ state.m
    P = _symmetrize(model.F @ state.P @ model.F.T + model.Q)
    return FilterState(m=m, P=P, t=state.t + 1)


def kf_update(
    state: FilterState, model: StateSpaceModel, y: float
) -> tuple[FilterState, float, float, float]:
    """Measurement update on a predicted state.

    Returns (posterior, innovation, innovation variance, log-density
    contribution -(ln(2 pi S) + nu^2/S)/2).
    """
    _check_dims(state, model)
    if not math.isfinite(y):
        raise ValueError(f"observation must be finite, got {y!r}")
    H = model.H
    S = float(H @ state.P @ H + model.r)
    if S <= 0:
        raise DegenerateModelError(f"innovation variance S={S} is not positive")
    nu = float(y - H @ state.m)
    K = state.P @ H / S
    m = state.m + K * nu
    P = _symmetrize((np.eye(model.n) - np.outer(K, H)) @ state.P)
    logdens = -0.5 * (math.log(2.0 * math.pi * S) + nu * nu / S)
    return FilterState(m=m, P=P, t=state.t), nu, S, logdens


def kf_filter(y, model: StateSpaceModel, init: FilterState | None = None) -> FilterResult:
    """Filter a daily series (NaN marks gap days).

    Day 0 starts from the init prior; every later day is predicted into, and
    observed days are updated. The summed log-likelihood covers observed
    days only.
    """
    y = np.asarray(y, dtype=float)
    if y.ndim != 1 or y.size == 0:
        raise ValueError("series must be a non-empty 1-d array")
    if init is None:
        init = default_init(model, y)
    _check_dims(init, model)
    observed = np.isfinite(y)

    if model.n == 1:
        return _filter_scalar(y, model, init, observed)

    T = y.size
    pred_m = np.empty((T, model.n))
    pred_P = np.empty((T, model.n, model.n))
    states = []
    state = init
    loglik = 0.0
    for t in range(T):
        if t > 0:
            state = kf_predict(state, model)
        pred_m[t] = state.m
        pred_P[t] = state.P
        if observed[t]:
            state, _, _, logdens = kf_update(state, model, float(y[t]))
            loglik += logdens
        states.append(state)
    return FilterResult(tuple(states), loglik, pred_m, pred_P, observed)


def _filter_scalar(y, model, init, observed) -> FilterResult:
    # same recursion as the matrix path, specialised to n == 1 because the
    # fit objective re-runs it hundreds of times over multi-year series
    f = float(model.F[0, 0])
    h = float(model.H[0])
    q = float(model.q_diag[0])
    r = model.r
    m = float(init.m[0])
    p = float(init.P[0, 0])
    T = y.size
    ms = np.empty(T)
    ps = np.empty(T)
    pred_m = np.empty(T)
    pred_p = np.empty(T)
    loglik = 0.0
    log2pi = math.log(2.0 * math.pi)
    for t in range(T):
        if t > 0:
            m = f * m
            p = f * p * f + q
        pred_m[t] = m
        pred_p[t] = p
        if observed[t]:
            s = h * p * h + r
            if s <= 0:
                raise DegenerateModelError(f"innovation variance S={s} is not positive")
            nu = y[t] - h * m
            k = p * h / s
            m = m + k * nu
            p = (1.0 - k * h) * p
            if p < -1e-12:
                raise DegenerateModelError(f"covariance diagonal went negative: {p}")
            p = max(p, 0.0)
            loglik += -0.5 * (log2pi + math.log(s) + nu * nu / s)
        ms[t] = m
        ps[t] = p
    states = tuple(
        FilterState(m=np.array([ms[t]]), P=np.array([[ps[t]]]), t=t) for t in range(T)
    )
    return FilterResult(
        states,
        loglik,
        pred_m.reshape(-1, 1),
        pred_p.reshape(-1, 1, 1),
        observed,
    )


def kf_smooth(result: FilterResult, model: StateSpaceModel) -> tuple[FilterState, ...]:
    """Backward (fixed-interval) smoothing pass over a filter result.

    The gain at t is G = P_t F^T (P_{t+1|t})^-1. A singular predicted
    covariance is tolerated only in the deterministic limit where the gain
    numerator vanishes too (e.g. Q = R = 0); otherwise the model is
    degenerate.
    """
    T = len(result.states)
    F = model.F
    smoothed = [result.states[-1]]
    for t in range(T - 2, -1, -1):
        ft = result.states[t]
        pp = result.predicted_covs[t + 1]
        pm = result.predicted_means[t + 1]
        numer = ft.P @ F.T
        try:
            G = np.linalg.solve(pp.T, numer.T).T
            if not np.all(np.isfinite(G)):
                raise np.linalg.LinAlgError
        except np.linalg.LinAlgError:
            if np.allclose(numer, 0.0, atol=1e-300):
                G = np.zeros_like(numer)
            else:
                raise DegenerateModelError(
                    f"singular predicted covariance at day {t + 1}"
                ) from None
        nxt = smoothed[-1]
        m = ft.m + G @ (nxt.m - pm)
        P = _symmetrize(ft.P + G @ (nxt.P - pp) @ G.T)
        smoothed.append(FilterState(m=m, P=P, t=ft.t))
    smoothed.reverse()
    return tuple(smoothed)


def forecast(state: FilterState, model: StateSpaceModel, horizon: int) -> list[Forecast]:
    """h-step-ahead predictive distributions in observation space."""
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    out = []
    cur = state
    for h in range(1, horizon + 1):
        cur = kf_predict(cur, model)
        mean = float(model.H @ cur.m)
        var = float(model.H @ cur.P @ model.H + model.r)
        out.append(Forecast(horizon=h, mean=mean, variance=var))
    return out


def simulate(model: StateSpaceModel, x0, days: int, seed: int) -> np.ndarray:
    """Draw an observation series from the model.

    x_0 is taken exactly as given; states then evolve with process noise and
    every day is observed with noise R. Randomness comes from NumPy's PCG64
    generator (numpy.random.default_rng(seed)): all process draws first,
    then all observation draws, so output is reproducible per seed.
    """
    if days < 1:
        raise ValueError(f"days must be >= 1, got {days}")
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (model.n,):
        raise ValueError(f"x0 must have shape ({model.n},), got {x0.shape}")
    rng = np.random.default_rng(seed)
    w = rng.standard_normal((days, model.n)) * np.sqrt(model.q_diag)
    v = rng.standard_normal(days) * math.sqrt(model.r)
    y = np.empty(days)
    x = x0
    for t in range(days):
        if t > 0:
            x = model.F @ x + w[t]
        y[t] = model.H @ x + v[t]
    return y


def fit(
    y,
    kind: str = "level",
    seasonal_harmonics: int = 0,
    seasonal_period: float = DEFAULT_PERIOD,
    tol: float = 1e-8,
    max_iter: int = 500,
) -> FitResult:
    """Maximum-likelihood noise variances via Nelder-Mead on log parameters.

    One log-variance per structural component plus log R, started from the
    fixed point (1e-3 process, 1e-2 observation). The search stops once the
    simplex log-likelihood spread falls below ``tol`` relative to the
    starting magnitude (a literal per-iteration change test would fire on
    simplex stalls), or after ``max_iter`` iterations. Deterministic:
    refitting the same data reproduces the result bit for bit.
    """
    y = np.asarray(y, dtype=float)
    n_observed = int(np.isfinite(y).sum())
    if n_observed < 10:
        raise InsufficientDataError(
            f"need at least 10 observed days to fit, got {n_observed}"
        )
    structure = build_model(kind, seasonal_harmonics, seasonal_period)
    slots = structure.component_slots()
    init = default_init(structure, y)

    def expand(theta: np.ndarray) -> tuple[np.ndarray, float]:
        with np.errstate(over="ignore"):
            variances = np.maximum(np.exp(theta), VARIANCE_FLOOR)
        q = np.empty(structure.n)
        for var, idx in zip(variances[:-1], slots):
            q[idx] = var
        return q, float(variances[-1])

    best = {"ll": -math.inf, "theta": None}

    def nll(theta: np.ndarray) -> float:
        q, r = expand(theta)
        try:
            # overflow to inf is handled by the finiteness check below
            with np.errstate(over="ignore", invalid="ignore"):
                ll = kf_filter(y, structure.with_noise(q, r), init).log_likelihood
        except DegenerateModelError:
            return 1e300
        if not math.isfinite(ll):
            return 1e300
        if ll > best["ll"]:
            best["ll"] = ll
            best["theta"] = theta.copy()
        return -ll

    theta0 = np.array([math.log(1e-3)] * len(slots) + [math.log(1e-2)])
    f0 = nll(theta0)
    if f0 >= 1e300:
        raise ModelError("log-likelihood is not finite at the starting parameters")

    trace: list[float] = []

    def on_iteration(_xk):
        trace.append(best["ll"])

    res = minimize(
        nll,
        theta0,
        method="Nelder-Mead",
        callback=on_iteration,
        options={
            "maxiter": max_iter,
            "xatol": 1e-4,
            "fatol": tol * max(1.0, abs(f0)),
        },
    )
    q, r = expand(best["theta"])
    fitted = structure.with_noise(q, r)
    return FitResult(
        model=fitted,
        log_likelihood=best["ll"],
        iterations=len(trace),
        converged=bool(res.success),
        trace=tuple(trace),
    )


@dataclass(frozen=True, eq=False)
class PointModel:
    """A fitted model bound to a grid point and its training window: the
    payload of an `#icemodel v1` file."""

    point_id: int
    model: StateSpaceModel
    init: FilterState  # day-0 prior used in fitting
    state: FilterState  # posterior at the last training day
    last_day: date
    log_likelihood: float
    iterations: int
    converged: bool


def fit_point(
    point_id: int,
    y,
    from_day: date,
    to_day: date,
    kind: str = "level",
    seasonal_harmonics: int = 0,
    seasonal_period: float = DEFAULT_PERIOD,
) -> PointModel:
    """Fit a daily series (NaN gaps) and capture the final filtered state."""
    result = fit(y, kind, seasonal_harmonics, seasonal_period)
    init = default_init(result.model, y)
    run = kf_filter(y, result.model, init)
    expected_days = (to_day - from_day).days + 1
    if len(run.states) != expected_days:
        raise ValueError(
            f"series length {len(run.states)} does not cover {from_day}..{to_day}"
        )
    return PointModel(
        point_id=point_id,
        model=result.model,
        init=init,
        state=run.states[-1],
        last_day=to_day,
        log_likelihood=result.log_likelihood,
        iterations=result.iterations,
        converged=result.converged,
    )


def _fmt_vec(v: np.ndarray) -> str:
    return ",".join(repr(float(x)) for x in np.asarray(v).ravel())


def model_to_text(pm: PointModel) -> str:
    m = pm.model
    lines = [
        MODEL_HEADER,
        f"point={pm.point_id}",
        f"kind={m.kind}",
        f"seasonal_harmonics={m.seasonal_harmonics}",
        f"seasonal_period={float(m.seasonal_period)!r}",
        f"q_diag={_fmt_vec(m.q_diag)}",
        f"r={float(m.r)!r}",
        f"init_m={_fmt_vec(pm.init.m)}",
        f"init_p={_fmt_vec(pm.init.P)}",
        f"last_day={pm.last_day.isoformat()}",
        f"state_t={pm.state.t}",
        f"state_m={_fmt_vec(pm.state.m)}",
        f"state_p={_fmt_vec(pm.state.P)}",
        f"log_likelihood={float(pm.log_likelihood)!r}",
        f"iterations={pm.iterations}",
        f"converged={'true' if pm.converged else 'false'}",
    ]
    return "\n".join(lines) + "\n"


def model_from_text(text: str) -> PointModel:
    fields: dict[str, str] = {}
    lines = text.splitlines()
    if not lines or lines[0].strip() != MODEL_HEADER:
        raise ParseError(f"missing {MODEL_HEADER} header")
    for line_no, raw in enumerate(lines[1:], start=2):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ParseError(f"expected key=value, got {line!r}", line_no)
        key, _, value = line.partition("=")
        fields[key.strip()] = value.strip()
    try:
        model = build_model(
            kind=fields["kind"],
            seasonal_harmonics=int(fields["seasonal_harmonics"]),
            seasonal_period=float(fields["seasonal_period"]),
            q_diag=[float(x) for x in fields["q_diag"].split(",")],
            r=float(fields["r"]),
        )
        n = model.n

        def vec(key):
            v = np.array([float(x) for x in fields[key].split(",")])
            if v.size != n:
                raise ValueError(f"{key} must have {n} entries")
            return v

        def mat(key):
            v = np.array([float(x) for x in fields[key].split(",")])
            if v.size != n * n:
                raise ValueError(f"{key} must have {n * n} entries")
            return v.reshape(n, n)

        return PointModel(
            point_id=int(fields["point"]),
            model=model,
            init=FilterState(m=vec("init_m"), P=mat("init_p"), t=0),
            state=FilterState(m=vec("state_m"), P=mat("state_p"), t=int(fields["state_t"])),
            last_day=date.fromisoformat(fields["last_day"]),
            log_likelihood=float(fields["log_likelihood"]),
            iterations=int(fields["iterations"]),
            converged=fields["converged"] == "true",
        )
    except KeyError as exc:
        raise ParseError(f"missing field {exc.args[0]}") from None
    except ValueError as exc:
        raise ParseError(str(exc)) from None


def save_model(pm: PointModel, path: str | Path):
    Path(path).write_text(model_to_text(pm), encoding="ascii")


def load_model(path: str | Path) -> PointModel:
    return model_from_text(Path(path).read_text(encoding="ascii"))
