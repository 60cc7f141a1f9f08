"""Independent reference implementations the tests check against.

Nothing here reuses the library's recursions: the Kalman reference works on
the explicit joint Gaussian of all states and observations, and the route
reference exhaustively enumerates simple paths.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.stats import multivariate_normal


def joint_gaussian_reference(y, F, H, Q, R, m0, P0):
    """Filtered means, smoothed means and log-likelihood from first
    principles.

    State marginals come from unrolling x_t = F x_{t-1} + w_t, cross terms
    from Cov(x_s, x_t) = C_s (F^(t-s))^T, and every estimate is one Gaussian
    conditioning step on the observed subvector. Returns (filtered (T, n),
    smoothed (T, n), loglik).
    """
    y = np.asarray(y, dtype=float)
    F = np.asarray(F, dtype=float)
    Q = np.asarray(Q, dtype=float)
    P0 = np.asarray(P0, dtype=float)
    m0 = np.asarray(m0, dtype=float)
    T = y.size
    n = F.shape[0]
    H = np.asarray(H, dtype=float).reshape(1, n)
    observed = [t for t in range(T) if math.isfinite(y[t])]

    means = [m0]
    covs = [P0]
    for _ in range(1, T):
        means.append(F @ means[-1])
        covs.append(F @ covs[-1] @ F.T + Q)

    powers = [np.eye(n)]
    for _ in range(1, T):
        powers.append(F @ powers[-1])

    def cross(s, t):
        # Cov(x_s, x_t)
        if s <= t:
            return covs[s] @ powers[t - s].T
        return (covs[t] @ powers[s - t].T).T

    k = len(observed)
    mu_y = np.array([(H @ means[t]).item() for t in observed])
    S_yy = np.empty((k, k))
    for a, s in enumerate(observed):
        for b, t in enumerate(observed):
            S_yy[a, b] = (H @ cross(s, t) @ H.T).item() + (R if a == b else 0.0)

    def conditional_mean(t, upto):
        sel = [i for i, day in enumerate(observed) if upto is None or day <= upto]
        if not sel:
            return means[t]
        S_sub = S_yy[np.ix_(sel, sel)]
        S_xy = np.column_stack([cross(t, observed[i]) @ H.T for i in sel])
        resid = np.array([y[observed[i]] for i in sel]) - mu_y[sel]
        return means[t] + S_xy @ np.linalg.solve(S_sub, resid)

    filtered = np.vstack([conditional_mean(t, upto=t) for t in range(T)])
    smoothed = np.vstack([conditional_mean(t, upto=None) for t in range(T)])
    if observed:
        yv = np.array([y[t] for t in observed])
        loglik = float(multivariate_normal(mean=mu_y, cov=S_yy).logpdf(yv))
    else:
        loglik = 0.0
    return filtered, smoothed, loglik


def enumerate_best_route(grid, probabilities, start, goal):
    """Best simple path by brute force, under the same documented ordering
    the router uses: minimal (sum of -ln(1 - p) node weights, cell count,
    id sequence). Returns (path, survival) or None if the goal is
    unreachable."""
    cap = 1.0 - 1e-12

    def weight(pid):
        return -math.log1p(-min(probabilities[pid], cap))

    best = None
    stack = [(start, (start,), weight(start))]
    while stack:
        node, path, cost = stack.pop()
        if node == goal:
            key = (cost, len(path), path)
            if best is None or key < best:
                best = key
            continue
        for nxt in grid.neighbors(node):
            if nxt not in path:
                stack.append((nxt, path + (nxt,), cost + weight(nxt)))
    if best is None:
        return None
    path = best[2]
    survival = 1.0
    for pid in path:
        survival *= 1.0 - probabilities[pid]
    return path, survival


def make_filter_case(seed):
    """Seeded random filter scenario: series length <= 5, state dim <= 3.

    Case harness, not reference math; it builds the model through the
    library on purpose so oracle and implementation see identical F, H, Q, R.
    Returns (y, model, init).
    """
    from icecast.kalman import FilterState, build_model

    rng = np.random.default_rng(seed)
    shape = int(rng.integers(0, 3))
    if shape == 0:
        kind, harmonics, n = "level", 0, 1
    elif shape == 1:
        kind, harmonics, n = "trend", 0, 2
    else:
        kind, harmonics, n = "level", 1, 3
    period = float(rng.uniform(3.0, 400.0))
    q_diag = rng.uniform(1e-4, 0.05, size=n)
    r = float(rng.uniform(1e-3, 0.05))
    model = build_model(kind, harmonics, period, q_diag=q_diag, r=r)

    T = int(rng.integers(2, 6))
    y = rng.uniform(0.0, 1.0, size=T)
    gaps = rng.random(T) < 0.25
    if gaps.all():
        gaps[int(rng.integers(0, T))] = False
    y[gaps] = np.nan

    m0 = rng.normal(0.0, 1.0, size=n)
    A = rng.normal(0.0, 1.0, size=(n, n))
    P0 = A @ A.T + 0.1 * np.eye(n)
    init = FilterState(m=m0, P=P0, t=0)
    return y, model, init


def gaussian_tail_by_quadrature(mean, sigma, threshold):
    """P(X > threshold) for X ~ N(mean, sigma^2) via adaptive quadrature,
    never via a closed-form normal CDF."""
    from scipy.integrate import quad

    def pdf(x):
        z = (x - mean) / sigma
        return math.exp(-0.5 * z * z) / (sigma * math.sqrt(2.0 * math.pi))

    upper = mean + 40.0 * sigma
    value, _err = quad(pdf, threshold, upper, limit=400)
    return value
