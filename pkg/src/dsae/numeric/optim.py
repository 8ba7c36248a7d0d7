"""Optimization kernels: log-domain utilities, Adam, L-BFGS with elastic
net (orthant-wise L1), and finite-difference gradient checking.

Everything is float64 and deterministic; objectives are callables
returning ``(value, gradient)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

Objective = Callable[[np.ndarray], tuple[float, np.ndarray]]


def logsumexp(values) -> float:
    """log(sum(exp(v))) with max-shift for overflow safety."""
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        raise ValueError("logsumexp of an empty array")
    m = float(np.max(v))
    if not np.isfinite(m):
        return m
    return m + float(np.log(np.sum(np.exp(v - m))))


def elastic_net(params: np.ndarray, c1: float, c2: float) -> tuple[float, np.ndarray]:
    """Penalty c1*||w||_1 + (c2/2)*||w||^2 and its subgradient (sign(0)=0)."""
    w = np.asarray(params, dtype=np.float64)
    penalty = c1 * float(np.sum(np.abs(w))) + 0.5 * c2 * float(np.dot(w, w))
    sub = c1 * np.sign(w) + c2 * w
    return penalty, sub


@dataclass
class AdamState:
    """Moment buffers for one parameter vector."""

    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.0
    t: int = 0
    m: np.ndarray | None = None
    v: np.ndarray | None = None


def adam_step(params: np.ndarray, grads: np.ndarray, state: AdamState,
              slice_names=None) -> np.ndarray:
    """One bias-corrected Adam update with decoupled weight decay.

    Mutates ``state`` and returns the new parameter vector.
    """
    if params.shape != grads.shape:
        raise ValueError("params and grads length mismatch")
    if not np.all(np.isfinite(grads)):
        where = "params"
        if slice_names:
            bad = int(np.argmin(np.isfinite(grads)))
            for name, lo, hi in slice_names:
                if lo <= bad < hi:
                    where = name
                    break
        raise FloatingPointError(f"non-finite gradient in slice '{where}'")
    if state.m is None:
        state.m = np.zeros_like(params)
        state.v = np.zeros_like(params)
    state.t += 1
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * grads
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * grads * grads
    mhat = state.m / (1.0 - state.beta1 ** state.t)
    vhat = state.v / (1.0 - state.beta2 ** state.t)
    out = params - state.lr * mhat / (np.sqrt(vhat) + state.eps)
    if state.weight_decay:
        out = out - state.lr * state.weight_decay * out
    return out


@dataclass
class LbfgsConfig:
    memory: int = 10
    max_iter: int = 200
    tol: float = 1e-5
    armijo_c: float = 1e-4
    shrink: float = 0.5
    max_ls: int = 30
    c1: float = 0.0  # L1 coefficient, handled orthant-wise
    c2: float = 0.0  # L2 coefficient, folded into the smooth objective


@dataclass
class LbfgsResult:
    x: np.ndarray
    value: float
    iterations: int
    converged: bool


def _pseudo_gradient(x, g, c1):
    pg = np.empty_like(g)
    pos = x > 0
    neg = x < 0
    pg[pos] = g[pos] + c1
    pg[neg] = g[neg] - c1
    zero = ~(pos | neg)
    right = g[zero] + c1
    left = g[zero] - c1
    pz = np.zeros(int(zero.sum()))
    pz[right < 0] = right[right < 0]
    pz[left > 0] = left[left > 0]
    pg[zero] = pz
    return pg


def lbfgs_minimize(objective: Objective, x0: np.ndarray,
                   config: LbfgsConfig | None = None) -> LbfgsResult:
    """Limited-memory BFGS with backtracking Armijo line search.

    With ``config.c1 > 0`` the L1 term is handled in the OWL-QN manner:
    pseudo-gradient, direction projected onto the pseudo-gradient orthant,
    iterates projected so coordinates never cross zero. This produces
    exactly-zero coordinates at the solution.
    """
    cfg = config or LbfgsConfig()
    c1, c2 = cfg.c1, cfg.c2

    def full(x):
        v, g = objective(x)
        if c2:
            v = v + 0.5 * c2 * float(np.dot(x, x))
            g = g + c2 * x
        return v + c1 * float(np.sum(np.abs(x))), g  # g is the smooth part

    x = np.array(x0, dtype=np.float64)
    f, g = full(x)
    best_x, best_f = x.copy(), f
    s_hist: list[np.ndarray] = []
    y_hist: list[np.ndarray] = []
    converged = False
    it = 0
    for it in range(1, cfg.max_iter + 1):
        pg = _pseudo_gradient(x, g, c1) if c1 else g
        if float(np.max(np.abs(pg))) < cfg.tol:
            converged = True
            break
        # two-loop recursion on the pseudo-gradient
        q = pg.copy()
        alphas = []
        for s, y in zip(reversed(s_hist), reversed(y_hist)):
            rho = 1.0 / float(np.dot(y, s))
            a = rho * float(np.dot(s, q))
            alphas.append((a, rho))
            q -= a * y
        if s_hist:
            s, y = s_hist[-1], y_hist[-1]
            q *= float(np.dot(s, y)) / float(np.dot(y, y))
        for (a, rho), s, y in zip(reversed(alphas), s_hist, y_hist):
            b = rho * float(np.dot(y, q))
            q += (a - b) * s
        d = -q
        if c1:
            # keep only components that agree with steepest descent
            d[d * (-pg) <= 0] = 0.0
        deriv = float(np.dot(pg, d))
        if deriv >= 0:  # not a descent direction; restart from steepest
            d = -pg
            deriv = float(np.dot(pg, d))
            s_hist.clear()
            y_hist.clear()
            if deriv >= 0:
                break
        orthant = np.where(x != 0, np.sign(x), -np.sign(pg))
        step = 1.0
        ok = False
        for _ in range(cfg.max_ls):
            x_new = x + step * d
            if c1:
                x_new[x_new * orthant < 0] = 0.0
            f_new, g_new = full(x_new)
            if f_new <= f + cfg.armijo_c * step * deriv:
                ok = True
                break
            step *= cfg.shrink
        if not ok:
            break
        s = x_new - x
        y = g_new - g
        if float(np.dot(s, y)) > 1e-12:
            s_hist.append(s)
            y_hist.append(y)
            if len(s_hist) > cfg.memory:
                s_hist.pop(0)
                y_hist.pop(0)
        else:
            # Armijo-only steps can violate curvature; a stale memory would
            # freeze the direction, so restart from steepest descent.
            s_hist.clear()
            y_hist.clear()
        x, f, g = x_new, f_new, g_new
        if f < best_f:
            best_f, best_x = f, x.copy()
    if f < best_f:
        best_f, best_x = f, x.copy()
    return LbfgsResult(x=best_x, value=best_f, iterations=it, converged=converged)


def grad_check(objective: Objective, x: np.ndarray, eps: float = 1e-5,
               value_fn=None) -> float:
    """Max relative error between analytic and central-difference gradients.

    ``value_fn``, when given, evaluates the objective value without computing
    the analytic gradient; it makes the sweep much cheaper for objectives
    whose gradient costs more than the value.
    """
    x = np.asarray(x, dtype=np.float64)
    _, g = objective(x)
    if value_fn is None:
        value_fn = lambda z: objective(z)[0]
    worst = 0.0
    for i in range(x.size):
        xp = x.copy()
        xp[i] += eps
        xm = x.copy()
        xm[i] -= eps
        fp = value_fn(xp)
        fm = value_fn(xm)
        fd = (fp - fm) / (2.0 * eps)
        err = abs(fd - g[i]) / max(1.0, abs(fd), abs(g[i]))
        worst = max(worst, err)
    return worst
