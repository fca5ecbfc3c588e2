"""Compiled single-pass training for grid search over the cheap learners.

Each kernel replays exactly the update of the matching step function in
``learners`` for one hyperparameter setting, looping over samples and
coordinates in compiled code. Results agree with :func:`run_stream` up to
floating-point summation order. Graph learners fall back to
:func:`run_stream` per setting.
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit

from .learners import GRAPH_LEARNERS, LEARNERS, HyperParams, make_step, run_stream

__all__ = ["top_s_inplace", "run_stream_batch", "BATCH_LEARNERS", "batch_gap"]

BATCH_LEARNERS = ("da-iht", "l1-rda", "adagrad", "adam", "stoiht")
_KIND = {"l1-rda": 0, "adagrad": 1, "adam": 2, "stoiht": 3, "da-iht": 4}


@njit(cache=True)
def top_s_inplace(u, s, work):
    """Zero all but the ``s`` largest ``|u_i|`` of ``u``, ties to the lowest index."""
    p = u.shape[0]
    if s >= p:
        return
    for j in range(p):
        work[j] = abs(u[j])
    thr = np.partition(work, p - s)[p - s]
    above = 0
    for j in range(p):
        if abs(u[j]) > thr:
            above += 1
    need = s - above
    for j in range(p):
        a = abs(u[j])
        if a > thr:
            continue
        if a == thr and need > 0:
            need -= 1
            continue
        u[j] = 0.0


@njit(cache=True)
def _grad_coef(z, yi, logistic):
    if logistic:
        m = yi * z
        if m >= 0:
            e = math.exp(-m)
            return -yi * e / (1.0 + e)
        return -yi / (1.0 + math.exp(m))
    return -2.0 * (yi - z)


@njit(cache=True)
def _stream_kernel(kind, X, y, logistic, prm, checkpoints):
    """One pass; ``prm`` holds (gamma, lam, rho, eta, delta, alpha, b1, b2, eps,
    sparsity, averaged)."""
    n, p = X.shape
    gamma, lam, rho, eta, delta = prm[0], prm[1], prm[2], prm[3], prm[4]
    alpha, b1, b2, eps = prm[5], prm[6], prm[7], prm[8]
    s = int(prm[9])
    averaged = prm[10] != 0.0
    w = np.zeros(p)
    dual = np.zeros(p)
    a1 = np.zeros(p)
    a2 = np.zeros(p)
    run = np.zeros(p)
    work = np.empty(p)
    snaps = np.zeros((checkpoints.shape[0], p))
    snaps_bar = np.zeros((checkpoints.shape[0], p))
    c = 0
    while c < checkpoints.shape[0] and checkpoints[c] == 0:
        c += 1
    for i in range(n):
        z = 0.0
        for j in range(p):
            z += w[j] * X[i, j]
        coef = _grad_coef(z, y[i], logistic)
        t = i
        if kind == 0:
            tt = t + 1.0
            lam_t = lam + gamma * rho / math.sqrt(tt)
            scale = math.sqrt(tt) / gamma
            for j in range(p):
                dual[j] += coef * X[i, j]
                gb = dual[j] / tt
                mag = abs(gb) - lam_t
                w[j] = -scale * math.copysign(mag, gb) if mag > 0 else 0.0
        elif kind == 1:
            for j in range(p):
                g = coef * X[i, j]
                a1[j] += g * g
                h = delta + math.sqrt(a1[j])
                u = w[j] - (eta / h) * g
                mag = abs(u) - eta * lam / h
                w[j] = math.copysign(mag, u) if mag > 0 else 0.0
        elif kind == 2:
            tt = t + 1.0
            c1 = 1.0 - b1 ** tt
            c2 = 1.0 - b2 ** tt
            for j in range(p):
                g = coef * X[i, j]
                a1[j] = b1 * a1[j] + (1 - b1) * g
                a2[j] = b2 * a2[j] + (1 - b2) * g * g
                w[j] = w[j] - alpha * (a1[j] / c1) / (math.sqrt(a2[j] / c2) + eps)
        elif kind == 3:
            for j in range(p):
                w[j] = w[j] - gamma * coef * X[i, j]
            top_s_inplace(w, s, work)
        else:
            div = (t + 1.0) if averaged else 1.0
            scale = -math.sqrt(t) / gamma
            for j in range(p):
                dual[j] += coef * X[i, j]
                w[j] = dual[j] / div
            top_s_inplace(w, s, work)
            for j in range(p):
                w[j] = scale * w[j]
            top_s_inplace(w, s, work)
        for j in range(p):
            run[j] += w[j]
        while c < checkpoints.shape[0] and checkpoints[c] == i + 1:
            snaps[c] = w
            snaps_bar[c] = run / (i + 1)
            c += 1
    if n > 0:
        run /= n
    return w, run, snaps, snaps_bar


def _params(h: HyperParams) -> np.ndarray:
    return np.array([h.gamma, h.lam, h.rho, h.eta, h.delta, h.alpha, h.beta1, h.beta2,
                     h.epsilon, h.sparsity or 0, 1.0 if h.averaged else 0.0])


def run_stream_batch(learner: str, hypers, X, y, loss: str = "logistic", graph=None,
                     checkpoints=None):
    """Train one model per entry of ``hypers`` on the same ordered stream.

    Returns ``(W, W_bar, snaps)``: final iterates, running averages and a
    dict mapping each checkpoint ``n`` to the ``(G, p)`` pair ``(W_n, W_bar_n)``
    after ``n`` samples.
    """
    if learner not in LEARNERS:
        raise ValueError(f"unknown learner {learner!r}")
    hypers = list(hypers)
    if not hypers:
        raise ValueError("empty hyperparameter list")
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if X.ndim != 2 or len(X) != len(y):
        raise ValueError("X must be (n, p) with one label per row")
    if loss not in ("logistic", "least_squares"):
        raise ValueError(f"unknown loss {loss!r}")
    n, p = X.shape
    wanted = sorted(set(int(c) for c in (checkpoints or ()) if 0 <= int(c) <= n))
    G = len(hypers)
    W = np.zeros((G, p))
    W_bar = np.zeros((G, p))
    snaps = {c: (np.zeros((G, p)), np.zeros((G, p))) for c in wanted}
    if learner in GRAPH_LEARNERS:
        for r, h in enumerate(hypers):
            traj = run_stream(learner, h, X, y, loss, graph, checkpoints=wanted)
            W[r], W_bar[r] = traj.w, traj.w_bar
            for c in wanted:
                snaps[c][0][r], snaps[c][1][r] = traj.snapshots[c]
        return W, W_bar, snaps
    if loss == "logistic" and not np.all(np.isin(y, (-1.0, 1.0))):
        raise ValueError("logistic loss needs labels in {-1, +1}")
    cps = np.array(wanted, dtype=np.int64)
    for r, h in enumerate(hypers):
        make_step(learner, h, p, graph)  # validates sparsity and friends
        w, wb, sn, sb = _stream_kernel(_KIND[learner], X, y, loss == "logistic",
                                       _params(h), cps)
        W[r], W_bar[r] = w, wb
        for k, c in enumerate(wanted):
            snaps[c][0][r], snaps[c][1][r] = sn[k], sb[k]
    return W, W_bar, snaps


def batch_gap(learner: str, hyper: HyperParams, X, y, loss="logistic") -> float:
    """Max abs gap between the compiled path and :func:`run_stream`."""
    W, W_bar, _ = run_stream_batch(learner, [hyper], X, y, loss)
    traj = run_stream(learner, hyper, X, y, loss)
    return float(max(np.max(np.abs(W[0] - traj.w), initial=0.0),
                     np.max(np.abs(W_bar[0] - traj.w_bar), initial=0.0)))
