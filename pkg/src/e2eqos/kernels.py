"""Numeric kernels for the hot per-iteration paths.

Every kernel is written once, in loop style over plain float64 arrays, and is
JIT-compiled with numba when available.  Setting the environment variable
``E2EQOS_DISABLE_NUMBA=1`` (or uninstalling numba) selects the uncompiled
pure-Python path; both paths execute the exact same statements in the same
order, so results are bit-identical.  ``benchmarks/benchmark_kernels.py``
times one path against the other.

Access-network decision layout: class-major routing fractions followed by
per-link bandwidths, i.e. ``(r_11, r_21, r_12, r_22, b_1, b_2)`` with
``r_{l,s}`` at index ``s*L + l`` and ``b_l`` at index ``L*S + l``.
Core-network decision layout: one reserved bandwidth per class.
"""

from __future__ import annotations

import os

import numpy as np

DISABLE_ENV = "E2EQOS_DISABLE_NUMBA"


def numba_requested() -> bool:
    return os.environ.get(DISABLE_ENV, "").strip() in ("", "0")


# ---------------------------------------------------------------------------
# pure implementations (also the numba sources)
# ---------------------------------------------------------------------------

def _simplex_project(v, target):
    # Euclidean projection onto {z >= 0, sum(z) = target} by sort-and-threshold.
    n = v.shape[0]
    u = np.sort(v)[::-1]
    css = 0.0
    theta = 0.0
    for j in range(n):
        css += u[j]
        cand = (css - target) / (j + 1.0)
        if u[j] - cand > 0.0:
            theta = cand
    out = np.empty(n)
    for i in range(n):
        z = v[i] - theta
        out[i] = z if z > 0.0 else 0.0
    return out


def _box_project(x, lower, upper):
    n = x.shape[0]
    out = np.empty(n)
    for i in range(n):
        z = x[i]
        if z < lower[i]:
            z = lower[i]
        elif z > upper[i]:
            z = upper[i]
        out[i] = z
    return out


def _mix_estimates(w, e_prev, g_new, g_old):
    # e_i(t+1) = sum_j w_ij e_j(t) + g_i(new) - g_i(old), synchronous round.
    n, k = e_prev.shape
    out = np.empty((n, k))
    for i in range(n):
        for c in range(k):
            acc = 0.0
            for j in range(n):
                acc += w[i, j] * e_prev[j, c]
            out[i, c] = acc + g_new[i, c] - g_old[i, c]
    return out


def _an_cost(y, flows, upsilon, kappa, beta, a, k):
    n_classes = flows.shape[0]
    n_links = upsilon.shape[0]
    cost = 0.0
    for l in range(n_links):
        f = 0.0
        for s in range(n_classes):
            f += y[s * n_links + l] * flows[s]
        b = y[n_links * n_classes + l]
        d = upsilon[l] * (f / b) ** a
        cost += kappa[l] * b ** k
        for s in range(n_classes):
            cost += beta[s] * (y[s * n_links + l] * flows[s]) * d
    return cost


def _an_cost_grad(y, flows, upsilon, kappa, beta, a, k):
    n_classes = flows.shape[0]
    n_links = upsilon.shape[0]
    grad = np.zeros(n_links * n_classes + n_links)
    for l in range(n_links):
        f = 0.0
        wsum = 0.0
        for s in range(n_classes):
            f += y[s * n_links + l] * flows[s]
            wsum += beta[s] * y[s * n_links + l] * flows[s]
        b = y[n_links * n_classes + l]
        d = upsilon[l] * (f / b) ** a
        ddf = a * upsilon[l] * (f / b) ** (a - 1.0) / b
        ddb = -a * d / b
        for s in range(n_classes):
            grad[s * n_links + l] = beta[s] * flows[s] * d + wsum * ddf * flows[s]
        grad[n_links * n_classes + l] = kappa[l] * k * b ** (k - 1.0) + wsum * ddb
    return grad


def _an_contrib(y, flows, upsilon, a, budgets):
    # per-class average delay through this access network minus the class budget
    n_classes = flows.shape[0]
    n_links = upsilon.shape[0]
    out = np.empty(n_classes)
    for s in range(n_classes):
        out[s] = -budgets[s]
    for l in range(n_links):
        f = 0.0
        for s in range(n_classes):
            f += y[s * n_links + l] * flows[s]
        b = y[n_links * n_classes + l]
        d = upsilon[l] * (f / b) ** a
        for s in range(n_classes):
            out[s] += y[s * n_links + l] * d
    return out


def _an_contrib_jac(y, flows, upsilon, a):
    n_classes = flows.shape[0]
    n_links = upsilon.shape[0]
    jac = np.zeros((n_classes, n_links * n_classes + n_links))
    for l in range(n_links):
        f = 0.0
        for s in range(n_classes):
            f += y[s * n_links + l] * flows[s]
        b = y[n_links * n_classes + l]
        d = upsilon[l] * (f / b) ** a
        ddf = a * upsilon[l] * (f / b) ** (a - 1.0) / b
        ddb = -a * d / b
        for s in range(n_classes):
            r_ls = y[s * n_links + l]
            jac[s, s * n_links + l] += d
            for s2 in range(n_classes):
                jac[s, s2 * n_links + l] += r_ls * ddf * flows[s2]
            jac[s, n_links * n_classes + l] = r_ls * ddb
    return jac


def _cn_cost(b, flows, kappa, beta, a, k):
    n_classes = flows.shape[0]
    cost = 0.0
    for s in range(n_classes):
        d = (flows[s] / b[s]) ** a
        cost += kappa[s] * b[s] ** k + beta[s] * flows[s] * d
    return cost


def _cn_cost_grad(b, flows, kappa, beta, a, k):
    n_classes = flows.shape[0]
    grad = np.empty(n_classes)
    for s in range(n_classes):
        d = (flows[s] / b[s]) ** a
        grad[s] = kappa[s] * k * b[s] ** (k - 1.0) - beta[s] * flows[s] * a * d / b[s]
    return grad


def _cn_delays(b, flows, a):
    n_classes = flows.shape[0]
    out = np.empty(n_classes)
    for s in range(n_classes):
        out[s] = (flows[s] / b[s]) ** a
    return out


def _cn_delays_jac(b, flows, a):
    n_classes = flows.shape[0]
    jac = np.zeros((n_classes, n_classes))
    for s in range(n_classes):
        d = (flows[s] / b[s]) ** a
        jac[s, s] = -a * d / b[s]
    return jac


PURE_IMPL = {
    "simplex_project": _simplex_project,
    "box_project": _box_project,
    "mix_estimates": _mix_estimates,
    "an_cost": _an_cost,
    "an_cost_grad": _an_cost_grad,
    "an_contrib": _an_contrib,
    "an_contrib_jac": _an_contrib_jac,
    "cn_cost": _cn_cost,
    "cn_cost_grad": _cn_cost_grad,
    "cn_delays": _cn_delays,
    "cn_delays_jac": _cn_delays_jac,
}

_compiled_cache = None


def compiled_impl() -> dict:
    """njit-compile all kernels (cached); raises ImportError without numba."""
    global _compiled_cache
    if _compiled_cache is None:
        from numba import njit

        _compiled_cache = {
            name: njit(cache=True)(fn) for name, fn in PURE_IMPL.items()
        }
    return _compiled_cache


def _select():
    if numba_requested():
        try:
            return compiled_impl(), True
        except ImportError:
            pass
    return PURE_IMPL, False


_impl, USING_NUMBA = _select()

simplex_project = _impl["simplex_project"]
box_project = _impl["box_project"]
mix_estimates = _impl["mix_estimates"]
an_cost = _impl["an_cost"]
an_cost_grad = _impl["an_cost_grad"]
an_contrib = _impl["an_contrib"]
an_contrib_jac = _impl["an_contrib_jac"]
cn_cost = _impl["cn_cost"]
cn_cost_grad = _impl["cn_cost_grad"]
cn_delays = _impl["cn_delays"]
cn_delays_jac = _impl["cn_delays_jac"]
