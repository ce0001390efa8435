"""Compiled inner loops for the value-function sweep.

Only the exponential success family exp(-shape/gamma) is handled here; the
generic path lives in hjb.py.  Both paths run the same 80-iteration
golden-section bracketing so their outputs agree.
"""
import numpy as np
from numba import njit

GOLDEN_ITERS = 80
P_EPS = 1e-9  # W, lower edge of the interior search interval

_INV_PHI = (np.sqrt(5.0) - 1.0) / 2.0
_INV_PHI2 = (3.0 - np.sqrt(5.0)) / 2.0


@njit(cache=True)
def _phi_exp(p, c, lam, rate):
    # rate * exp(-c/p)/p - lam*p with c = shape*(noise+interference)/gain
    if p <= 0.0:
        return 0.0
    return rate * np.exp(-c / p) / p - lam * p


@njit(cache=True)
def transmit_branch_exp(lam, c, rate, p_max):
    """Best positive-power candidate of phi; returns (value, power).

    Candidates are p = p_max and the golden-section point of the interior
    interval [P_EPS, p_max].  The caller compares the value against the
    idle branch phi(0) = 0; a non-positive value means waiting wins.
    """
    if p_max <= 0.0:
        return -np.inf, 0.0
    best_h = _phi_exp(p_max, c, lam, rate)
    best_p = p_max
    a = P_EPS
    b = p_max
    if b > a:
        x1 = a + _INV_PHI2 * (b - a)
        x2 = a + _INV_PHI * (b - a)
        f1 = _phi_exp(x1, c, lam, rate)
        f2 = _phi_exp(x2, c, lam, rate)
        for _ in range(GOLDEN_ITERS):
            if f1 >= f2:
                b = x2
                x2 = x1
                f2 = f1
                x1 = a + _INV_PHI2 * (b - a)
                f1 = _phi_exp(x1, c, lam, rate)
            else:
                a = x1
                x1 = x2
                f1 = f2
                x2 = a + _INV_PHI * (b - a)
                f2 = _phi_exp(x2, c, lam, rate)
        xm = 0.5 * (a + b)
        fm = _phi_exp(xm, c, lam, rate)
        if fm > best_h:
            best_h = fm
            best_p = xm
    return best_h, best_p


@njit(cache=True)
def argmax_phi_exp(lam, c, rate, p_max):
    """Maximize phi over [0, p_max]; returns (value, argmax).

    phi(0) = 0 by continuity; ties resolve to zero power.
    """
    h, p = transmit_branch_exp(lam, c, rate, p_max)
    if h > 0.0:
        return h, p
    return 0.0, 0.0


@njit(cache=True)
def hjb_sweep_exp(v_terminal, interference, de, dt, p_max, rate, noise, gain, shape):
    """Explicit backward sweep.

    Returns (value, policy, margin, p_transmit) on the full grid: policy is
    the maximizer, margin the value of the best transmitting candidate
    (negative while waiting is strictly better), and p_transmit that
    candidate's power.  v_terminal has one entry per energy node (node 0 is
    the empty battery); interference has one entry per time node.  The
    energy derivative at node i uses the one-sided difference toward node
    i-1 (transport runs toward decreasing energy); node 0 is absorbing with
    zero power.
    """
    n_nodes = v_terminal.shape[0]
    n_t = interference.shape[0] - 1
    v = np.empty((n_t + 1, n_nodes))
    pol = np.empty((n_t + 1, n_nodes))
    margin = np.empty((n_t + 1, n_nodes))
    p_trans = np.empty((n_t + 1, n_nodes))
    v[n_t, :] = v_terminal
    pol[n_t, 0] = 0.0
    margin[n_t, 0] = -np.inf
    p_trans[n_t, 0] = 0.0
    c_term = shape * (noise + interference[n_t]) / gain
    for i in range(1, n_nodes):
        lam = (v[n_t, i] - v[n_t, i - 1]) / de
        h, p = transmit_branch_exp(lam, c_term, rate, p_max)
        margin[n_t, i] = h
        p_trans[n_t, i] = p
        pol[n_t, i] = p if h > 0.0 else 0.0
    for k in range(n_t - 1, -1, -1):
        c = shape * (noise + interference[k]) / gain
        v[k, 0] = v[k + 1, 0]
        pol[k, 0] = 0.0
        margin[k, 0] = -np.inf
        p_trans[k, 0] = 0.0
        for i in range(1, n_nodes):
            lam = (v[k + 1, i] - v[k + 1, i - 1]) / de
            h, p = transmit_branch_exp(lam, c, rate, p_max)
            margin[k, i] = h
            p_trans[k, i] = p
            if h > 0.0:
                v[k, i] = v[k + 1, i] + dt * h
                pol[k, i] = p
            else:
                v[k, i] = v[k + 1, i]
                pol[k, i] = 0.0
    return v, pol, margin, p_trans
