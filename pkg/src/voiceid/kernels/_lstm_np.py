"""Pure-numpy LSTM sequence kernels (fallback for the Cython extension).

Both kernels operate on one direction of one layer. The input
projection x @ W.T + b is precomputed by the caller; these loops only
carry the recurrent part, so the hot path is H x H matmuls plus fused
gate arithmetic. Gate packing order along the last axis is i, f, g, o.
"""

import numpy as np


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def lstm_sequence_forward(a_in, u):
    """Run the recurrence over a_in (B, T, 4H) with recurrent weights u (4H, H).

    Returns (h, c, gates): hidden states (B, T, H), cell states (B, T, H)
    and post-activation gates (B, T, 4H).
    """
    b, t, h4 = a_in.shape
    h = h4 // 4
    dtype = a_in.dtype
    hs = np.empty((b, t, h), dtype=dtype)
    cs = np.empty((b, t, h), dtype=dtype)
    gates = np.empty((b, t, h4), dtype=dtype)
    ut = np.ascontiguousarray(u.T)
    h_prev = np.zeros((b, h), dtype=dtype)
    c_prev = np.zeros((b, h), dtype=dtype)
    for step in range(t):
        a = a_in[:, step] + h_prev @ ut
        gi = _sigmoid(a[:, :h])
        gf = _sigmoid(a[:, h : 2 * h])
        gg = np.tanh(a[:, 2 * h : 3 * h])
        go = _sigmoid(a[:, 3 * h :])
        c_prev = gf * c_prev + gi * gg
        h_prev = go * np.tanh(c_prev)
        gates[:, step, :h] = gi
        gates[:, step, h : 2 * h] = gf
        gates[:, step, 2 * h : 3 * h] = gg
        gates[:, step, 3 * h :] = go
        cs[:, step] = c_prev
        hs[:, step] = h_prev
    return hs, cs, gates


def lstm_sequence_backward(dh_out, gates, c, u):
    """Backpropagate through the recurrence.

    dh_out (B, T, H) is the upstream gradient on every hidden state.
    Returns da (B, T, 4H): the gradient on the pre-activation gate sums,
    from which the caller derives dW, dU, db and dx by plain matmuls.
    """
    b, t, h = dh_out.shape
    dtype = dh_out.dtype
    da = np.empty((b, t, 4 * h), dtype=dtype)
    dh_next = np.zeros((b, h), dtype=dtype)
    dc_next = np.zeros((b, h), dtype=dtype)
    uc = np.ascontiguousarray(u)
    for step in range(t - 1, -1, -1):
        gi = gates[:, step, :h]
        gf = gates[:, step, h : 2 * h]
        gg = gates[:, step, 2 * h : 3 * h]
        go = gates[:, step, 3 * h :]
        tc = np.tanh(c[:, step])
        dh = dh_out[:, step] + dh_next
        dc = dh * go * (1.0 - tc * tc) + dc_next
        c_prev = c[:, step - 1] if step > 0 else 0.0
        da_t = da[:, step]
        da_t[:, :h] = dc * gg * gi * (1.0 - gi)
        da_t[:, h : 2 * h] = dc * c_prev * gf * (1.0 - gf)
        da_t[:, 2 * h : 3 * h] = dc * gi * (1.0 - gg * gg)
        da_t[:, 3 * h :] = dh * tc * go * (1.0 - go)
        dc_next = dc * gf
        dh_next = da_t @ uc
    return da
