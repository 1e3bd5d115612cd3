"""Independent reference computations for the tests.

Nothing here imports the package's numerical code: the LSTM is written out
scalar by scalar with :mod:`math`, straight from the gate equations.
"""

import math


def _sig(z):
    return 1.0 / (1.0 + math.exp(-z))


def lstm_two_step(W, U, b, dense_w, dense_bias_weight, x_prev, x_curr,
                  lstm_bias_input=1.5, dense_bias_input=0.0239):
    """W[g][j], U[g][k][j], b[g][j] as nested lists; returns the prediction."""
    n = 4
    h = [0.0] * n
    C = [0.0] * n
    for x in (x_prev, x_curr):
        pre = {}
        for g in ("f", "i", "c", "o"):
            pre[g] = [
                W[g][j] * x + sum(U[g][k][j] * h[k] for k in range(n)) + b[g][j] * lstm_bias_input
                for j in range(n)
            ]
        f = [_sig(z) for z in pre["f"]]
        i = [_sig(z) for z in pre["i"]]
        ct = [math.tanh(z) for z in pre["c"]]
        o = [_sig(z) for z in pre["o"]]
        C = [i[j] * ct[j] + f[j] * C[j] for j in range(n)]
        h = [o[j] * math.tanh(C[j]) for j in range(n)]
    return sum(dense_w[j] * h[j] for j in range(n)) + dense_bias_weight * dense_bias_input


def lstm_two_step_from_dict(d, x_prev, x_curr):
    """Same oracle fed from the weight-file dictionary layout."""
    gates = ("f", "i", "c", "o")
    return lstm_two_step(
        {g: d[f"W_{g}"] for g in gates},
        {g: d[f"U_{g}"] for g in gates},
        {g: d[f"b_{g}"] for g in gates},
        d["dense_w"], d["dense_bias_weight"], x_prev, x_curr,
        d["lstm_bias_input"], d["dense_bias_input"],
    )


def matvec_transpose(W, v):
    """``W.T @ v`` with plain loops."""
    rows, cols = len(W), len(W[0])
    return [sum(W[r][c] * v[r] for r in range(rows)) for c in range(cols)]
