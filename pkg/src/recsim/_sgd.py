"""Compiled inner loops for per-example SGD."""

import numba
import numpy as np


@numba.njit(cache=True, nogil=True)
def sgd_epoch(p, q, agents, items, labels, order, lr):
    """
    One pass of per-example SGD over ``order`` on the squared error of the raw
    inner product.  Updates ``p`` and ``q`` in place; both rows are updated
    from their pre-step values.  Returns the summed pre-step squared error.
    """
    k = p.shape[1]
    loss = 0.0
    for idx in order:
        i = agents[idx]
        j = items[idx]
        pred = 0.0
        for f in range(k):
            pred += p[i, f] * q[j, f]
        err = pred - labels[idx]
        loss += err * err
        g = 2.0 * lr * err
        for f in range(k):
            pf = p[i, f]
            qf = q[j, f]
            p[i, f] = pf - g * qf
            q[j, f] = qf - g * pf
    return loss


@numba.njit(cache=True, nogil=True)
def pair_predictions(p, q, agents, items):
    out = np.empty(len(agents))
    k = p.shape[1]
    for idx in range(len(agents)):
        i = agents[idx]
        j = items[idx]
        s = 0.0
        for f in range(k):
            s += p[i, f] * q[j, f]
        out[idx] = s
    return out
