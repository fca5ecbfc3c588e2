"""Per-sample losses with gradients. Models have no intercept."""
from __future__ import annotations

import numpy as np

__all__ = ["logistic_loss_grad", "least_squares_loss_grad", "LOSSES", "get_loss"]


def logistic_loss_grad(w, x, y):
    """``log(1 + exp(-y <w, x>))`` and its gradient in ``w``."""
    if y not in (-1, 1, -1.0, 1.0):
        raise ValueError(f"logistic loss needs y in {{-1, +1}}, got {y}")
    margin = y * float(np.dot(w, x))
    loss = float(np.logaddexp(0.0, -margin))
    # sigma(-margin) written to avoid overflow for either sign
    if margin >= 0:
        e = np.exp(-margin)
        sig = e / (1.0 + e)
    else:
        sig = 1.0 / (1.0 + np.exp(margin))
    return loss, (-y * sig) * np.asarray(x, dtype=np.float64)


def least_squares_loss_grad(w, x, y):
    """``(y - <w, x>)**2`` and its gradient in ``w``."""
    r = float(y) - float(np.dot(w, x))
    return r * r, (-2.0 * r) * np.asarray(x, dtype=np.float64)


LOSSES = {"logistic": logistic_loss_grad, "least_squares": least_squares_loss_grad}


def get_loss(name: str):
    try:
        return LOSSES[name]
    except KeyError:
        raise ValueError(f"unknown loss {name!r}; choose from {sorted(LOSSES)}") from None
