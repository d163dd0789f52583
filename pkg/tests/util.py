"""Shared test oracles: central finite differences and error metrics."""

import numpy as np


def numerical_grad(f, param, h=1e-5):
    """Central finite-difference gradient of scalar f() w.r.t. param.data."""
    grad = np.zeros_like(param.data)
    flat = param.data.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        hi = f()
        flat[i] = orig - h
        lo = f()
        flat[i] = orig
        gflat[i] = (hi - lo) / (2.0 * h)
    return grad


def rel_error(a, b, floor=1e-8):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    denom = np.maximum(np.abs(a) + np.abs(b), floor)
    return float(np.max(np.abs(a - b) / denom))


def check_grads(build_loss, params, tol, h=1e-5):
    """Analytic vs numeric gradients for every named parameter.

    ``build_loss`` constructs a fresh graph and returns the scalar loss
    tensor each call (define-by-run, so mutated .data is picked up).
    """
    loss = build_loss()
    loss.backward()
    analytic = {name: p.grad.copy() for name, p in params.items()}
    for name, p in params.items():
        numeric = numerical_grad(lambda: float(build_loss().data), p, h)
        err = rel_error(analytic[name], numeric)
        assert err < tol, f"gradient mismatch for {name}: rel err {err:.3g}"
