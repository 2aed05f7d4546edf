"""Training objectives with hand-derived exact gradients.

Three losses: cosine-plus-KLD reconstruction, clamped binary cross-entropy,
and the negative canonical-correlation objective, plus a central
finite-difference gradient checker.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateVector, NumericalError

BCE_EPS = 1e-7


@dataclass
class LossReport:
    """Scalar loss value and gradients w.r.t. each differentiated input."""

    value: float
    grads: tuple

    def __post_init__(self):
        if not np.isfinite(self.value):
            raise NumericalError("loss value is not finite")


def softmax(x, axis=-1):
    z = x - np.max(x, axis=axis, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=axis, keepdims=True)


def loss_cosine_kld(pred, target, centroid, kld_weight=1.0):
    """(1 - cosine(pred, target)) + kld_weight * KL(softmax(pred) || softmax(centroid)).

    Gradient is taken w.r.t. ``pred``; ``target`` and ``centroid`` are
    treated as constants.  Accepts vectors or (batch, d) matrices; for a
    batch the loss is the mean over rows.
    """
    p = np.atleast_2d(np.asarray(pred, dtype=np.float64))
    t = np.atleast_2d(np.asarray(target, dtype=np.float64))
    c = np.asarray(centroid, dtype=np.float64).ravel()
    if kld_weight < 0:
        raise ValueError("kld_weight must be >= 0")
    if p.shape != t.shape or p.shape[1] != c.size:
        raise ValueError("pred, target and centroid dims must agree")
    n = p.shape[0]

    p_norm = np.linalg.norm(p, axis=1)
    t_norm = np.linalg.norm(t, axis=1)
    if np.any(p_norm == 0.0) or np.any(t_norm == 0.0):
        raise DegenerateVector("cosine similarity undefined for zero-norm vectors")
    dots = np.sum(p * t, axis=1)
    cos = dots / (p_norm * t_norm)
    # d(1 - cos)/dp = -(t / (|p||t|) - cos * p / |p|^2)
    grad_cos = -(t / (p_norm * t_norm)[:, None] - (cos / p_norm**2)[:, None] * p)

    sp = softmax(p, axis=1)
    sc = softmax(c)
    log_ratio = np.log(sp) - np.log(sc)[None, :]
    kl = np.sum(sp * log_ratio, axis=1)
    # dKL/dp_k = sp_k * (log_ratio_k - KL)
    grad_kl = sp * (log_ratio - kl[:, None])

    value = float(np.mean(1.0 - cos) + kld_weight * np.mean(kl))
    grad = (grad_cos + kld_weight * grad_kl) / n
    if np.asarray(pred).ndim == 1:
        grad = grad[0]
    return LossReport(value, (grad,))


def loss_bce(pred, target):
    """Mean elementwise binary cross-entropy with clamping at 1e-7.

    Predictions are clamped into (eps, 1-eps); the clamp zeroes the
    gradient outside that interval.
    """
    p_raw = np.asarray(pred, dtype=np.float64)
    t = np.asarray(target, dtype=np.float64)
    if p_raw.shape != t.shape:
        raise ValueError("pred and target shapes must match")
    p = np.clip(p_raw, BCE_EPS, 1.0 - BCE_EPS)
    n = p.size
    value = float(-np.mean(t * np.log(p) + (1.0 - t) * np.log(1.0 - p)))
    grad = (p - t) / (p * (1.0 - p)) / n
    grad = np.where((p_raw > BCE_EPS) & (p_raw < 1.0 - BCE_EPS), grad, 0.0)
    return LossReport(value, (grad,))


def _inv_sqrt_psd(mat):
    vals, vecs = np.linalg.eigh(mat)
    if np.any(vals <= 0.0):
        raise NumericalError("covariance not positive definite; increase regularization")
    return (vecs / np.sqrt(vals)) @ vecs.T


def loss_cca(view_a, view_b, reg=1e-4):
    """Negative sum of canonical correlations between two projected views.

    Views are (batch, d) with batch > d.  Covariances are centered and
    ridge-regularized by ``reg * I``; the value is minus the nuclear norm
    of T = S_aa^{-1/2} S_ab S_bb^{-1/2}.  Gradients w.r.t. both views are
    exact through the decomposition.
    """
    a = np.asarray(view_a, dtype=np.float64)
    b = np.asarray(view_b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2 or a.shape != b.shape:
        raise ValueError("views must be (batch, d) matrices of equal shape")
    m, d = a.shape
    if m < d + 1:
        raise ValueError(f"batch {m} too small for {d} components")
    if reg <= 0:
        raise ValueError("reg must be > 0")

    ha = a - a.mean(axis=0)
    hb = b - b.mean(axis=0)
    denom = m - 1.0
    s_aa = ha.T @ ha / denom + reg * np.eye(d)
    s_bb = hb.T @ hb / denom + reg * np.eye(d)
    s_ab = ha.T @ hb / denom

    try:
        k_a = _inv_sqrt_psd(s_aa)
        k_b = _inv_sqrt_psd(s_bb)
        t_mat = k_a @ s_ab @ k_b
        u, s, vt = np.linalg.svd(t_mat)
    except np.linalg.LinAlgError as err:
        raise NumericalError(f"CCA decomposition failed: {err}") from err
    corr = float(s.sum())

    v = vt.T
    # d corr / d S_ab and the symmetric covariance terms
    g_ab = k_a @ u @ vt @ k_b
    g_aa = -0.5 * k_a @ u @ np.diag(s) @ u.T @ k_a
    g_bb = -0.5 * k_b @ v @ np.diag(s) @ v.T @ k_b
    d_ha = (2.0 * ha @ g_aa + hb @ g_ab.T) / denom
    d_hb = (2.0 * hb @ g_bb + ha @ g_ab) / denom
    # chain through centering: project out the column means
    d_a = d_ha - d_ha.mean(axis=0)
    d_b = d_hb - d_hb.mean(axis=0)
    return LossReport(-corr, (-d_a, -d_b))


def grad_check(fn, params, eps=1e-5):
    """Max relative error between ``fn``'s analytic gradients and central
    finite differences.

    ``fn()`` must return ``(value, grads)`` where grads aligns with
    ``params`` (a list of float64 arrays modified in place).
    """
    _, grads = fn()
    worst = 0.0
    for arr, grad in zip(params, grads):
        flat = arr.ravel()
        gflat = np.asarray(grad).ravel()
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            up, _ = fn()
            flat[i] = orig - eps
            down, _ = fn()
            flat[i] = orig
            numeric = (up - down) / (2.0 * eps)
            denom = max(abs(gflat[i]), abs(numeric), 1e-6)
            worst = max(worst, abs(gflat[i] - numeric) / denom)
    return worst
