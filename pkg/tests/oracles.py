"""Independent reference implementations used only by the tests.

Everything here is written the slow, obvious way (explicit loops, index
formulas, exhaustive enumeration) so it cannot share a failure mode with the
production code it checks.
"""

from __future__ import annotations

import itertools

import numpy as np


def matricize_by_index_formula(arr: np.ndarray, mode: int) -> np.ndarray:
    """Mode-i unfolding built entry-by-entry from the index formula.

    Row index is the mode-``mode`` index; the column index composes the
    remaining (1-based) indices with the lowest mode fastest:
    ``col = j1 + p1*(j2-1) + p1*p2*(j3-1) + ...`` skipping ``mode``.
    """
    dims = arr.shape
    ax = mode - 1
    rest = [d for i, d in enumerate(dims) if i != ax]
    out = np.zeros((dims[ax], int(np.prod(rest))))
    for idx in itertools.product(*(range(d) for d in dims)):
        col, stride = 0, 1
        for i, j in enumerate(idx):
            if i == ax:
                continue
            col += stride * j
            stride *= dims[i]
        out[idx[ax], col] = arr[idx]
    return out


def mode_product_loops(arr: np.ndarray, u: np.ndarray, mode: int) -> np.ndarray:
    """n-mode product by explicit summation."""
    ax = mode - 1
    new_shape = list(arr.shape)
    new_shape[ax] = u.shape[0]
    out = np.zeros(new_shape)
    for idx in itertools.product(*(range(d) for d in new_shape)):
        total = 0.0
        for j in range(arr.shape[ax]):
            src = list(idx)
            src[ax] = j
            total += arr[tuple(src)] * u[idx[ax], j]
        out[idx] = total
    return out


def jacobi_svd(a: np.ndarray, sweeps: int = 60, tol: float = 1e-14):
    """Full SVD by one-sided Jacobi rotations.

    Returns (u, s, vt) with singular values sorted nonincreasing. Works on
    the transpose when the input has fewer rows than columns.
    """
    a = np.asarray(a, dtype=np.float64)
    if a.shape[0] < a.shape[1]:
        u, s, vt = jacobi_svd(a.T, sweeps=sweeps, tol=tol)
        return vt.T, s, u.T
    w = a.copy()
    m, n = w.shape
    v = np.eye(n)
    for _ in range(sweeps):
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                alpha = w[:, p] @ w[:, p]
                beta = w[:, q] @ w[:, q]
                gamma = w[:, p] @ w[:, q]
                off = max(off, abs(gamma) / max(np.sqrt(alpha * beta), 1e-300))
                if abs(gamma) < tol * np.sqrt(alpha * beta):
                    continue
                zeta = (beta - alpha) / (2.0 * gamma)
                t = np.sign(zeta) / (abs(zeta) + np.sqrt(1.0 + zeta * zeta))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = c * t
                wp = w[:, p].copy()
                w[:, p] = c * wp - s * w[:, q]
                w[:, q] = s * wp + c * w[:, q]
                vp = v[:, p].copy()
                v[:, p] = c * vp - s * v[:, q]
                v[:, q] = s * vp + c * v[:, q]
        if off < tol:
            break
    sigma = np.sqrt((w * w).sum(axis=0))
    order = np.argsort(sigma)[::-1]
    sigma = sigma[order]
    w = w[:, order]
    v = v[:, order]
    u = np.zeros((m, n))
    for j in range(n):
        if sigma[j] > 1e-300:
            u[:, j] = w[:, j] / sigma[j]
    return u, sigma, v.T


def block_means_loops(y: np.ndarray, labels: np.ndarray, r: int) -> np.ndarray:
    """Block means by explicit accumulation; labels are 1-based."""
    n, m, p, _ = y.shape
    sums = np.zeros((n, m, r, r))
    counts = np.zeros((r, r))
    for j3 in range(p):
        for j4 in range(p):
            a, b = labels[j3] - 1, labels[j4] - 1
            sums[:, :, a, b] += y[:, :, j3, j4]
            counts[a, b] += 1
    counts[counts == 0] = np.nan
    return sums / counts


def block_residual_loops(y: np.ndarray, labels: np.ndarray, r: int) -> float:
    """Sum of squared deviations of every entry from its block mean."""
    means = block_means_loops(y, labels, r)
    total = 0.0
    n, m, p, _ = y.shape
    for i1 in range(n):
        for i2 in range(m):
            for j3 in range(p):
                for j4 in range(p):
                    mu = means[i1, i2, labels[j3] - 1, labels[j4] - 1]
                    total += (y[i1, i2, j3, j4] - mu) ** 2
    return total


def misclustering_exhaustive(z_hat: np.ndarray, z_true: np.ndarray, r: int) -> float:
    """Minimal mismatch fraction by enumerating all r! relabelings."""
    best = len(z_hat)
    for perm in itertools.permutations(range(1, r + 1)):
        relabeled = np.array([perm[h - 1] for h in z_hat])
        best = min(best, int((relabeled != z_true).sum()))
    return best / len(z_hat)


def auroc_pairs(labels: np.ndarray, scores: np.ndarray) -> float:
    """AUROC as the Mann-Whitney pair statistic, counted pair by pair."""
    pos = scores[labels == 1]
    neg = scores[labels == 0]
    wins = 0.0
    for sp in pos:
        for sn in neg:
            if sp > sn:
                wins += 1.0
            elif sp == sn:
                wins += 0.5
    return wins / (len(pos) * len(neg))


def pr_points_by_threshold(labels: np.ndarray, scores: np.ndarray):
    """(recall, precision) at every distinct threshold, by direct counting.

    The classifier predicts positive iff score >= threshold; thresholds are
    the distinct scores in descending order, so ties are grouped.
    """
    n_pos = int((labels == 1).sum())
    points = []
    for thr in sorted(set(scores.tolist()), reverse=True):
        predicted = scores >= thr
        tp = int((predicted & (labels == 1)).sum())
        fp = int((predicted & (labels == 0)).sum())
        points.append((tp / n_pos, tp / (tp + fp)))
    return points


def auprc_threshold_enum(labels: np.ndarray, scores: np.ndarray) -> float:
    """Area under the PR step curve from the threshold-enumerated points."""
    area = 0.0
    prev_recall = 0.0
    for recall, precision in pr_points_by_threshold(labels, scores):
        area += (recall - prev_recall) * precision
        prev_recall = recall
    return area


def min_re_p_threshold_enum(labels: np.ndarray, scores: np.ndarray) -> float:
    """Max over threshold-enumerated operating points of min(precision, recall)."""
    return max(min(p, r) for r, p in pr_points_by_threshold(labels, scores))
