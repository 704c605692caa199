"""ROI clustering for order-4 connectome tensors.

The tensor is modeled as blockwise along its two (identical) ROI modes: a
small core of cluster-pair means expanded by one shared membership matrix,
plus residual. Clustering runs in two stages:

1. ``phsc_init`` -- partial high-order spectral clustering: two rounds of
   truncated SVD compress the tensor onto a leading ROI subspace, then
   k-means++ / Lloyd clusters the projected ROI vectors.
2. ``hlloyd_refine`` -- high-order Lloyd: alternate between recomputing the
   block means and reassigning each ROI to the cluster whose mean profile is
   closest, on a cluster-collapsed copy of the tensor.

The cluster count is selected by sweeping ``r`` and scoring each fit with a
BIC-style criterion on the blockwise residual.

Conventions: cluster labels are 1-based (``{1..r}``); a single membership is
shared by both ROI modes; all randomness is explicit through seeds.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .tensor import DenseMatrix, DenseTensor, matricize, mode_product
from .subspace import svd_r

__all__ = [
    "Membership",
    "CoreTensor",
    "HLloydConfig",
    "kmeanspp_seed",
    "kmeans",
    "core_means",
    "phsc_init",
    "hlloyd_refine",
    "block_residual",
    "bic_score",
    "select_r",
    "sweep_r",
    "RFit",
]


@dataclass(frozen=True)
class Membership:
    """Cluster assignment of p items into clusters 1..r."""

    labels: np.ndarray
    r: int

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64).copy()
        if labels.ndim != 1 or labels.size == 0:
            raise ValueError("labels must be a non-empty 1-D vector")
        r = int(self.r)
        if r < 1:
            raise ValueError(f"cluster count must be positive, got {r}")
        if labels.min() < 1 or labels.max() > r:
            raise ValueError(f"labels must lie in 1..{r}")
        labels.flags.writeable = False
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "r", r)

    @property
    def p(self) -> int:
        return self.labels.size

    def sizes(self) -> np.ndarray:
        """Cluster sizes, length r (may contain zeros for hand-built inputs)."""
        return np.bincount(self.labels - 1, minlength=self.r)

    def onehot(self) -> np.ndarray:
        """Binary membership matrix M with M[j, m] = 1 iff labels[j] == m+1."""
        m = np.zeros((self.p, self.r))
        m[np.arange(self.p), self.labels - 1] = 1.0
        return m


@dataclass(frozen=True)
class CoreTensor:
    """Block means: (subjects, modalities, r, r) array of cluster-pair averages."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 4 or v.shape[2] != v.shape[3]:
            raise ValueError(f"core tensor must be (n, m, r, r), got {v.shape}")
        object.__setattr__(self, "values", v)

    @property
    def r(self) -> int:
        return self.values.shape[2]


@dataclass(frozen=True)
class HLloydConfig:
    """Settings for high-order Lloyd refinement.

    ``tol`` > 0 additionally stops the iteration once the blockwise residual
    improves by at most ``tol`` between consecutive iterations; the default 0
    stops only when the labels reach a fixed point (or after ``max_iters``).
    """

    r: int
    max_iters: int = 20
    seed: int = 0
    tol: float = 0.0

    def __post_init__(self):
        if self.r < 1:
            raise ValueError("r must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.tol < 0:
            raise ValueError("tol must be nonnegative")


def _connectome_array(y) -> np.ndarray:
    """Coerce a DenseTensor or ndarray to a validated (n, m, p, p) array."""
    arr = y.array if isinstance(y, DenseTensor) else np.asarray(y, dtype=np.float64)
    if arr.ndim != 4:
        raise ValueError(f"connectome tensor must have order 4, got {arr.ndim}")
    if arr.shape[2] != arr.shape[3]:
        raise ValueError(f"ROI modes must match, got shape {arr.shape}")
    return arr


# ---------------------------------------------------------------------------
# k-means++ and Lloyd on plain point sets


def kmeanspp_seed(points: np.ndarray, k: int, rng_seed: int) -> np.ndarray:
    """k-means++ seeding: k distinct row indices of ``points``.

    The first index is uniform; each later one is sampled with probability
    proportional to the squared distance to the nearest centroid chosen so
    far. If every remaining point coincides with a centroid the next seed is
    drawn uniformly from the unchosen rows, so degenerate inputs still yield
    k distinct indices.
    """
    pts = np.asarray(points, dtype=np.float64)
    n = pts.shape[0]
    k = int(k)
    if not 1 <= k <= n:
        raise ValueError(f"k={k} must be in 1..{n}")
    rng = np.random.default_rng(rng_seed)
    chosen = [int(rng.integers(n))]
    d2 = ((pts - pts[chosen[0]]) ** 2).sum(axis=1)
    for _ in range(k - 1):
        total = d2.sum()
        if total > 0:
            idx = int(rng.choice(n, p=d2 / total))
        else:
            pool = np.setdiff1d(np.arange(n), np.array(chosen))
            idx = int(pool[rng.integers(pool.size)])
        chosen.append(idx)
        d2 = np.minimum(d2, ((pts - pts[idx]) ** 2).sum(axis=1))
    return np.array(chosen, dtype=np.int64)


def _repair_empty(labels0: np.ndarray, k: int, costs: np.ndarray) -> list[tuple[int, int]]:
    """Reassign the highest-cost points to empty clusters, in place.

    Points that are the sole member of their cluster are never taken, so each
    repair strictly reduces the number of empty clusters. ``costs`` is
    consumed (entries of moved points are reset to -inf). Returns the applied
    (point, cluster) moves.
    """
    moves: list[tuple[int, int]] = []
    counts = np.bincount(labels0, minlength=k)
    for c in np.flatnonzero(counts == 0):
        movable = counts[labels0] > 1
        cand = np.where(movable, costs, -np.inf)
        j = int(np.argmax(cand))
        counts[labels0[j]] -= 1
        labels0[j] = c
        counts[c] += 1
        costs[j] = -np.inf
        moves.append((j, int(c)))
    return moves


def kmeans(
    points: np.ndarray, k: int, rng_seed: int, max_iters: int = 100
) -> tuple[Membership, np.ndarray, list[float]]:
    """Lloyd's k-means from a k-means++ seeding.

    Returns (membership, centroids, inertia trace). Stops at a label fixed
    point or after ``max_iters``; empty clusters are repaired by re-seeding
    them with the currently worst-assigned point, so the returned clustering
    has no empty clusters and the inertia trace is nonincreasing.
    """
    pts = np.asarray(points, dtype=np.float64)
    n = pts.shape[0]
    centroids = pts[kmeanspp_seed(pts, k, rng_seed)].copy()
    labels0 = None
    trace: list[float] = []
    for _ in range(int(max_iters)):
        d2 = ((pts[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        new_labels = d2.argmin(axis=1)
        costs = d2[np.arange(n), new_labels]
        for j, c in _repair_empty(new_labels, k, costs):
            centroids[c] = pts[j]  # re-seed the revived cluster at the moved point
        trace.append(float(((pts - centroids[new_labels]) ** 2).sum()))
        if labels0 is not None and np.array_equal(new_labels, labels0):
            break
        labels0 = new_labels
        for c in range(k):
            centroids[c] = pts[labels0 == c].mean(axis=0)
    return Membership(labels0 + 1, k), centroids, trace


# ---------------------------------------------------------------------------
# block means and residual


def _core_from_labels(arr: np.ndarray, labels0: np.ndarray, r: int) -> np.ndarray:
    """Grouped means over both ROI modes; empty clusters yield NaN rows."""
    m = np.zeros((arr.shape[2], r))
    m[np.arange(labels0.size), labels0] = 1.0
    sums = np.einsum("ja,nmjk,kb->nmab", m, arr, m, optimize=True)
    counts = np.bincount(labels0, minlength=r).astype(np.float64)
    denom = np.outer(counts, counts)
    with np.errstate(invalid="ignore", divide="ignore"):
        return sums / denom


def _residual_from_core(arr: np.ndarray, labels0: np.ndarray, core: np.ndarray) -> float:
    """Squared Frobenius distance between ``arr`` and its blockwise expansion."""
    total = 0.0
    for i in range(arr.shape[0]):  # chunk over subjects to bound memory
        expected = core[i][:, labels0, :][:, :, labels0]
        total += float(((arr[i] - expected) ** 2).sum())
    return total


def core_means(y, z: Membership) -> CoreTensor:
    """Block means S(z): entry (a, b) averages y over ROI pairs in clusters a, b."""
    arr = _connectome_array(y)
    if z.p != arr.shape[2]:
        raise ValueError(f"membership length {z.p} does not match ROI count {arr.shape[2]}")
    if (z.sizes() == 0).any():
        raise ValueError("membership has empty clusters; block means are undefined")
    return CoreTensor(_core_from_labels(arr, z.labels - 1, z.r))


def block_residual(y, z: Membership) -> float:
    """``||y - S(z) x3 M x4 M||_F^2`` with S(z) the block means under z."""
    arr = _connectome_array(y)
    if z.p != arr.shape[2]:
        raise ValueError(f"membership length {z.p} does not match ROI count {arr.shape[2]}")
    labels0 = z.labels - 1
    core = _core_from_labels(arr, labels0, z.r)
    core = np.nan_to_num(core)  # empty blocks contribute no entries
    return _residual_from_core(arr, labels0, core)


def bic_score(y, z: Membership) -> float:
    """BIC-style score of a clustering; lower is better.

    Gaussian-likelihood fit term on the blockwise residual plus a penalty of
    ln(N) per core-tensor parameter and ln(r) per ROI for the membership
    description: ``N*ln(RSS/N) + n*m*r^2*ln(N) + p*ln(r)``. A zero residual
    returns ``-inf`` (perfect fit sentinel, not an error).
    """
    arr = _connectome_array(y)
    rss = block_residual(arr, z)
    n_total = arr.size
    if rss <= 0.0:
        return float("-inf")
    n_subj, n_mod, p = arr.shape[0], arr.shape[1], arr.shape[2]
    penalty = n_subj * n_mod * z.r**2 * np.log(n_total) + p * np.log(z.r)
    return float(n_total * np.log(rss / n_total) + penalty)


# ---------------------------------------------------------------------------
# spectral initialization


def phsc_init(y, r: int, rng_seed: int) -> Membership:
    """Partial high-order spectral clustering of the ROI modes.

    Computes a leading-r ROI subspace from the mode-3 matricization, tightens
    it once by projecting the fourth mode onto that subspace, projects the
    tensor rows onto the final subspace, and clusters the p projected ROI
    vectors with k-means++/Lloyd. Returns the initialization membership.
    """
    arr = _connectome_array(y)
    p = arr.shape[2]
    r = int(r)
    if not 1 <= r <= p:
        raise ValueError(f"r={r} out of range for {p} ROIs")
    if r == 1:
        return Membership(np.ones(p, dtype=np.int64), 1)

    t = DenseTensor.from_array(arr)
    u_tilde = svd_r(matricize(t, 3), r).basis.array
    projected = mode_product(t, DenseMatrix.from_array(u_tilde.T), 4)
    u_hat = svd_r(matricize(projected, 3), r).basis.array
    compressed = mode_product(t, DenseMatrix.from_array(u_hat.T), 4)
    y3 = matricize(compressed, 3).array  # p x (n * m * r)
    y3_hat = u_hat @ (u_hat.T @ y3)
    membership, _, _ = kmeans(y3_hat, r, rng_seed)
    return membership


# ---------------------------------------------------------------------------
# high-order Lloyd refinement


def _entry_repair(arr: np.ndarray, labels0: np.ndarray, r: int) -> np.ndarray:
    """Fill empty clusters in a user-supplied initialization."""
    labels0 = labels0.copy()
    if (np.bincount(labels0, minlength=r) > 0).all():
        return labels0
    core = np.nan_to_num(_core_from_labels(arr, labels0, r))
    costs = np.empty(labels0.size)
    for j in range(labels0.size):
        expected = core[:, :, labels0[j], labels0]
        costs[j] = ((arr[:, :, j, :] - expected) ** 2).sum()
    _repair_empty(labels0, r, costs)
    return labels0


def hlloyd_refine(
    y, z0: Membership, cfg: HLloydConfig
) -> tuple[Membership, CoreTensor, list[float]]:
    """High-order Lloyd refinement of an ROI clustering.

    Each iteration recomputes the block means S from the current labels,
    collapses the fourth mode to cluster averages, and reassigns every ROI j
    to ``argmin_a || Y4[:, :, j, :] - S[:, :, a, :] ||^2`` (ties to the
    smallest cluster id). Stops when the labels stop changing, when the
    residual improvement drops to ``cfg.tol``, or after ``cfg.max_iters``.

    Returns the refined membership, its block means, and the trace of the
    blockwise residual recorded once per iteration (plus a final entry when
    the last update changed the labels). Empty clusters are repaired with the
    worst-assigned ROI and never raise.
    """
    arr = _connectome_array(y)
    n, m, p = arr.shape[0], arr.shape[1], arr.shape[2]
    if z0.p != p:
        raise ValueError(f"z0 length {z0.p} does not match ROI count {p}")
    if z0.r != cfg.r:
        raise ValueError(f"z0 has r={z0.r} but config says r={cfg.r}")
    r = cfg.r

    labels0 = _entry_repair(arr, z0.labels - 1, r)
    trace: list[float] = []
    core = None
    for _ in range(cfg.max_iters):
        core = _core_from_labels(arr, labels0, r)
        trace.append(_residual_from_core(arr, labels0, core))
        if cfg.tol > 0 and len(trace) >= 2 and trace[-2] - trace[-1] <= cfg.tol:
            break

        # collapse mode 4 to within-cluster averages: Y4[n, m, j, b]
        counts = np.bincount(labels0, minlength=r).astype(np.float64)
        m_norm = np.zeros((p, r))
        m_norm[np.arange(p), labels0] = 1.0 / counts[labels0]
        y4 = np.tensordot(arr, m_norm, axes=([3], [0]))

        # cost[j, a] = ||Y4[:, :, j, :] - S[:, :, a, :]||^2, expanded form
        yj2 = (y4**2).sum(axis=(0, 1, 3))
        sa2 = (core**2).sum(axis=(0, 1, 3))
        cross = np.tensordot(y4, core, axes=([0, 1, 3], [0, 1, 3]))
        cost = yj2[:, None] + sa2[None, :] - 2.0 * cross

        new_labels = cost.argmin(axis=1)
        assign_cost = cost[np.arange(p), new_labels]
        _repair_empty(new_labels, r, assign_cost)
        if np.array_equal(new_labels, labels0):
            break
        labels0 = new_labels
    else:
        # max_iters exhausted with a fresh label update: record its state
        core = _core_from_labels(arr, labels0, r)
        trace.append(_residual_from_core(arr, labels0, core))

    return Membership(labels0 + 1, r), CoreTensor(core), trace


# ---------------------------------------------------------------------------
# cluster-count selection


@dataclass(frozen=True)
class RFit:
    """One clustering fit of the r sweep."""

    r: int
    membership: Membership
    core: CoreTensor
    bic: float
    residual_trace: tuple[float, ...]


def _fit_single_r(arr: np.ndarray, r: int, seed: int, max_iters: int, tol: float) -> RFit:
    z0 = phsc_init(arr, r, seed)
    z, core, trace = hlloyd_refine(arr, z0, HLloydConfig(r=r, max_iters=max_iters, seed=seed, tol=tol))
    return RFit(r, z, core, bic_score(arr, z), tuple(trace))


def _fit_job(args) -> RFit:
    return _fit_single_r(*args)


def sweep_r(
    y,
    r_range,
    rng_seed: int,
    max_iters: int = 20,
    tol: float = 0.0,
    n_workers: int = 1,
) -> list[RFit]:
    """Run phsc_init + hlloyd_refine for every r in ``r_range``.

    Per-r seeds are derived from ``(rng_seed, r)`` so results are independent
    of execution order; with ``n_workers > 1`` the fits run in parallel
    processes and the output is identical to a serial run.
    """
    arr = _connectome_array(y)
    rs = [int(r) for r in r_range]
    if not rs:
        raise ValueError("r_range must be non-empty")
    if max(rs) > arr.shape[2]:
        raise ValueError(f"r={max(rs)} exceeds ROI count {arr.shape[2]}")
    seeds = [int(np.random.SeedSequence([int(rng_seed), r]).generate_state(1)[0]) for r in rs]
    jobs = [(arr, r, s, max_iters, tol) for r, s in zip(rs, seeds)]
    if n_workers > 1:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            return list(pool.map(_fit_job, jobs))
    return [_fit_job(job) for job in jobs]


def select_r(
    y,
    r_range,
    rng_seed: int,
    max_iters: int = 20,
    tol: float = 0.0,
    n_workers: int = 1,
) -> tuple[int, list[tuple[int, float]]]:
    """Sweep ``r_range`` and pick the BIC-minimizing cluster count.

    Returns ``(best_r, [(r, bic), ...])`` with ties broken toward smaller r.
    """
    fits = sweep_r(y, r_range, rng_seed, max_iters=max_iters, tol=tol, n_workers=n_workers)
    table = [(f.r, f.bic) for f in fits]
    best_r = min(table, key=lambda t: (t[1], t[0]))[0]
    return best_r, table
