"""Planted tensor block models for verification.

``generate`` inverts the blockwise model: draw a membership, draw a core of
well-separated block means, expand the core along both ROI modes with the
membership matrix, and add i.i.d. Gaussian noise. Because the ground truth is
known exactly, recovery, residual, and model-selection behaviour of the
clustering stage can be checked without any real data.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .clustering import Membership, CoreTensor
from .tensor import DenseMatrix, DenseTensor, multilinear_product

__all__ = [
    "PlantedSpec",
    "LabeledDataset",
    "generate",
    "misclustering_rate",
    "generate_labeled",
]

# Distinct grid levels for core entries; separation checks below make the
# block-mean profiles identifiable even for tiny cores.
_GRID_LEVELS = 3
_MAX_REDRAWS = 100


@dataclass(frozen=True)
class PlantedSpec:
    """Parameters of a planted blockwise connectome tensor.

    ``core_gap`` is the spacing of the grid the block means are drawn on, so
    any two distinct means differ by at least that much. ``cluster_sizes``
    overrides the default balanced memberships (sizes differing by <= 1).
    """

    n_subjects: int
    n_modalities: int
    p: int
    r_true: int
    core_gap: float = 1.0
    noise_sigma: float = 0.0
    symmetric: bool = True
    seed: int = 0
    cluster_sizes: tuple[int, ...] | None = None

    def __post_init__(self):
        if min(self.n_subjects, self.n_modalities, self.p, self.r_true) < 1:
            raise ValueError("all dimensions must be positive")
        if self.r_true > self.p:
            raise ValueError(f"r_true={self.r_true} exceeds p={self.p}")
        if self.core_gap <= 0:
            raise ValueError("core_gap must be positive")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be nonnegative")
        if self.cluster_sizes is not None:
            sizes = tuple(int(s) for s in self.cluster_sizes)
            if len(sizes) != self.r_true or any(s < 1 for s in sizes):
                raise ValueError("cluster_sizes must give a positive size per cluster")
            if sum(sizes) != self.p:
                raise ValueError(f"cluster_sizes must sum to p={self.p}")
            object.__setattr__(self, "cluster_sizes", sizes)


def _balanced_sizes(p: int, r: int) -> np.ndarray:
    base, extra = divmod(p, r)
    return np.array([base + (1 if i < extra else 0) for i in range(r)])


def _profiles_distinct(core: np.ndarray) -> bool:
    r = core.shape[2]
    prof = core.transpose(2, 0, 1, 3).reshape(r, -1)
    for a in range(r):
        for b in range(a + 1, r):
            if np.array_equal(prof[a], prof[b]):
                return False
    return True


def _draw_core(spec: PlantedSpec, rng: np.random.Generator) -> np.ndarray:
    shape = (spec.n_subjects, spec.n_modalities, spec.r_true, spec.r_true)
    for _ in range(_MAX_REDRAWS):
        grid = rng.integers(0, _GRID_LEVELS, size=shape).astype(np.float64)
        core = spec.core_gap * grid
        if spec.symmetric:
            upper = np.triu(core)
            core = upper + np.triu(core, 1).transpose(0, 1, 3, 2)
        if _profiles_distinct(core):
            return core
    # deterministic fallback: separate the diagonal so profiles cannot collide
    core = core.copy()
    for a in range(spec.r_true):
        core[0, 0, a, a] += spec.core_gap * (a + 1)
    return core


def generate(spec: PlantedSpec, return_noise: bool = False):
    """Draw one planted tensor: returns (y, true membership, true core).

    ``y`` equals the multilinear expansion of the core by the membership
    matrix on modes 3 and 4, plus N(0, noise_sigma^2) noise; with
    ``symmetric`` the core and the noise are mirrored across the ROI modes so
    every (subject, modality) slice is exactly symmetric. With
    ``return_noise`` the noise term is appended to the returned tuple.
    """
    rng = np.random.default_rng(spec.seed)
    sizes = (
        np.array(spec.cluster_sizes)
        if spec.cluster_sizes is not None
        else _balanced_sizes(spec.p, spec.r_true)
    )
    labels = np.repeat(np.arange(1, spec.r_true + 1), sizes)
    rng.shuffle(labels)
    z = Membership(labels, spec.r_true)

    core = _draw_core(spec, rng)
    m = DenseMatrix.from_array(z.onehot())
    expanded = multilinear_product(
        DenseTensor.from_array(core), [(m, 3), (m, 4)]
    ).array

    shape = (spec.n_subjects, spec.n_modalities, spec.p, spec.p)
    if spec.noise_sigma > 0:
        noise = rng.normal(0.0, spec.noise_sigma, size=shape)
        if spec.symmetric:
            upper = np.triu(noise)
            noise = upper + np.triu(noise, 1).transpose(0, 1, 3, 2)
        y = expanded + noise
    else:
        noise = np.zeros(shape)
        y = expanded.copy()
    if return_noise:
        return y, z, CoreTensor(core), noise
    return y, z, CoreTensor(core)


def misclustering_rate(z_hat: Membership, z_true: Membership) -> float:
    """Minimal label-mismatch fraction over all cluster relabelings."""
    if z_hat.p != z_true.p:
        raise ValueError(f"label vectors differ in length: {z_hat.p} vs {z_true.p}")
    if z_hat.r != z_true.r:
        raise ValueError(f"cluster counts differ: {z_hat.r} vs {z_true.r}")
    r = z_hat.r
    confusion = np.zeros((r, r), dtype=np.int64)
    np.add.at(confusion, (z_hat.labels - 1, z_true.labels - 1), 1)
    rows, cols = linear_sum_assignment(-confusion)
    return 1.0 - confusion[rows, cols].sum() / z_hat.p


@dataclass(frozen=True)
class LabeledDataset:
    """Planted tensor plus covariates and binary labels for supervised tests.

    The label signal lives in exactly one block-mean feature (named by
    ``signal_feature``); covariates are pure noise.
    """

    y: np.ndarray
    membership: Membership
    core: CoreTensor
    covariates: np.ndarray  # (n, 4): age, gender, race, hiv
    labels: np.ndarray  # (n,) in {0, 1}
    signal_feature: str


def generate_labeled(spec: PlantedSpec, effect: float) -> LabeledDataset:
    """Planted tensor with labels drawn from a logistic model on one block mean.

    The signal is the true core entry of block (1, 2) in the first modality
    (block (1, 1) when r_true == 1), standardized across subjects:
    ``P(label=1) = sigmoid(effect * signal)``. With ``effect == 0`` the labels
    are independent coin flips.
    """
    if effect < 0:
        raise ValueError("effect must be nonnegative")
    y, z, core = generate(spec)
    n = spec.n_subjects
    a, b = (0, 1) if spec.r_true >= 2 else (0, 0)
    signal = core.values[:, 0, a, b]
    sd = signal.std()
    scaled = (signal - signal.mean()) / sd if sd > 0 else np.zeros(n)

    rng = np.random.default_rng(np.random.SeedSequence([spec.seed, 0x1AB7]))
    prob = 1.0 / (1.0 + np.exp(-effect * scaled))
    labels = (rng.random(n) < prob).astype(np.int64)
    # supervised consumers need both classes; redraw on degenerate draws
    tries = 0
    while labels.min() == labels.max() and n >= 2 and tries < _MAX_REDRAWS:
        labels = (rng.random(n) < prob).astype(np.int64)
        tries += 1
    if labels.min() == labels.max() and n >= 2:
        labels[int(np.argmax(scaled))] = 1
        labels[int(np.argmin(scaled))] = 0

    age = rng.normal(40.0, 9.0, size=n)
    binary = rng.integers(0, 2, size=(n, 3)).astype(np.float64)
    covariates = np.column_stack([age, binary])
    return LabeledDataset(y, z, core, covariates, labels, f"fun({a + 1},{b + 1})")
