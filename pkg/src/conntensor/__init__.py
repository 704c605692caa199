"""Tensor block-model clustering and boosted classification for connectome tensors."""

from .tensor import (
    DenseTensor,
    DenseMatrix,
    matricize,
    dematricize,
    mode_product,
    multilinear_product,
    frobenius_norm,
)
from .subspace import SingularSubspace, svd_r
from .clustering import (
    Membership,
    CoreTensor,
    HLloydConfig,
    kmeanspp_seed,
    kmeans,
    core_means,
    phsc_init,
    hlloyd_refine,
    block_residual,
    bic_score,
    select_r,
    sweep_r,
)
from .synthetic import PlantedSpec, generate, misclustering_rate, generate_labeled

__version__ = "0.1.0"
