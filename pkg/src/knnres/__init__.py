"""Topology-preserving point-set registration.

A target point cloud is aligned to a reference by training a residual
displacement network under a Jacobian-orthogonality penalty, so the warp
moves points coherently and keeps each point's nearest-neighbour structure
intact. Alignment quality is measured by a debiased entropic-transport
divergence or a Gaussian-kernel MMD, both with analytic gradients.
"""

__version__ = "0.1.0"

from .core import (KnnGraph, PointSet, as_pointset, build_knn_graph,
                   hamming_loss, pca_project, rmse)
from .errors import DivergenceError, InvalidArgumentError, InvalidDataError
from .jacreg import (FdConfig, HutchinsonConfig, fd_jacobian, orth_penalty_fd,
                     orth_penalty_hutchinson, orth_penalty_hutchinson_exact)
from .losses import (DualPotentials, MmdConfig, SinkhornConfig, SinkhornResult,
                     gaussian_kernel, mmd, ot_eps, sinkhorn_divergence,
                     sinkhorn_potentials)
from .net import (ParamGradient, ResidualNet, affine_net, backward, forward,
                  init_net, load_net, save_net)
from .optim import AdamState, PlateauState, adam_step, plateau_step
from .preprocess import apply_fitted, parse_steps, preprocess
from .synthgen import (DeformSpec, apply_deform, gaussian_mixture, level_spec,
                       make_shape, rbf_deform, rbf_displacement_field,
                       rotate_deform, scale_deform, translate_deform)
from .trainer import LossReport, TrainConfig, total_loss, train, transform
from .dataio import load_pointset, save_pointset

__all__ = [
    "PointSet", "KnnGraph", "as_pointset", "build_knn_graph", "hamming_loss",
    "rmse", "pca_project",
    "InvalidArgumentError", "InvalidDataError", "DivergenceError",
    "ResidualNet", "ParamGradient", "init_net", "affine_net", "forward",
    "backward", "save_net", "load_net",
    "MmdConfig", "SinkhornConfig", "DualPotentials", "SinkhornResult",
    "gaussian_kernel", "mmd", "sinkhorn_potentials", "ot_eps",
    "sinkhorn_divergence",
    "FdConfig", "HutchinsonConfig", "fd_jacobian", "orth_penalty_fd",
    "orth_penalty_hutchinson", "orth_penalty_hutchinson_exact",
    "AdamState", "PlateauState", "adam_step", "plateau_step",
    "TrainConfig", "LossReport", "total_loss", "train", "transform",
    "DeformSpec", "make_shape", "gaussian_mixture", "level_spec",
    "apply_deform", "rbf_deform", "rbf_displacement_field", "scale_deform",
    "rotate_deform", "translate_deform",
    "preprocess", "apply_fitted", "parse_steps",
    "load_pointset", "save_pointset",
    "__version__",
]
