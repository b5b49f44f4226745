"""Synthetic benchmark generation: base shapes and controlled deformations.

Shapes live in the unit box. Deformations keep row correspondence (row i of
the output is the moved row i of the input), so RMSE against the original
positions is available at test time even though training never sees it.
Every generator is a pure function of (spec, seed): same inputs, same bytes.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

from .core import PointSet, as_pointset
from .errors import InvalidArgumentError

DEFORM_KINDS = ("rbf", "scale", "rotate", "translate")
SHAPE_KINDS = ("ring", "grid", "two-moons", "gaussian-mixture")

# level -> coefficient std for the RBF field on unit-box shapes
LEVEL_SIGMA = {0: 0.0, 1: 0.02, 2: 0.04, 3: 0.06, 4: 0.08, 5: 0.10}
LEVEL_CENTERS = 25
LEVEL_WIDTH = 0.3


@dataclass(frozen=True)
class DeformSpec:
    kind: str
    seed: int = 0
    # rbf
    n_centers: int = LEVEL_CENTERS
    kernel_width: float = LEVEL_WIDTH
    coeff_std: float = 0.05
    # scale / rotate
    scale: float = 1.0
    angle: float = 0.0
    center: tuple = None  # defaults to the centroid
    # translate
    vector: tuple = field(default=None)

    def __post_init__(self):
        if self.kind not in DEFORM_KINDS:
            raise InvalidArgumentError(f"kind must be one of {DEFORM_KINDS}")
        if self.kind == "rbf":
            if self.n_centers < 1:
                raise InvalidArgumentError(f"n_centers must be >= 1, got {self.n_centers}")
            if not self.kernel_width > 0:
                raise InvalidArgumentError(f"kernel_width must be > 0, got {self.kernel_width}")
            if self.coeff_std < 0:
                raise InvalidArgumentError(f"coeff_std must be >= 0, got {self.coeff_std}")


def level_spec(level: int, seed: int = 0) -> DeformSpec:
    """RBF DeformSpec for a deformation level 0 (identity) through 5 (severe)."""
    if level not in LEVEL_SIGMA:
        raise InvalidArgumentError(f"level must be in {sorted(LEVEL_SIGMA)}, got {level}")
    return DeformSpec(kind="rbf", seed=seed, coeff_std=LEVEL_SIGMA[level])


def rbf_displacement_field(ps, spec: DeformSpec):
    """Smooth random field y -> sum_k c_k exp(-||y - mu_k||^2 / (2 w^2)).

    Centers are drawn uniformly over the input's bounding box and the
    coefficients are coeff_std times standard normals, so displacement
    magnitudes scale exactly linearly in coeff_std for a fixed seed.
    Returns a closure usable on arbitrary (m, d) arrays.
    """
    ps = as_pointset(ps)
    rng = np.random.default_rng(spec.seed)
    lo = ps.data.min(axis=0)
    hi = ps.data.max(axis=0)
    centers = rng.uniform(lo, hi, size=(spec.n_centers, ps.d))
    coeffs = spec.coeff_std * rng.standard_normal((spec.n_centers, ps.d))
    w2 = 2.0 * spec.kernel_width ** 2

    def field(Y):
        Y = np.asarray(Y, dtype=np.float64)
        K = np.exp(-cdist(Y, centers, "sqeuclidean") / w2)
        return K @ coeffs

    return field


def rbf_deform(ps, spec: DeformSpec) -> PointSet:
    """Displace every point by a seeded smooth RBF field."""
    if spec.kind != "rbf":
        raise InvalidArgumentError(f"expected kind 'rbf', got '{spec.kind}'")
    ps = as_pointset(ps)
    field = rbf_displacement_field(ps, spec)
    return PointSet(ps.data + field(ps.data))


def _center_of(ps, spec):
    if spec.center is None:
        return ps.data.mean(axis=0)
    c = np.asarray(spec.center, dtype=np.float64)
    if c.shape != (ps.d,):
        raise InvalidArgumentError(f"center shape {c.shape} incompatible with d={ps.d}")
    return c


def scale_deform(ps, spec: DeformSpec) -> PointSet:
    """y -> center + s (y - center); center defaults to the centroid."""
    if spec.kind != "scale":
        raise InvalidArgumentError(f"expected kind 'scale', got '{spec.kind}'")
    ps = as_pointset(ps)
    c = _center_of(ps, spec)
    return PointSet(c + spec.scale * (ps.data - c))


def rotate_deform(ps, spec: DeformSpec) -> PointSet:
    """Planar rotation about a center; 2-D point sets only."""
    if spec.kind != "rotate":
        raise InvalidArgumentError(f"expected kind 'rotate', got '{spec.kind}'")
    ps = as_pointset(ps)
    if ps.d != 2:
        raise InvalidArgumentError(f"rotation is 2-D only, got d={ps.d}")
    c = _center_of(ps, spec)
    t = spec.angle
    R = np.array([[np.cos(t), -np.sin(t)], [np.sin(t), np.cos(t)]])
    return PointSet(c + (ps.data - c) @ R.T)


def translate_deform(ps, spec: DeformSpec) -> PointSet:
    if spec.kind != "translate":
        raise InvalidArgumentError(f"expected kind 'translate', got '{spec.kind}'")
    ps = as_pointset(ps)
    v = np.asarray(spec.vector, dtype=np.float64)
    if v.shape != (ps.d,):
        raise InvalidArgumentError(f"vector shape {v.shape} incompatible with d={ps.d}")
    return PointSet(ps.data + v)


_DEFORM_FNS = {
    "rbf": rbf_deform,
    "scale": scale_deform,
    "rotate": rotate_deform,
    "translate": translate_deform,
}


def apply_deform(ps, spec: DeformSpec) -> PointSet:
    return _DEFORM_FNS[spec.kind](ps, spec)


def _minmax_unit_box(X):
    lo = X.min(axis=0)
    span = X.max(axis=0) - lo
    span[span == 0] = 1.0
    return (X - lo) / span


def make_shape(kind: str, m: int, d: int = 2, seed: int = 0) -> PointSet:
    """Deterministic seeded base shapes, normalized to the unit box.

    ring/grid/two-moons are 2-D; gaussian-mixture supports any d. The ring
    and grid are constructed directly inside the box (ring radius exactly
    0.5 about (0.5, 0.5)); the noisy shapes are minmax-normalized.
    """
    if kind not in SHAPE_KINDS:
        raise InvalidArgumentError(f"kind must be one of {SHAPE_KINDS}")
    if m < 1:
        raise InvalidArgumentError(f"m must be >= 1, got {m}")
    if kind == "gaussian-mixture":
        ps, _, _ = gaussian_mixture(m, d, seed=seed)
        return ps
    if d != 2:
        raise InvalidArgumentError(f"shape '{kind}' is 2-D only, got d={d}")
    if kind == "ring":
        theta = 2.0 * np.pi * np.arange(m) / m
        pts = 0.5 + 0.5 * np.column_stack([np.cos(theta), np.sin(theta)])
        return PointSet(pts)
    if kind == "grid":
        side = int(np.ceil(np.sqrt(m)))
        axis = np.linspace(0.0, 1.0, side)
        gx, gy = np.meshgrid(axis, axis)
        pts = np.column_stack([gx.ravel(), gy.ravel()])[:m]
        return PointSet(pts)
    # two-moons
    rng = np.random.default_rng(seed)
    m1 = m // 2
    m2 = m - m1
    t1 = np.pi * np.arange(m1) / max(m1 - 1, 1)
    t2 = np.pi * np.arange(m2) / max(m2 - 1, 1)
    upper = np.column_stack([np.cos(t1), np.sin(t1)])
    lower = np.column_stack([1.0 - np.cos(t2), 0.5 - np.sin(t2)])
    pts = np.vstack([upper, lower]) + 0.05 * rng.standard_normal((m, 2))
    return PointSet(_minmax_unit_box(pts))


def gaussian_mixture(m: int, d: int, n_components: int = 3, seed: int = 0,
                     component_std: float = 0.04):
    """Seeded mixture sample with means kept at least 6 std apart.

    Returns (PointSet, labels, means) with points and means minmax-mapped
    toward the unit box together, so nearest-centroid label recovery stays
    meaningful after normalization.
    """
    if n_components < 1:
        raise InvalidArgumentError(f"n_components must be >= 1, got {n_components}")
    if m < n_components:
        raise InvalidArgumentError(f"need m >= n_components, got m={m}")
    rng = np.random.default_rng(seed)
    for _ in range(1000):
        means = rng.uniform(0.2, 0.8, size=(n_components, d))
        if n_components == 1:
            break
        gaps = cdist(means, means)
        np.fill_diagonal(gaps, np.inf)
        if gaps.min() >= 6.0 * component_std:
            break
    labels = np.arange(m) % n_components
    pts = means[labels] + component_std * rng.standard_normal((m, d))
    lo = pts.min(axis=0)
    span = pts.max(axis=0) - lo
    span[span == 0] = 1.0
    pts = (pts - lo) / span
    means = (means - lo) / span
    return PointSet(pts), labels, means
