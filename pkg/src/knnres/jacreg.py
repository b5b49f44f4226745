"""Topology-preservation penalties on the warp's Jacobian.

Both penalties push J^T J toward the identity at the sampled points, which
makes the warp locally distance-preserving (and hence kNN-preserving):

* orth_penalty_fd: dense forward-difference Jacobian, mean absolute entry
  of J^T J - I. Cost grows linearly with d (d+1 net evaluations).
* orth_penalty_hutchinson: stochastic estimate of the squared off-diagonal
  mass of J^T J from k random direction probes. Cost is constant in d
  (k+1 net evaluations), so it is the high-dimensional path.

The Jacobian penalized is that of the FULL map phi = id + delta, the object
the distance-preservation argument is about. Everything is differentiable
with respect to the network parameters through net's reverse mode.
"""

from dataclasses import dataclass
from itertools import product

import numpy as np

from .core import as_pointset
from .errors import InvalidArgumentError
from .net import ParamGradient, ResidualNet, _backward_arr, _forward_arr

HUTCHINSON_MODES = ("quadratic-form", "alg3-literal")


@dataclass(frozen=True)
class FdConfig:
    epsilon: float = 0.005  # finite-difference step, coordinate units

    def __post_init__(self):
        if not self.epsilon > 0:
            raise InvalidArgumentError(f"epsilon must be > 0, got {self.epsilon}")


@dataclass(frozen=True)
class HutchinsonConfig:
    epsilon: float = 0.05  # direction scale
    k: int = 5  # number of Rademacher directions
    mode: str = "quadratic-form"

    def __post_init__(self):
        if not self.epsilon > 0:
            raise InvalidArgumentError(f"epsilon must be > 0, got {self.epsilon}")
        if self.k < 1:
            raise InvalidArgumentError(f"k must be >= 1, got {self.k}")
        if self.mode not in HUTCHINSON_MODES:
            raise InvalidArgumentError(f"mode must be one of {HUTCHINSON_MODES}")


def _delta_eval(net_or_fn):
    """Evaluator returning (delta(Y), backward cache or None).

    Differencing delta instead of the full map keeps the skip path out of
    the subtraction, so the identity contribution to the Jacobian is exact
    (no float cancellation) and a fresh net scores a penalty of exactly 0.
    """
    if isinstance(net_or_fn, ResidualNet):
        def dfn(Y):
            _, cache = _forward_arr(net_or_fn, Y)
            return cache[0][-1], cache
        return dfn

    def dfn(Y):
        return np.asarray(net_or_fn(Y), dtype=np.float64) - Y, None

    return dfn


def fd_jacobian(net_or_fn, Y, epsilon: float) -> np.ndarray:
    """Forward-difference Jacobian of the full map at every point.

    Returns an (m, d, d) array; [p, :, i] is (phi(y_p + eps e_i) - phi(y_p)) / eps
    computed as I[:, i] + (delta(y_p + eps e_i) - delta(y_p)) / eps, exact to
    machine precision for affine maps.
    """
    if not epsilon > 0:
        raise InvalidArgumentError(f"epsilon must be > 0, got {epsilon}")
    dfn = _delta_eval(net_or_fn)
    Y = as_pointset(Y).data
    m, d = Y.shape
    base, _ = dfn(Y)
    J = np.zeros((m, d, d))
    for i in range(d):
        step = np.zeros(d)
        step[i] = epsilon
        di, _ = dfn(Y + step)
        J[:, :, i] = (di - base) / epsilon
        J[:, i, i] += 1.0
    return J


def orth_penalty_fd(net: ResidualNet, Y, cfg: FdConfig):
    """Mean absolute entry of J^T J - I over points, with parameter gradient.

    Zero exactly iff the finite-difference Jacobian is orthogonal at every
    sampled point. Reverse mode runs through all m*(d+1) net evaluations.
    """
    Y = as_pointset(Y)
    if Y.d != net.d:
        raise InvalidArgumentError(f"net expects d={net.d}, got d={Y.d}")
    eps = cfg.epsilon
    m, d = Y.m, Y.d

    dfn = _delta_eval(net)
    base, cache0 = dfn(Y.data)
    deltas, caches = [], []
    for i in range(d):
        step = np.zeros(d)
        step[i] = eps
        d_i, cache_i = dfn(Y.data + step)
        deltas.append(d_i)
        caches.append(cache_i)
    J = np.stack([(di - base) / eps for di in deltas], axis=2)  # (m, out, in)
    J[:, np.arange(d), np.arange(d)] += 1.0

    M = np.einsum("pci,pcj->pij", J, J) - np.eye(d)
    value = float(np.abs(M).mean())

    # d value / d M = sign(M) / (m d^2);  d value / d J = J (S + S^T)
    S = np.sign(M) / (m * d * d)
    GJ = np.einsum("pck,pki->pci", J, S + np.swapaxes(S, 1, 2))

    grad = ParamGradient.zeros_like(net)
    cot_base = np.zeros_like(base)
    for i in range(d):
        cot_i = GJ[:, :, i] / eps
        cot_base -= cot_i
        g_i, _ = _backward_arr(net, caches[i], cot_i)
        grad = grad + g_i
    g0, _ = _backward_arr(net, cache0, cot_base)
    return value, grad + g0


def _rademacher(rng, shape, epsilon):
    return (rng.integers(0, 2, size=shape) * 2 - 1).astype(np.float64) * epsilon


def orth_penalty_hutchinson(net: ResidualNet, Y, cfg: HutchinsonConfig, seed=0):
    """Stochastic orthogonality penalty from k scaled Rademacher probes.

    quadratic-form (default): per point, q_r = ||phi(y + r) - phi(y)||^2 and
    the value is mean_p Var_r(q_r) / (4 eps^4), an unbiased estimate (for
    affine maps) of sum_{i<j} (J^T J)_ij^2 -- off-diagonal mass only, so it
    enforces orthogonality but not unit scale.

    alg3-literal: per-element variance of the normalized finite-difference
    vectors across the k probes, reduced by max. Kept for comparison; note
    it does NOT vanish on the identity map (each element of the normalized
    probe is +-1 with unit variance, so the statistic is ~1, not 0).

    Directions are drawn fresh from `seed`; pass a distinct seed per
    training step. Sample variance (ddof=1) is used in quadratic-form mode,
    population variance in alg3-literal mode (the distributional value the
    identity-map statistic is quoted for).
    """
    Y = as_pointset(Y)
    if Y.d != net.d:
        raise InvalidArgumentError(f"net expects d={net.d}, got d={Y.d}")
    if cfg.k < 2:
        raise InvalidArgumentError("k must be >= 2 for a defined sample variance")
    rng = np.random.default_rng(seed)
    R = _rademacher(rng, (cfg.k, Y.m, Y.d), cfg.epsilon)
    if cfg.mode == "quadratic-form":
        return _hutch_quadratic_form(net, Y.data, R, cfg.epsilon, ddof=1)
    return _hutch_alg3_literal(net, Y.data, R, cfg.epsilon)


def orth_penalty_hutchinson_exact(net: ResidualNet, Y, epsilon: float) -> float:
    """Quadratic-form statistic with ALL 2^d sign vectors instead of samples.

    Exhausts the Rademacher distribution (population variance), so for
    affine maps the result equals sum_{i<j} (J^T J)_ij^2 exactly. Intended
    for low d (cost 2^d evaluations); value only, no gradient.
    """
    Y = as_pointset(Y)
    if Y.d != net.d:
        raise InvalidArgumentError(f"net expects d={net.d}, got d={Y.d}")
    if Y.d > 12:
        raise InvalidArgumentError(f"exhaustive enumeration needs d <= 12, got d={Y.d}")
    signs = np.array(list(product((-1.0, 1.0), repeat=Y.d)))
    R = np.repeat(signs[:, None, :], Y.m, axis=1) * epsilon
    value, _ = _hutch_quadratic_form(net, Y.data, R, epsilon, ddof=0, want_grad=False)
    return value


def _hutch_quadratic_form(net, Y, R, epsilon, ddof, want_grad=True):
    k, m, _ = R.shape
    dfn = _delta_eval(net)
    base, cache0 = dfn(Y)
    diffs, caches = [], []
    for j in range(k):
        d_j, cache_j = dfn(Y + R[j])
        diffs.append(R[j] + (d_j - base))  # phi(y + r) - phi(y), skip part exact
        caches.append(cache_j)
    q = np.stack([np.sum(dd * dd, axis=1) for dd in diffs])  # (k, m)
    q_bar = q.mean(axis=0)
    var = np.sum((q - q_bar) ** 2, axis=0) / (k - ddof)
    scale = 4.0 * epsilon ** 4
    value = float(var.mean() / scale)
    if not want_grad:
        return value, None

    # dV/dq_j = 2 (q_j - q_bar) / (k - ddof); dq_j = 2 (out_j - base) . (d out_j - d base)
    w = 2.0 * (q - q_bar) / ((k - ddof) * m * scale)  # (k, m)
    grad = ParamGradient.zeros_like(net)
    cot_base = np.zeros_like(base)
    for j in range(k):
        cot_j = (2.0 * w[j])[:, None] * diffs[j]
        cot_base -= cot_j
        g_j, _ = _backward_arr(net, caches[j], cot_j)
        grad = grad + g_j
    g0, _ = _backward_arr(net, cache0, cot_base)
    return value, grad + g0


def _hutch_alg3_literal(net, Y, R, epsilon):
    k, m, d = R.shape
    dfn = _delta_eval(net)
    base, cache0 = dfn(Y)
    sfd, caches = [], []
    for j in range(k):
        d_j, cache_j = dfn(Y + R[j])
        sfd.append((R[j] + (d_j - base)) / epsilon)
        caches.append(cache_j)
    sfd = np.stack(sfd)  # (k, m, d)
    var = sfd.var(axis=0)  # population variance per element
    flat = int(np.argmax(var))
    p, c = divmod(flat, d)
    value = float(var[p, c])

    # subgradient through the max: only element (p, c) contributes
    s = sfd[:, p, c]
    ds = 2.0 * (s - s.mean()) / k
    grad = ParamGradient.zeros_like(net)
    cot_base = np.zeros_like(base)
    for j in range(k):
        cot_j = np.zeros_like(base)
        cot_j[p, c] = ds[j] / epsilon
        cot_base -= cot_j
        g_j, _ = _backward_arr(net, caches[j], cot_j)
        grad = grad + g_j
    g0, _ = _backward_arr(net, cache0, cot_base)
    return value, grad + g0
