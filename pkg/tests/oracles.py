"""Independent reference implementations used to check the library.

Everything here is deliberately written the slow, obvious way (python
loops, exhaustive enumeration, finite differences) and never calls the
code path it is checking.
"""

import numpy as np


def brute_knn(points, k):
    """O(m^2 d) kNN adjacency with distance-then-index tie-breaking."""
    pts = [list(map(float, row)) for row in points]
    m = len(pts)
    adj = np.zeros((m, m), dtype=bool)
    for i in range(m):
        cand = []
        for j in range(m):
            if j == i:
                continue
            d2 = sum((a - b) ** 2 for a, b in zip(pts[i], pts[j]))
            cand.append((d2, j))
        cand.sort()
        for _, j in cand[:k]:
            adj[i, j] = True
    return adj


def perturbed(net, layer, which, idx, h):
    """Copy of `net` with one scalar parameter nudged by h."""
    layers = []
    for li, (W, b) in enumerate(net.layers):
        W = W.copy()
        b = b.copy()
        if li == layer:
            if which == 0:
                W[idx] += h
            else:
                b[idx] += h
        layers.append((W, b))
    return net.with_layers(tuple(layers))


def fd_param_grad(loss_fn, net, h=1e-6):
    """Central finite differences of a scalar loss over every parameter."""
    grads = []
    for li, (W, b) in enumerate(net.layers):
        gW = np.zeros_like(W)
        gb = np.zeros_like(b)
        for which, g in ((0, gW), (1, gb)):
            it = np.nditer(g, flags=["multi_index"])
            for _ in it:
                idx = it.multi_index
                up = loss_fn(perturbed(net, li, which, idx, +h))
                dn = loss_fn(perturbed(net, li, which, idx, -h))
                g[idx] = (up - dn) / (2.0 * h)
        grads.append((gW, gb))
    return grads


def flatten_layered(layered):
    return np.concatenate(
        [np.concatenate([W.ravel(), b.ravel()]) for W, b in layered]
    )


def grad_rel_error(analytic, fd_layers):
    """Relative L2 error between an analytic ParamGradient and FD layers."""
    a = analytic.to_vector()
    f = flatten_layered(fd_layers)
    return float(np.linalg.norm(a - f) / max(np.linalg.norm(f), 1e-12))


def randomized_net(d, hidden, seed, scale=0.3):
    """Net with every layer (incl. output) randomized so all paths are live."""
    import knnres

    rng = np.random.default_rng(seed)
    net = knnres.init_net(d, hidden, seed=seed)
    layers = tuple(
        (W + scale * rng.standard_normal(W.shape), b + scale * rng.standard_normal(b.shape))
        for W, b in net.layers
    )
    return net.with_layers(layers)


def offdiag_sq_sum(J):
    """sum_{i<j} (J^T J)_ij^2 for a single d x d Jacobian."""
    M = J.T @ J
    d = M.shape[0]
    total = 0.0
    for i in range(d):
        for j in range(i + 1, d):
            total += M[i, j] ** 2
    return total


def energy_limit(X, Y):
    """Large-blur limit of the debiased transport divergence.

    0.5 * integral of (-C) against (alpha - beta)^2 with C = ||x-y||^2 / 2
    and uniform weights, computed by direct summation.
    """
    def mean_cost(A, B):
        total = 0.0
        for a in A:
            for b in B:
                total += 0.5 * float(np.sum((a - b) ** 2))
        return total / (len(A) * len(B))

    return mean_cost(X, Y) - 0.5 * mean_cost(X, X) - 0.5 * mean_cost(Y, Y)
