"""Residual warp: phi(y) = y + delta(y) with delta a small MLP.

The MLP applies affine layers with a leaky-rectifier activation between
them (none after the last layer). The output layer is zero-initialized, so
a fresh net is exactly the identity map. Reverse-mode gradients are
implemented by hand; forward/backward over disjoint batches are safe to
run concurrently because nets are immutable.
"""

from dataclasses import dataclass, replace

import numpy as np

from .core import PointSet, as_pointset
from .errors import InvalidArgumentError

NET_FORMAT_VERSION = 1


@dataclass(frozen=True)
class ResidualNet:
    """Parameters of the residual warp; layers are (W, b) with W shaped (out, in)."""

    d: int
    hidden: tuple
    leaky_slope: float
    layers: tuple  # ((W1, b1), ..., (WL, bL)); WL maps back to d

    def __post_init__(self):
        widths = [self.d, *self.hidden, self.d]
        if len(self.layers) != len(widths) - 1:
            raise InvalidArgumentError(
                f"expected {len(widths) - 1} layers, got {len(self.layers)}"
            )
        frozen = []
        for i, (W, b) in enumerate(self.layers):
            W = np.asarray(W, dtype=np.float64)
            b = np.asarray(b, dtype=np.float64)
            if W.shape != (widths[i + 1], widths[i]) or b.shape != (widths[i + 1],):
                raise InvalidArgumentError(
                    f"layer {i}: W{W.shape}, b{b.shape} incompatible with dims {widths}"
                )
            if not (np.isfinite(W).all() and np.isfinite(b).all()):
                raise InvalidArgumentError(f"layer {i} has non-finite parameters")
            W = W.copy()
            b = b.copy()
            W.flags.writeable = False
            b.flags.writeable = False
            frozen.append((W, b))
        object.__setattr__(self, "layers", tuple(frozen))
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))

    def with_layers(self, layers) -> "ResidualNet":
        return replace(self, layers=tuple(layers))


@dataclass
class ParamGradient:
    """d-loss/d-theta, shape-congruent with ResidualNet.layers."""

    layers: tuple  # ((dW1, db1), ...)

    @classmethod
    def zeros_like(cls, net: ResidualNet) -> "ParamGradient":
        return cls(tuple((np.zeros_like(W), np.zeros_like(b)) for W, b in net.layers))

    def __add__(self, other):
        return ParamGradient(
            tuple(
                (dW + oW, db + ob)
                for (dW, db), (oW, ob) in zip(self.layers, other.layers)
            )
        )

    def __mul__(self, scalar):
        return ParamGradient(tuple((dW * scalar, db * scalar) for dW, db in self.layers))

    __rmul__ = __mul__

    def norm(self) -> float:
        total = 0.0
        for dW, db in self.layers:
            total += float(np.sum(dW * dW)) + float(np.sum(db * db))
        return float(np.sqrt(total))

    def to_vector(self) -> np.ndarray:
        return np.concatenate([np.concatenate([dW.ravel(), db.ravel()]) for dW, db in self.layers])


def init_net(d: int, hidden_widths, leaky_slope: float = 0.01, seed: int = 0) -> ResidualNet:
    """Seeded net construction: scaled-uniform fan-in hidden weights, zero output layer.

    The zero output layer makes phi the exact identity at initialization.
    """
    if d < 1:
        raise InvalidArgumentError(f"d must be >= 1, got {d}")
    hidden_widths = tuple(int(h) for h in hidden_widths)
    if any(h < 1 for h in hidden_widths):
        raise InvalidArgumentError(f"hidden widths must be >= 1, got {hidden_widths}")
    rng = np.random.default_rng(seed)
    widths = [d, *hidden_widths, d]
    layers = []
    for i in range(len(widths) - 1):
        fan_in, fan_out = widths[i], widths[i + 1]
        if i == len(widths) - 2:
            W = np.zeros((fan_out, fan_in))
            b = np.zeros(fan_out)
        else:
            bound = 1.0 / np.sqrt(fan_in)
            W = rng.uniform(-bound, bound, size=(fan_out, fan_in))
            b = np.zeros(fan_out)
        layers.append((W, b))
    return ResidualNet(d=d, hidden=hidden_widths, leaky_slope=leaky_slope, layers=tuple(layers))


def affine_net(matrix, offset=None, leaky_slope: float = 0.01) -> ResidualNet:
    """Net computing exactly phi(y) = A y + c, built as a single affine layer.

    delta(y) = (A - I) y + c, so the residual block realizes any affine map;
    handy for constructing rotation/scaling/shear test and demo warps.
    """
    A = np.asarray(matrix, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InvalidArgumentError(f"matrix must be square, got {A.shape}")
    d = A.shape[0]
    c = np.zeros(d) if offset is None else np.asarray(offset, dtype=np.float64)
    if c.shape != (d,):
        raise InvalidArgumentError(f"offset shape {c.shape} incompatible with d={d}")
    return ResidualNet(
        d=d, hidden=(), leaky_slope=leaky_slope, layers=((A - np.eye(d), c),)
    )


def _leaky(z, slope):
    return np.where(z >= 0, z, slope * z)


def _leaky_grad(z, slope):
    # subgradient convention: slope 1 at z == 0
    return np.where(z >= 0, 1.0, slope)


def _forward_arr(net: ResidualNet, Y: np.ndarray):
    """Raw forward over an (m, d) array; returns (phi(Y), cache for backward)."""
    L = len(net.layers)
    acts = [Y]
    pres = []
    h = Y
    for i, (W, b) in enumerate(net.layers):
        z = h @ W.T + b
        pres.append(z)
        h = z if i == L - 1 else _leaky(z, net.leaky_slope)
        acts.append(h)
    return Y + h, (acts, pres)


def _backward_arr(net: ResidualNet, cache, cotangent: np.ndarray):
    """Reverse-mode through delta plus the skip path.

    cotangent is d-loss/d-phi(Y); returns (ParamGradient, d-loss/d-Y).
    """
    acts, pres = cache
    L = len(net.layers)
    grads = [None] * L
    dh = cotangent
    for i in range(L - 1, -1, -1):
        W, _ = net.layers[i]
        dz = dh if i == L - 1 else dh * _leaky_grad(pres[i], net.leaky_slope)
        grads[i] = (dz.T @ acts[i], dz.sum(axis=0))
        dh = dz @ W
    return ParamGradient(tuple(grads)), cotangent + dh


def forward(net: ResidualNet, Y) -> PointSet:
    """Apply the warp row-wise: phi(Y) = Y + delta(Y)."""
    Y = as_pointset(Y)
    if Y.d != net.d:
        raise InvalidArgumentError(f"net expects d={net.d}, got d={Y.d}")
    out, _ = _forward_arr(net, Y.data)
    return PointSet(out)


def backward(net: ResidualNet, Y, cotangent):
    """Exact reverse-mode gradients for a downstream loss.

    Args:
        Y: points the forward pass was evaluated at.
        cotangent: (m, d) array holding d-loss/d-phi(Y).

    Returns:
        (ParamGradient, input_grad) where input_grad includes the skip path.
    """
    Y = as_pointset(Y)
    cot = np.asarray(cotangent, dtype=np.float64)
    if Y.d != net.d:
        raise InvalidArgumentError(f"net expects d={net.d}, got d={Y.d}")
    if cot.shape != Y.data.shape:
        raise InvalidArgumentError(
            f"cotangent shape {cot.shape} must match points shape {Y.data.shape}"
        )
    _, cache = _forward_arr(net, Y.data)
    return _backward_arr(net, cache, cot)


def save_net(net: ResidualNet, path):
    """Dump dims + parameters to a .npz file (bit-exact round trip)."""
    payload = {
        "format_version": np.array(NET_FORMAT_VERSION),
        "d": np.array(net.d),
        "hidden": np.array(net.hidden, dtype=np.int64),
        "leaky_slope": np.array(net.leaky_slope),
        "n_layers": np.array(len(net.layers)),
    }
    for i, (W, b) in enumerate(net.layers):
        payload[f"W{i}"] = W
        payload[f"b{i}"] = b
    np.savez(path, **payload)


def load_net(path) -> ResidualNet:
    with np.load(path) as f:
        version = int(f["format_version"])
        if version != NET_FORMAT_VERSION:
            raise InvalidArgumentError(f"unsupported net format version {version}")
        n_layers = int(f["n_layers"])
        layers = tuple((f[f"W{i}"], f[f"b{i}"]) for i in range(n_layers))
        return ResidualNet(
            d=int(f["d"]),
            hidden=tuple(int(h) for h in f["hidden"]),
            leaky_slope=float(f["leaky_slope"]),
            layers=layers,
        )
