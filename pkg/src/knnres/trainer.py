"""End-to-end training of the residual warp.

Each step draws aligned mini-batches from the reference and target (without
replacement within an epoch, reshuffled per epoch), evaluates the composite
loss L = L1 + lambda * L2, backpropagates, and applies one Adam update. The
learning rate follows a reduce-on-plateau schedule on the epoch-mean total
loss, and training stops at max_epochs or once the relative improvement of
the epoch mean stays below tolerance for `patience` epochs.

Everything is funneled through a single seed: net init, batch shuffling,
and the per-step Hutchinson directions, so a (config, seed) pair replays
to an identical trajectory.
"""

import time
from dataclasses import dataclass, field, asdict

import numpy as np

from .core import PointSet, as_pointset
from .errors import DivergenceError, InvalidArgumentError
from .jacreg import FdConfig, HutchinsonConfig, orth_penalty_fd, orth_penalty_hutchinson
from .losses import MmdConfig, SinkhornConfig, mmd, sinkhorn_divergence
from .net import ResidualNet, _backward_arr, _forward_arr, forward, init_net
from .optim import AdamState, PlateauState, adam_step, plateau_step

LOSS_KINDS = ("sinkhorn", "mmd")
PENALTY_MODES = ("auto", "fd", "hutch-qf", "hutch-alg3")


@dataclass(frozen=True)
class TrainConfig:
    """Every knob of the training loop; defaults follow the 2-D experiments."""

    loss_kind: str = "sinkhorn"
    sigma: float = 0.01            # blur / kernel bandwidth
    fd_epsilon: float = 0.005      # finite-difference step (both penalty paths)
    lam: float = 1e-5              # penalty weight; 0 skips the penalty
    hutchinson_k: int = 0          # 0 = off (dense FD penalty)
    penalty_mode: str = "auto"     # auto | fd | hutch-qf | hutch-alg3
    fd_dim_threshold: int = 6      # auto: FD up to this d, Hutchinson beyond
    batch_size: int = 256
    max_epochs: int = 3000
    conv_patience: int = 100
    conv_tol: float = 1e-5
    seed: int = 0
    lr: float = 0.01
    weight_decay: float = 0.0
    plateau_factor: float = 0.7
    plateau_patience: int = 50
    plateau_threshold: float = 1e-6
    min_lr: float = 5e-5
    hidden_widths: tuple = (50, 50)
    leaky_slope: float = 0.01
    sinkhorn_max_iters: int = 500
    sinkhorn_tol: float = 1e-6

    def __post_init__(self):
        if self.loss_kind not in LOSS_KINDS:
            raise InvalidArgumentError(f"loss_kind must be one of {LOSS_KINDS}")
        if self.penalty_mode not in PENALTY_MODES:
            raise InvalidArgumentError(f"penalty_mode must be one of {PENALTY_MODES}")
        if self.lam < 0:
            raise InvalidArgumentError(f"lambda must be >= 0, got {self.lam}")
        if self.batch_size < 1:
            raise InvalidArgumentError(f"batch_size must be >= 1, got {self.batch_size}")
        if not self.sigma > 0:
            raise InvalidArgumentError(f"sigma must be > 0, got {self.sigma}")
        if self.max_epochs < 1:
            raise InvalidArgumentError(f"max_epochs must be >= 1, got {self.max_epochs}")
        object.__setattr__(self, "hidden_widths", tuple(self.hidden_widths))

    def resolved_penalty_mode(self, d: int) -> str:
        if self.penalty_mode != "auto":
            return self.penalty_mode
        if self.hutchinson_k == 0 or d <= self.fd_dim_threshold:
            return "fd"
        return "hutch-qf"

    def to_dict(self) -> dict:
        out = asdict(self)
        out["hidden_widths"] = list(self.hidden_widths)
        out["sinkhorn_eps"] = self.sigma ** 2  # documented blur -> eps convention
        return out


@dataclass
class LossReport:
    """Per-step history. wall_time is diagnostic only and excluded from
    determinism comparisons."""

    epoch: list = field(default_factory=list)
    step: list = field(default_factory=list)
    loss_align: list = field(default_factory=list)
    loss_penalty: list = field(default_factory=list)
    loss_total: list = field(default_factory=list)
    lr: list = field(default_factory=list)
    grad_norm: list = field(default_factory=list)
    wall_time: list = field(default_factory=list)

    FIELDS = ("epoch", "step", "loss_align", "loss_penalty", "loss_total",
              "lr", "grad_norm", "wall_time")

    def append(self, epoch, step, l1, l2, total, lr, grad_norm, dt):
        self.epoch.append(int(epoch))
        self.step.append(int(step))
        self.loss_align.append(float(l1))
        self.loss_penalty.append(float(l2))
        self.loss_total.append(float(total))
        self.lr.append(float(lr))
        self.grad_norm.append(float(grad_norm))
        self.wall_time.append(float(dt))

    def __len__(self):
        return len(self.epoch)

    def epoch_means(self):
        """Mean total loss per epoch, in epoch order."""
        epochs = np.asarray(self.epoch)
        totals = np.asarray(self.loss_total)
        uniq = np.unique(epochs)
        return uniq, np.array([totals[epochs == e].mean() for e in uniq])


def _alignment_loss(X_arr, Y_hat_arr, cfg: TrainConfig):
    if cfg.loss_kind == "mmd":
        return mmd(PointSet(X_arr), PointSet(Y_hat_arr), MmdConfig(sigma=cfg.sigma))
    sk = SinkhornConfig(sigma=cfg.sigma, max_iters=cfg.sinkhorn_max_iters,
                        tol=cfg.sinkhorn_tol)
    return sinkhorn_divergence(PointSet(X_arr), PointSet(Y_hat_arr), sk)


def _penalty(net, Y_batch, cfg: TrainConfig, step_seed):
    mode = cfg.resolved_penalty_mode(net.d)
    if mode == "fd":
        return orth_penalty_fd(net, Y_batch, FdConfig(epsilon=cfg.fd_epsilon))
    hk = max(cfg.hutchinson_k, 2)
    hcfg = HutchinsonConfig(
        epsilon=cfg.fd_epsilon, k=hk,
        mode="alg3-literal" if mode == "hutch-alg3" else "quadratic-form",
    )
    return orth_penalty_hutchinson(net, Y_batch, hcfg, seed=step_seed)


def total_loss(net: ResidualNet, X_batch, Y_batch, cfg: TrainConfig, step: int = 0):
    """Composite loss L = L1 + lambda * L2 and its parameter gradient.

    L1 compares the reference batch with the warped target batch; L2 is
    evaluated at the raw target batch points. With lambda == 0 the penalty
    path is skipped entirely. `step` seeds the Hutchinson directions.
    """
    X_batch = as_pointset(X_batch)
    Y_batch = as_pointset(Y_batch)
    if X_batch.d != Y_batch.d or X_batch.d != net.d:
        raise InvalidArgumentError("reference, target, and net dimensions must agree")
    Y_hat, cache = _forward_arr(net, Y_batch.data)
    if not np.isfinite(Y_hat).all():
        raise DivergenceError("warp produced non-finite coordinates", step=step)
    l1, grad_y = _alignment_loss(X_batch.data, Y_hat, cfg)
    grad, _ = _backward_arr(net, cache, grad_y)
    if cfg.lam == 0.0:
        return l1, l1, 0.0, grad
    l2, pgrad = _penalty(net, Y_batch, cfg, step_seed=(cfg.seed, 2, step))
    total = l1 + cfg.lam * l2
    return total, l1, l2, grad + cfg.lam * pgrad


def train(R, T, cfg: TrainConfig):
    """Fit the warp moving target T toward reference R.

    Returns (trained net, LossReport). Raises DivergenceError if the loss
    goes non-finite.
    """
    R = as_pointset(R)
    T = as_pointset(T)
    if R.d != T.d:
        raise InvalidArgumentError(f"dimension mismatch: reference d={R.d}, target d={T.d}")
    net = init_net(T.d, cfg.hidden_widths, cfg.leaky_slope, seed=cfg.seed)
    adam = AdamState(lr=cfg.lr, weight_decay=cfg.weight_decay)
    plat = PlateauState(lr=cfg.lr, factor=cfg.plateau_factor,
                        patience=cfg.plateau_patience,
                        threshold=cfg.plateau_threshold, min_lr=cfg.min_lr)
    rng = np.random.default_rng((cfg.seed, 1))
    report = LossReport()

    n, m = R.m, T.m
    bx = min(cfg.batch_size, n)
    by = min(cfg.batch_size, m)
    steps_per_epoch = max(1, min(n // bx, m // by))

    best = np.inf
    stall = 0
    global_step = 0
    for epoch in range(cfg.max_epochs):
        perm_r = rng.permutation(n)
        perm_t = rng.permutation(m)
        epoch_losses = []
        for s in range(steps_per_epoch):
            t0 = time.perf_counter()
            Xb = R.data[perm_r[s * bx:(s + 1) * bx]]
            Yb = T.data[perm_t[s * by:(s + 1) * by]]
            total, l1, l2, grad = total_loss(net, Xb, Yb, cfg, step=global_step)
            if not np.isfinite(total):
                raise DivergenceError(
                    f"non-finite loss {total} at epoch {epoch}, step {s}",
                    epoch=epoch, step=s,
                )
            new_params = adam_step(net.layers, grad, adam)
            net = net.with_layers(new_params)
            report.append(epoch, global_step, l1, l2, total, adam.lr,
                          grad.norm(), time.perf_counter() - t0)
            epoch_losses.append(total)
            global_step += 1
        epoch_mean = float(np.mean(epoch_losses))
        adam.lr = plateau_step(plat, epoch_mean)
        rel_gain = (best - epoch_mean) / max(abs(best), 1e-12)
        if np.isfinite(best) and rel_gain < cfg.conv_tol:
            stall += 1
            if stall >= cfg.conv_patience:
                break
        else:
            stall = 0
        best = min(best, epoch_mean)
    return net, report


def transform(net: ResidualNet, Y) -> PointSet:
    """Apply a trained warp to arbitrary points (alias of net.forward)."""
    return forward(net, Y)
