"""Adam with bias correction plus a reduce-on-plateau learning-rate schedule."""

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError
from .net import ParamGradient


@dataclass
class AdamState:
    """Moment accumulators and hyperparameters; mutated by adam_step."""

    lr: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    eps_stability: float = 1e-8
    weight_decay: float = 0.0
    t: int = 0
    m: list = field(default_factory=list)  # first moments, shaped like params
    v: list = field(default_factory=list)  # second moments

    def __post_init__(self):
        if not self.lr > 0:
            raise InvalidArgumentError(f"lr must be > 0, got {self.lr}")


def adam_step(params, grads: ParamGradient, state: AdamState):
    """One Adam update over layered (W, b) parameters; returns new params.

    Weight decay, when enabled, is added to the gradient as wd * theta
    before the moment updates. State is mutated in place.
    """
    params = tuple(params)
    if len(grads.layers) != len(params):
        raise InvalidArgumentError(
            f"{len(grads.layers)} gradient layers for {len(params)} parameter layers"
        )
    if not state.m:
        state.m = [(np.zeros_like(W), np.zeros_like(b)) for W, b in params]
        state.v = [(np.zeros_like(W), np.zeros_like(b)) for W, b in params]
    state.t += 1
    bc1 = 1.0 - state.beta1 ** state.t
    bc2 = 1.0 - state.beta2 ** state.t

    new_params = []
    for i, (W, b) in enumerate(params):
        updated = []
        for j, theta in enumerate((W, b)):
            g = grads.layers[i][j]
            if g.shape != theta.shape:
                raise InvalidArgumentError(
                    f"gradient shape {g.shape} != parameter shape {theta.shape}"
                )
            if state.weight_decay != 0.0:
                g = g + state.weight_decay * theta
            m = state.beta1 * state.m[i][j] + (1.0 - state.beta1) * g
            v = state.beta2 * state.v[i][j] + (1.0 - state.beta2) * g * g
            if j == 0:
                state.m[i] = (m, state.m[i][1])
                state.v[i] = (v, state.v[i][1])
            else:
                state.m[i] = (state.m[i][0], m)
                state.v[i] = (state.v[i][0], v)
            step = state.lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps_stability)
            updated.append(theta - step)
        new_params.append((updated[0], updated[1]))
    return tuple(new_params)


@dataclass
class PlateauState:
    """Reduce-on-plateau bookkeeping; lr is carried here between epochs."""

    lr: float = 0.01
    factor: float = 0.7
    patience: int = 50
    min_lr: float = 5e-5
    threshold: float = 1e-6  # relative improvement that counts
    best_loss: float = np.inf
    epochs_since_improvement: int = 0

    def __post_init__(self):
        if not 0.0 < self.factor < 1.0:
            raise InvalidArgumentError(f"factor must be in (0, 1), got {self.factor}")
        if not self.min_lr > 0:
            raise InvalidArgumentError(f"min_lr must be > 0, got {self.min_lr}")


def plateau_step(state: PlateauState, current_loss: float) -> float:
    """Track the running best loss; cut lr by `factor` after `patience` stalls.

    Returns the (possibly reduced) learning rate, never below min_lr.
    """
    improved = (
        not np.isfinite(state.best_loss)
        or current_loss < state.best_loss - state.threshold * abs(state.best_loss)
    )
    if improved:
        state.best_loss = current_loss
        state.epochs_since_improvement = 0
    else:
        state.epochs_since_improvement += 1
        if state.epochs_since_improvement >= state.patience:
            state.lr = max(state.lr * state.factor, state.min_lr)
            state.epochs_since_improvement = 0
    return state.lr
