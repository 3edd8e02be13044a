"""Adaptive gradient descent with acceptable/unacceptable exits.

The loop runs Adam steps on the full batch in blocks of ``inner_epochs``.
After every block the loss is compared with the best loss seen so far; a
block that does not improve it is undone (weights return to the best
snapshot, moment estimates are reset) and the learning rate is halved.
The run ends with

* exit ``"A"`` at the end of the first block after which every batch
  instance has ``|e| <= epsilon`` (after any step with ``check_each_step``);
* exit ``"U"`` when the learning rate drops below ``epsilon1`` or the
  ``max_outer`` budget is spent, returning the best weights seen.

With ``constrained=True`` the loop instead minimises the loss while
keeping the batch acceptable: any step that makes an instance
unacceptable is rejected and halves the learning rate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, InvalidStateError
from .network import Batch, TwoLayerNet, grad_workspace, loss_and_flat_grad, residuals


@dataclass(frozen=True)
class AgdoConfig:
    eta_init: float = 1e-2
    epsilon: float = 0.04836
    epsilon1: float = 1e-7
    max_outer: int = 50
    inner_epochs: int = 100
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    lam: float = 0.0
    # relative decrease a block must achieve to count as an improvement
    improve_rtol: float = 1e-12
    # test for exit A after every step instead of only at block ends
    check_each_step: bool = False

    def __post_init__(self):
        if not self.eta_init > 0 or not self.epsilon > 0 or not self.epsilon1 > 0:
            raise InvalidInputError("eta_init, epsilon and epsilon1 must be positive")
        if not self.epsilon1 < self.eta_init:
            raise InvalidInputError("epsilon1 must be smaller than eta_init")
        if self.max_outer < 1 or self.inner_epochs < 1:
            raise InvalidInputError("max_outer and inner_epochs must be >= 1")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise InvalidInputError("beta1 and beta2 must lie in [0, 1)")
        if self.lam < 0:
            raise InvalidInputError("lam must be >= 0")


@dataclass(frozen=True)
class AgdoExit:
    tag: str
    net: TwoLayerNet
    iterations_used: int
    steps: int
    eta: float
    loss: float

    @property
    def accepted(self) -> bool:
        return self.tag == "A"


def acceptable(net: TwoLayerNet, batch: Batch, epsilon: float) -> bool:
    """True iff ``max |e| <= epsilon`` over the batch (inclusive bound)."""
    return _within(residuals(net, batch), epsilon)


def _within(e, epsilon) -> bool:
    # NaN compares False, so non-finite residuals are never acceptable
    return bool(np.max(np.abs(e)) <= epsilon)


class _Adam:
    """Adam moment buffers for a flat parameter vector."""

    def __init__(self, size, beta1, beta2, eps):
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.m = np.zeros(size)
        self.v = np.zeros(size)
        self.t = 0

    def reset(self):
        self.m.fill(0.0)
        self.v.fill(0.0)
        self.t = 0

    def step(self, theta, g, eta):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        self.m *= b1
        self.m += (1.0 - b1) * g
        self.v *= b2
        self.v += (1.0 - b2) * (g * g)
        denom = np.sqrt(self.v / (1.0 - b2**self.t))
        denom += self.eps
        update = self.m * (eta / (1.0 - b1**self.t))
        update /= denom
        return theta - update


def _flat(net):
    return np.concatenate([net.hidden.ravel(), net.output])


def agdo_run(net: TwoLayerNet, batch: Batch, cfg: AgdoConfig, constrained: bool = False) -> AgdoExit:
    if len(batch) == 0:
        raise InvalidInputError("empty batch")
    if batch.X.shape[1] != net.m:
        raise InvalidInputError(f"batch has {batch.X.shape[1]} inputs, network expects {net.m}")

    Xa, y, eps, lam = batch.Xa, batch.y, cfg.epsilon, cfg.lam
    k, shape = net.hidden.size, net.hidden.shape
    work = grad_workspace(len(y), net.p)

    def evaluate(theta):
        g = np.empty_like(theta)
        loss, e = loss_and_flat_grad(Xa, y, theta[:k].reshape(shape), theta[k:], lam, g, work)
        return loss, e, g

    def as_net(theta):
        return TwoLayerNet(theta[:k].reshape(shape), theta[k:])

    theta = _flat(net)
    loss, e, g = evaluate(theta)

    # Steps are screened with the fast training residuals, but every
    # acceptance that leaves this function is confirmed with ``acceptable``,
    # whose rounding does not depend on the batch shape.
    if constrained:
        if not acceptable(net, batch, eps):
            raise InvalidStateError("constrained run requires an acceptable starting network")
    elif acceptable(net, batch, eps):
        return AgdoExit("A", net, 0, 0, cfg.eta_init, float(loss))

    entry_loss = loss
    best = theta.copy()
    best_loss = loss if math.isfinite(loss) else math.inf
    eta = cfg.eta_init
    adam = _Adam(theta.size, cfg.beta1, cfg.beta2, cfg.adam_eps)
    steps = 0

    def finish(tag, theta, lo, outer):
        out = as_net(theta)
        if constrained and not acceptable(out, batch, eps):
            out, lo = net, entry_loss
        return AgdoExit(tag, out, outer, steps, eta, float(lo))

    for outer in range(1, cfg.max_outer + 1):
        for _ in range(cfg.inner_epochs):
            if not (math.isfinite(loss) and np.isfinite(g).all()):
                break
            new = adam.step(theta, g, eta)
            new_loss, new_e, new_g = evaluate(new)
            if constrained and not _within(new_e, eps):
                eta *= 0.5
                adam.reset()
                if eta < cfg.epsilon1:
                    break
                continue
            theta, loss, e, g = new, new_loss, new_e, new_g
            steps += 1
            if cfg.check_each_step and not constrained and _within(e, eps) and acceptable(as_net(theta), batch, eps):
                return finish("A", theta, loss, outer)

        if not constrained and _within(e, eps) and acceptable(as_net(theta), batch, eps):
            return finish("A", theta, loss, outer)

        if math.isfinite(loss) and loss < best_loss - cfg.improve_rtol * abs(best_loss):
            best, best_loss = theta.copy(), loss
        elif eta >= cfg.epsilon1:
            eta *= 0.5
            theta = best.copy()
            loss, e, g = evaluate(theta)
            adam.reset()
        if eta < cfg.epsilon1:
            return finish("U", best, best_loss, outer)

    return finish("A" if constrained else "U", best, best_loss, cfg.max_outer)
