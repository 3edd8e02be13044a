"""Organizing: shrink weights under an L2 penalty, then prune hidden nodes.

Both steps keep every instance of the current batch acceptable. A node is
pruned only if the reduced network can be tuned back to acceptability;
otherwise the stored network is restored unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .agdo import AgdoConfig, acceptable, agdo_run
from .errors import InvalidInputError, InvalidStateError
from .network import Batch, TwoLayerNet, remove_hidden_node


@dataclass(frozen=True)
class OrganizeConfig:
    reg_epochs: int = 100
    lam: float = 1e-4
    eta_init: float = 1e-3
    epsilon: float = 0.04836
    epsilon1: float = 1e-7
    # tuning budget for the reduced network after a node removal
    agdo: AgdoConfig = field(default_factory=lambda: AgdoConfig(eta_init=1e-3))

    def __post_init__(self):
        if self.reg_epochs < 0:
            raise InvalidInputError("reg_epochs must be >= 0")
        if self.reg_epochs > 0 and not self.lam > 0:
            raise InvalidInputError("lam must be positive when regularizing")

    def regularizing_agdo(self) -> AgdoConfig:
        return AgdoConfig(
            eta_init=self.eta_init,
            epsilon=self.epsilon,
            epsilon1=self.epsilon1,
            max_outer=1,
            inner_epochs=max(self.reg_epochs, 1),
            lam=self.lam,
        )


@dataclass(frozen=True)
class PruneEvent:
    """Outcome of one removal attempt, kept for auditing."""

    node: int
    p_before: int
    pruned: bool
    acceptable_after: bool
    restored_identical: bool


def _require_acceptable(net, batch, epsilon, what):
    if not acceptable(net, batch, epsilon):
        raise InvalidStateError(f"{what} requires every batch instance to be acceptable")


def regularize(net: TwoLayerNet, batch: Batch, cfg: OrganizeConfig) -> TwoLayerNet:
    _require_acceptable(net, batch, cfg.epsilon, "regularize")
    if cfg.reg_epochs == 0:
        return net
    return agdo_run(net, batch, cfg.regularizing_agdo(), constrained=True).net


def try_prune_node(net: TwoLayerNet, batch: Batch, k: int, cfg: OrganizeConfig) -> tuple[TwoLayerNet, bool]:
    """Remove node ``k`` and retune; keep the removal only on an acceptable exit."""
    _require_acceptable(net, batch, cfg.epsilon, "pruning")
    if net.p < 2:
        return net, False
    stored = net
    reduced = remove_hidden_node(net, k)
    tuned = agdo_run(reduced, batch, _with_epsilon(cfg))
    if tuned.accepted:
        return tuned.net, True
    return stored, False


def _with_epsilon(cfg: OrganizeConfig) -> AgdoConfig:
    a = cfg.agdo
    if a.epsilon == cfg.epsilon and a.epsilon1 == cfg.epsilon1 and a.lam == 0.0:
        return a
    return AgdoConfig(
        eta_init=a.eta_init,
        epsilon=cfg.epsilon,
        epsilon1=cfg.epsilon1,
        max_outer=a.max_outer,
        inner_epochs=a.inner_epochs,
        beta1=a.beta1,
        beta2=a.beta2,
        adam_eps=a.adam_eps,
        improve_rtol=a.improve_rtol,
        check_each_step=a.check_each_step,
    )


def organize(net: TwoLayerNet, batch: Batch, cfg: OrganizeConfig, events: list | None = None) -> tuple[TwoLayerNet, int]:
    """Regularize once, then sweep the hidden nodes once in ascending order.

    Returns the organized network and the number of pruned nodes. If
    ``events`` is a list, one ``PruneEvent`` per attempt is appended.
    """
    net = regularize(net, batch, cfg)
    pruned = 0
    k = 0
    while k < net.p and net.p > 1:
        before = net
        net, ok = try_prune_node(net, batch, k, cfg)
        if events is not None:
            events.append(
                PruneEvent(
                    node=k,
                    p_before=before.p,
                    pruned=ok,
                    acceptable_after=acceptable(net, batch, cfg.epsilon),
                    restored_identical=ok or net.same_weights(before),
                )
            )
        if ok:
            pruned += 1
        else:
            k += 1
    return net, pruned
