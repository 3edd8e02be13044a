"""Interpreting and picking: order instances and select the stage subset."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import InvalidInputError
from .network import Batch, TwoLayerNet


class Mode(str, Enum):
    LTS = "LTS"  # ascending squared residual
    PO = "PO"  # original dataset order

    @classmethod
    def parse(cls, value) -> Mode:
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).upper())
        except ValueError:
            raise InvalidInputError(f"unknown ordering mode {value!r}; use LTS or PO") from None


@dataclass(frozen=True, eq=False)
class ResidualOrder:
    """``perm[c]`` is the dataset index at position ``c`` (0-based)."""

    perm: np.ndarray
    sq_residuals: np.ndarray
    n_acceptable: int

    def __eq__(self, other):
        if not isinstance(other, ResidualOrder):
            return NotImplemented
        return (
            self.n_acceptable == other.n_acceptable
            and np.array_equal(self.perm, other.perm)
            and np.array_equal(self.sq_residuals, other.sq_residuals)
        )

    def __len__(self):
        return self.perm.shape[0]


def interpret(net: TwoLayerNet, dataset, epsilon: float, mode=Mode.LTS) -> ResidualOrder:
    """Order the dataset and count the acceptable prefix.

    In LTS mode instances are sorted by squared residual, ties broken by
    the lower dataset index. In PO mode the original order is kept and the
    count stops at the first unacceptable instance.
    """
    mode = Mode.parse(mode)
    X, y = dataset.X, dataset.y
    if len(y) == 0:
        raise InvalidInputError("empty dataset")
    e = net(X) - y
    sq = e * e
    if mode is Mode.LTS:
        perm = np.argsort(sq, kind="stable")
    else:
        perm = np.arange(len(y))
    ok = np.abs(e[perm]) <= epsilon
    n_acceptable = len(y) if ok.all() else int(np.argmin(ok))
    return ResidualOrder(perm, sq[perm], n_acceptable)


def pick(order: ResidualOrder, n: int, dataset) -> Batch:
    """The first ``n`` instances of ``order`` as a batch carrying their indices."""
    if not 1 <= n <= len(order):
        raise InvalidInputError(f"n={n} outside [1, {len(order)}]")
    idx = order.perm[:n]
    return Batch(dataset.X[idx], dataset.y[idx], idx)
