"""Cramming: fit one unacceptable instance exactly with three new ReLU nodes.

Given a unit direction ``gamma`` and an offset ``zeta`` smaller than every
projected distance ``|gamma @ (x_c - x_t)|`` from the target ``x_t`` to the
other batch inputs, the three nodes

    relu(zeta + s) - 2 relu(s) + relu(s - zeta),    s = gamma @ (x - x_t)

form a triangular bump of height ``zeta`` centred on ``x_t`` that vanishes
wherever ``|s| >= zeta``. Scaling it by ``d / zeta`` with
``d = y_t - f(x_t)`` moves the output at ``x_t`` by exactly ``d`` and
leaves every other batch output untouched.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInstanceError, InvalidInputError, InvalidStateError, SamplingFailureError
from .network import Batch, TwoLayerNet, add_hidden_nodes

ZETA_FRACTION = 0.5
MAX_ATTEMPTS = 100


@dataclass(frozen=True, eq=False)
class CramParams:
    gamma: np.ndarray
    zeta: float

    def satisfies(self, X, target_pos: int) -> bool:
        """Check both separation conditions against every non-target row."""
        X = np.asarray(X, dtype=np.float64)
        t = np.delete(X - X[target_pos], target_pos, axis=0) @ self.gamma
        if abs(np.linalg.norm(self.gamma) - 1.0) > 1e-12 or not self.zeta > 0:
            return False
        return bool(np.all(t != 0) and np.all((self.zeta + t) * (self.zeta - t) < 0))


def separation_floor(X) -> float:
    """Smallest projected distance accepted when drawing ``gamma``."""
    return 1e-9 * max(1.0, float(np.max(np.abs(X))) if np.size(X) else 1.0)


def find_cram_params(
    batch: Batch,
    target_pos: int,
    rng: np.random.Generator,
    max_attempts: int = MAX_ATTEMPTS,
    zeta_fraction: float = ZETA_FRACTION,
) -> CramParams:
    """Draw a random unit ``gamma`` that separates ``x[target_pos]`` from the rest.

    ``zeta`` is ``zeta_fraction`` times the smallest projected distance.
    """
    X = batch.X
    n, m = X.shape
    if not 0 <= target_pos < n:
        raise InvalidInputError(f"target position {target_pos} outside batch of {n}")
    if not 0 < zeta_fraction < 1:
        raise InvalidInputError("zeta_fraction must lie in (0, 1)")
    delta = np.delete(X - X[target_pos], target_pos, axis=0)
    others = np.delete(batch.index, target_pos)
    if n == 1:
        gamma = rng.standard_normal(m)
        return CramParams(gamma / np.linalg.norm(gamma), 1.0)

    same = np.flatnonzero(np.all(delta == 0, axis=1))
    if same.size:
        pair = (int(batch.index[target_pos]), int(others[same[0]]))
        raise DegenerateInstanceError(
            f"instances {pair[0]} and {pair[1]} share the same input vector", pair
        )

    floor = separation_floor(X)
    for _ in range(max_attempts):
        gamma = rng.standard_normal(m)
        norm = np.linalg.norm(gamma)
        if norm == 0:
            continue
        gamma = gamma / norm
        closest = float(np.min(np.abs(delta @ gamma)))
        if closest >= floor:
            return CramParams(gamma, zeta_fraction * closest)
    raise SamplingFailureError(
        f"no direction separated instance {int(batch.index[target_pos])} "
        f"after {max_attempts} draws; inputs are nearly duplicated"
    )


def cram(
    net: TwoLayerNet,
    batch: Batch,
    target_pos: int,
    params: CramParams,
    epsilon: float | None = None,
) -> TwoLayerNet:
    """Append the three cramming nodes for ``batch`` row ``target_pos``.

    When ``epsilon`` is given, every other batch instance must already be
    acceptable; otherwise ``InvalidStateError`` is raised.
    """
    X, y = batch.X, batch.y
    x_t = X[target_pos]
    f_t = net(x_t)
    if epsilon is not None:
        e = np.abs(np.delete(net(X) - y, target_pos))
        if e.size and not np.max(e) <= epsilon:
            bad = int(np.delete(batch.index, target_pos)[np.argmax(e)])
            raise InvalidStateError(f"instance {bad} is unacceptable besides the crammed one")

    gamma, zeta = params.gamma, params.zeta
    base = -float(gamma @ x_t)
    rows = np.empty((3, net.m + 1))
    rows[:, 1:] = gamma
    rows[:, 0] = (zeta + base, base, -zeta + base)
    scale = (float(y[target_pos]) - f_t) / zeta
    return add_hidden_nodes(net, rows, (scale, -2.0 * scale, scale))
