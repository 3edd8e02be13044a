"""Two-layer ReLU network: evaluation, losses, analytic gradients, edits.

A network with ``m`` inputs and ``p`` hidden nodes is stored as

* ``hidden``: ``(p, m + 1)`` array, row ``i`` is ``(bias, w_i1, ..., w_im)``
* ``output``: ``(p + 1,)`` array, ``(output bias, w_1, ..., w_p)``

and computes ``f(x) = output[0] + sum_i output[i+1] * relu(hidden[i] @ [1, x])``.
Hidden node indices are 0-based throughout the package.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import InvalidInputError, InvalidOperationError, ParseError


@dataclass(frozen=True, eq=False)
class TwoLayerNet:
    hidden: np.ndarray
    output: np.ndarray

    def __post_init__(self):
        hidden = np.array(self.hidden, dtype=np.float64, ndmin=2)
        output = np.array(self.output, dtype=np.float64).reshape(-1)
        if hidden.shape[0] + 1 != output.shape[0]:
            raise InvalidInputError(
                f"{hidden.shape[0]} hidden rows need {hidden.shape[0] + 1} "
                f"output weights, got {output.shape[0]}"
            )
        if hidden.shape[1] < 1:
            raise InvalidInputError("hidden rows need at least a bias column")
        hidden.setflags(write=False)
        output.setflags(write=False)
        object.__setattr__(self, "hidden", hidden)
        object.__setattr__(self, "output", output)

    @property
    def m(self) -> int:
        return self.hidden.shape[1] - 1

    @property
    def p(self) -> int:
        return self.hidden.shape[0]

    @property
    def n_weights(self) -> int:
        return self.hidden.size + self.output.size

    def squared_norm(self) -> float:
        """Sum of squares of every weight, biases included."""
        return float(np.sum(self.hidden**2) + np.sum(self.output**2))

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.hidden)) and np.all(np.isfinite(self.output)))

    def same_weights(self, other: TwoLayerNet) -> bool:
        """Bit-identical comparison of all weights."""
        return (
            self.hidden.shape == other.hidden.shape
            and self.hidden.tobytes() == other.hidden.tobytes()
            and self.output.tobytes() == other.output.tobytes()
        )

    def __call__(self, X):
        return forward(self, X)

    @classmethod
    def random(cls, m: int, p: int, rng: np.random.Generator, scale: float = 0.5):
        """Weights drawn uniformly from ``[-scale, scale]``."""
        hidden = rng.uniform(-scale, scale, size=(p, m + 1))
        output = rng.uniform(-scale, scale, size=p + 1)
        return cls(hidden, output)


@dataclass(frozen=True, eq=False)
class Batch:
    """Selected training instances together with their dataset indices."""

    X: np.ndarray
    y: np.ndarray
    index: np.ndarray

    def __post_init__(self):
        X = np.array(self.X, dtype=np.float64, ndmin=2)
        y = np.array(self.y, dtype=np.float64).reshape(-1)
        index = np.array(self.index, dtype=np.int64).reshape(-1)
        if not (X.shape[0] == y.shape[0] == index.shape[0]):
            raise InvalidInputError("X, y and index must have the same length")
        if np.unique(index).size != index.size:
            raise InvalidInputError("batch index set contains duplicates")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "index", index)

    @classmethod
    def from_arrays(cls, X, y):
        y = np.asarray(y, dtype=np.float64).reshape(-1)
        return cls(X, y, np.arange(y.shape[0]))

    def __len__(self):
        return self.y.shape[0]

    @cached_property
    def Xa(self) -> np.ndarray:
        """``X`` with the leading ones column, built once per batch."""
        return augment(self.X)


def augment(X: np.ndarray) -> np.ndarray:
    """Prepend the constant-one column used by the hidden biases."""
    X = np.asarray(X, dtype=np.float64)
    return np.hstack([np.ones((X.shape[0], 1)), X])


def _as_inputs(net: TwoLayerNet, x) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim <= 1
    X = x.reshape(1, -1) if single else x
    if X.ndim != 2 or X.shape[1] != net.m:
        raise InvalidInputError(f"expected inputs of length {net.m}, got shape {x.shape}")
    return X, single


def _check_batch(net: TwoLayerNet, batch: Batch):
    if len(batch) == 0:
        raise InvalidInputError("empty batch")
    if batch.X.shape[1] != net.m:
        raise InvalidInputError(f"batch has {batch.X.shape[1]} inputs, network expects {net.m}")


def hidden_activations(net: TwoLayerNet, x) -> np.ndarray:
    """ReLU activations of the hidden layer, shape ``(p,)`` or ``(n, p)``."""
    X, single = _as_inputs(net, x)
    A = np.maximum(_pre_activations(X, net.hidden), 0.0)
    return A[0] if single else A


def forward(net: TwoLayerNet, x):
    """Network output for one input vector (float) or a row-stacked matrix."""
    X, single = _as_inputs(net, x)
    out = _outputs(X, net.hidden, net.output)
    return float(out[0]) if single else out


# Evaluation accumulates term by term in a fixed order instead of calling
# BLAS, whose blocking makes a row's rounding depend on the matrix it sits
# in. This way an instance gets the same residual whether it is evaluated
# alone, in a stage subset or with the whole dataset, and acceptability
# decisions cannot flip between them. Training steps use the faster
# ``loss_and_grad``.
def _pre_activations(X, hidden):
    Z = np.repeat(hidden[None, :, 0], X.shape[0], axis=0)
    for j in range(X.shape[1]):
        Z += X[:, j, None] * hidden[:, j + 1]
    return Z


def _outputs(X, hidden, output):
    A = np.maximum(_pre_activations(X, hidden), 0.0)
    out = np.full(X.shape[0], output[0])
    for i in range(A.shape[1]):
        out += A[:, i] * output[i + 1]
    return out


def residual(net: TwoLayerNet, x, y):
    """``forward(net, x) - y``; vectorised over rows."""
    out = forward(net, x)
    if np.ndim(out) == 0:
        return out - float(y)
    return out - np.asarray(y, dtype=np.float64)


def residuals(net: TwoLayerNet, batch: Batch) -> np.ndarray:
    _check_batch(net, batch)
    return _outputs(batch.X, net.hidden, net.output) - batch.y


def max_abs_residual(net: TwoLayerNet, batch: Batch) -> float:
    """The largest ``|e|`` over the batch (D_n for the stage subset)."""
    return float(np.max(np.abs(residuals(net, batch))))


def loss_trimmed_mse(net: TwoLayerNet, batch: Batch) -> float:
    e = residuals(net, batch)
    return float(e @ e / e.shape[0])


def loss_regularized(net: TwoLayerNet, batch: Batch, lam: float) -> float:
    if lam < 0:
        raise InvalidInputError("regularization coefficient must be >= 0")
    mse = loss_trimmed_mse(net, batch)
    if lam == 0:
        return mse
    return mse + lam * net.squared_norm()


def loss_and_grad(Xa, y, hidden, output, lam=0.0):
    """Loss and analytic gradient on an augmented design matrix.

    ``Xa`` already carries the leading ones column (``Batch.Xa``). The
    residuals match ``residuals`` up to rounding. The ReLU derivative is taken as 0 at a pre-activation of exactly 0.
    Returns ``(loss, e, g_hidden, g_output)`` where ``e`` are the residuals.
    """
    g = np.empty(hidden.size + output.size)
    loss, e = loss_and_flat_grad(Xa, y, hidden, output, lam, g)
    return loss, e, g[: hidden.size].reshape(hidden.shape), g[hidden.size :]


def grad_workspace(n: int, p: int):
    """Scratch buffers for ``loss_and_flat_grad`` on ``n`` rows and ``p`` hidden nodes.

    Reusing them across steps avoids a fresh mmap per step once the
    (n, p) temporaries outgrow the allocator's small-block threshold.
    """
    return np.empty((n, p)), np.empty((n, p)), np.empty((n, p)), np.empty((n, p), dtype=bool)


def loss_and_flat_grad(Xa, y, hidden, output, lam, g, work=None):
    """As ``loss_and_grad``, writing the gradient into the flat buffer ``g``
    (hidden weights row-major, then output weights). Returns ``(loss, e)``."""
    n, k = y.shape[0], hidden.size
    Z, A, D, active = work if work is not None else grad_workspace(n, hidden.shape[0])
    np.matmul(Xa, hidden.T, out=Z)
    np.maximum(Z, 0.0, out=A)
    e = A @ output[1:]
    e += output[0]
    e -= y
    loss = e @ e / n
    d = (2.0 / n) * e
    g[k] = d.sum()
    np.matmul(d, A, out=g[k + 1 :])
    g_hidden = g[:k].reshape(hidden.shape)
    np.greater(Z, 0.0, out=active)
    # uint8 view: multiplying a bool mask by floats goes through a slower cast
    np.multiply(active.view(np.uint8), d[:, None], out=D)
    np.matmul(D.T, Xa, out=g_hidden)
    g_hidden *= output[1:, None]
    if lam:
        loss += lam * (np.sum(hidden**2) + np.sum(output**2))
        g_hidden += 2.0 * lam * hidden
        g[k:] += 2.0 * lam * output
    return loss, e


def gradient(net: TwoLayerNet, batch: Batch, lam: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """Gradient of the (regularized) trimmed MSE w.r.t. ``(hidden, output)``."""
    _check_batch(net, batch)
    if lam < 0:
        raise InvalidInputError("regularization coefficient must be >= 0")
    _, _, g_hidden, g_output = loss_and_grad(batch.Xa, batch.y, net.hidden, net.output, lam)
    return g_hidden, g_output


def add_hidden_nodes(net: TwoLayerNet, new_hidden_rows, new_output_weights) -> TwoLayerNet:
    rows = np.asarray(new_hidden_rows, dtype=np.float64)
    weights = np.asarray(new_output_weights, dtype=np.float64).reshape(-1)
    if rows.size == 0 and weights.size == 0:
        return TwoLayerNet(net.hidden.copy(), net.output.copy())
    rows = rows.reshape(-1, rows.shape[-1])
    if rows.shape[1] != net.m + 1:
        raise InvalidInputError(f"new hidden rows need width {net.m + 1}, got {rows.shape[1]}")
    if rows.shape[0] != weights.shape[0]:
        raise InvalidInputError("one output weight per new hidden row is required")
    return TwoLayerNet(np.vstack([net.hidden, rows]), np.concatenate([net.output, weights]))


def remove_hidden_node(net: TwoLayerNet, k: int) -> TwoLayerNet:
    """Drop hidden node ``k`` (0-based) and its output weight."""
    if net.p < 2:
        raise InvalidOperationError("cannot remove the only hidden node")
    if not 0 <= k < net.p:
        raise InvalidOperationError(f"node index {k} out of range for p={net.p}")
    return TwoLayerNet(np.delete(net.hidden, k, axis=0), np.delete(net.output, k + 1))


# -- snapshot format ---------------------------------------------------------


def _fmt_row(values) -> str:
    return " ".join(f"{v:.17g}" for v in values)


def dumps(net: TwoLayerNet) -> str:
    """Plain-text snapshot: ``m p`` header, p hidden rows, one output row."""
    lines = [f"{net.m} {net.p}"]
    lines.extend(_fmt_row(row) for row in net.hidden)
    lines.append(_fmt_row(net.output))
    return "\n".join(lines) + "\n"


def loads(text: str) -> TwoLayerNet:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ParseError("empty network snapshot")
    try:
        m, p = (int(tok) for tok in lines[0].split())
    except ValueError:
        raise ParseError(f"line 1: expected 'm p' header, got {lines[0]!r}") from None
    if len(lines) != p + 2:
        raise ParseError(f"expected {p + 2} lines for p={p}, got {len(lines)}")

    def row(i, width):
        try:
            vals = [float(tok) for tok in lines[i].split()]
        except ValueError:
            raise ParseError(f"line {i + 1}: malformed float") from None
        if len(vals) != width:
            raise ParseError(f"line {i + 1}: expected {width} values, got {len(vals)}")
        return vals

    hidden = np.array([row(i, m + 1) for i in range(1, p + 1)]).reshape(p, m + 1)
    output = np.array(row(p + 1, p + 1))
    return TwoLayerNet(hidden, output)


def save(net: TwoLayerNet, path) -> None:
    Path(path).write_text(dumps(net), encoding="utf-8")


def load(path) -> TwoLayerNet:
    return loads(Path(path).read_text(encoding="utf-8"))
