"""Minimal dense-tensor numerics with reverse-mode differentiation.

Values are double-precision numpy arrays.  Every operation appends a node
to a Tape; Tape.backward walks the nodes in reverse append order exactly
once, accumulating (never overwriting) gradients into fan-out tensors.
"""

from __future__ import annotations

import numpy as np

from .errors import InputTooShort, NonFiniteLoss, ShapeMismatch


class Tensor:
    """A node in the computation graph.

    `parents` is a tuple of (parent, vjp) pairs where vjp maps this
    node's output gradient to the parent's gradient contribution.
    """

    __slots__ = ("value", "grad", "parents")

    def __init__(self, value, parents=()):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad = None
        self.parents = parents

    @property
    def shape(self):
        return self.value.shape


class Tape:
    """Append-only operation record; topological order is append order."""

    def __init__(self):
        self.nodes = []

    def tensor(self, value, parents=()):
        node = Tensor(value, parents)
        self.nodes.append(node)
        return node

    def leaf(self, value):
        return self.tensor(value)

    def backward(self, loss: Tensor):
        """Populate .grad on every node reachable from `loss`."""
        if loss.value.ndim != 0 and loss.value.size != 1:
            raise ShapeMismatch("backward requires a scalar loss")
        for node in self.nodes:
            node.grad = np.zeros_like(node.value)
        loss.grad = np.ones_like(loss.value)
        for node in reversed(self.nodes):
            if not np.any(node.grad):
                continue
            for parent, vjp in node.parents:
                parent.grad = parent.grad + vjp(node.grad)


def affine(x: Tensor, w: Tensor, b: Tensor, tape: Tape) -> Tensor:
    """y = W x + b for a vector x."""
    if w.value.ndim != 2 or x.value.ndim != 1 or b.value.ndim != 1:
        raise ShapeMismatch("affine expects W[m,n], x[n], b[m]")
    m, n = w.value.shape
    if x.value.shape[0] != n or b.value.shape[0] != m:
        raise ShapeMismatch(
            f"affine shapes do not conform: W{w.value.shape} x{x.value.shape} "
            f"b{b.value.shape}")
    y = w.value @ x.value + b.value
    return tape.tensor(y, (
        (w, lambda g, xv=x.value: np.outer(g, xv)),
        (x, lambda g, wv=w.value: wv.T @ g),
        (b, lambda g: g),
    ))


def relu(x: Tensor, tape: Tape) -> Tensor:
    mask = x.value > 0.0  # subgradient 0 at 0
    return tape.tensor(np.where(mask, x.value, 0.0),
                       ((x, lambda g, m=mask: g * m),))


def dropout(x: Tensor, rate: float, rng: np.random.Generator,
            tape: Tape, training: bool) -> Tensor:
    """Inverted dropout: survivors scaled by 1/(1-rate); identity at
    inference or rate 0."""
    if not 0.0 <= rate < 1.0:
        raise ValueError("dropout rate must be in [0, 1)")
    if not training or rate == 0.0:
        return x
    keep = rng.random(x.value.shape) >= rate
    scale_arr = keep / (1.0 - rate)
    return tape.tensor(x.value * scale_arr,
                       ((x, lambda g, s=scale_arr: g * s),))


def dilated_conv1d(x: Tensor, kernel: Tensor, dilation: int,
                   tape: Tape) -> Tensor:
    """Causal valid convolution: y_t = sum_j kernel_j * x_{t - j*dilation}."""
    t = x.value.shape[0]
    k = kernel.value.shape[0]
    if dilation < 1 or k < 1:
        raise ValueError("kernel size and dilation must be >= 1")
    span = (k - 1) * dilation
    if t < span + 1:
        raise InputTooShort(
            f"input length {t} < receptive field {span + 1}")
    t_out = t - span
    taps = np.stack([x.value[span - j * dilation: span - j * dilation + t_out]
                     for j in range(k)])  # [k, t_out]
    y = kernel.value @ taps

    def vjp_x(g, k=k, span=span, t=t, t_out=t_out, dilation=dilation,
              kv=kernel.value):
        gx = np.zeros(t)
        for j in range(k):
            start = span - j * dilation
            gx[start:start + t_out] += kv[j] * g
        return gx

    return tape.tensor(y, (
        (kernel, lambda g, tp=taps: tp @ g),
        (x, vjp_x),
    ))


def _pool_prep(x: Tensor, window: int):
    if window < 1:
        raise ValueError("window must be >= 1")
    t = x.value.shape[0]
    if t < window:
        raise InputTooShort(f"input length {t} < window {window}")
    t_out = t // window
    return t, t_out


def maxpool1d(x: Tensor, window: int, tape: Tape) -> Tensor:
    """Non-overlapping max pooling, stride = window; gradient routes to
    the first argmax in each window."""
    t, t_out = _pool_prep(x, window)
    blocks = x.value[: t_out * window].reshape(t_out, window)
    arg = blocks.argmax(axis=1)  # first index on ties
    y = blocks[np.arange(t_out), arg]

    def vjp(g, arg=arg, t=t, t_out=t_out, window=window):
        gx = np.zeros(t)
        gx[np.arange(t_out) * window + arg] = g
        return gx

    return tape.tensor(y, ((x, vjp),))


def avgpool1d(x: Tensor, window: int, tape: Tape) -> Tensor:
    """Non-overlapping mean pooling, stride = window."""
    t, t_out = _pool_prep(x, window)
    y = x.value[: t_out * window].reshape(t_out, window).mean(axis=1)

    def vjp(g, t=t, t_out=t_out, window=window):
        gx = np.zeros(t)
        gx[: t_out * window] = np.repeat(g / window, window)
        return gx

    return tape.tensor(y, ((x, vjp),))


def add(x: Tensor, y: Tensor, tape: Tape) -> Tensor:
    if x.value.shape != y.value.shape:
        raise ShapeMismatch(f"add: {x.value.shape} vs {y.value.shape}")
    return tape.tensor(x.value + y.value,
                       ((x, lambda g: g), (y, lambda g: g)))


def sub(x: Tensor, y: Tensor, tape: Tape) -> Tensor:
    if x.value.shape != y.value.shape:
        raise ShapeMismatch(f"sub: {x.value.shape} vs {y.value.shape}")
    return tape.tensor(x.value - y.value,
                       ((x, lambda g: g), (y, lambda g: -g)))


def blend(const_branch: np.ndarray, x: Tensor, alpha: float,
          tape: Tape) -> Tensor:
    """Convex combination alpha*const + (1-alpha)*x, with the constant
    branch outside the gradient path.  The endpoints are exact."""
    if alpha == 0.0:
        return x
    if alpha == 1.0:
        return tape.tensor(np.array(const_branch, dtype=np.float64))
    y = alpha * np.asarray(const_branch) + (1.0 - alpha) * x.value
    return tape.tensor(y, ((x, lambda g: (1.0 - alpha) * g),))


def pad_left(x: Tensor, n: int, tape: Tape) -> Tensor:
    """Prepend n zeros; gradient is the matching slice."""
    if n == 0:
        return x
    y = np.concatenate([np.zeros(n), x.value])
    return tape.tensor(y, ((x, lambda g: g[n:]),))


def mse_loss(pred: Tensor, target: np.ndarray, tape: Tape) -> Tensor:
    target = np.asarray(target, dtype=np.float64)
    if pred.value.shape != target.shape:
        raise ShapeMismatch(f"mse: {pred.value.shape} vs {target.shape}")
    diff = pred.value - target
    n = diff.size
    return tape.tensor(np.mean(diff ** 2),
                       ((pred, lambda g, d=diff, n=n: g * 2.0 * d / n),))


def scale(x: Tensor, c: float, tape: Tape) -> Tensor:
    return tape.tensor(c * x.value, ((x, lambda g: c * g),))


def xavier_init(shape, rng: np.random.Generator,
                fan_in: int | None = None,
                fan_out: int | None = None) -> np.ndarray:
    """Uniform Glorot initialization in +-sqrt(6/(fan_in+fan_out))."""
    shape = tuple(shape)
    if fan_in is None or fan_out is None:
        if len(shape) == 2:
            fan_out = fan_out or shape[0]
            fan_in = fan_in or shape[1]
        else:
            fan_in = fan_in or shape[0]
            fan_out = fan_out or shape[0]
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=shape)


def grad_check(build, params: dict, eps: float = 1e-5) -> float:
    """Compare tape gradients of a scalar function against central
    differences; returns the max relative error over all coordinates.

    `build(tape, leaves)` must construct the loss from a dict of leaf
    tensors mirroring `params`.
    """

    def run(values):
        tape = Tape()
        leaves = {k: tape.leaf(v) for k, v in values.items()}
        loss = build(tape, leaves)
        return tape, leaves, loss

    tape, leaves, loss = run(params)
    if not np.isfinite(loss.value):
        raise NonFiniteLoss("loss is not finite at the check point")
    tape.backward(loss)
    analytic = {k: leaves[k].grad.copy() for k in params}

    max_err = 0.0
    for name, base in params.items():
        flat = base.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            f_plus = run(params)[2].value
            flat[i] = orig - eps
            f_minus = run(params)[2].value
            flat[i] = orig
            fd = (f_plus - f_minus) / (2.0 * eps)
            ad = analytic[name].reshape(-1)[i]
            denom = max(abs(fd), abs(ad), 1.0)
            max_err = max(max_err, abs(fd - ad) / denom)
    return max_err
