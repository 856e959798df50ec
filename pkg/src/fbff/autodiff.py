"""Reverse-mode automatic differentiation over dense float64 arrays.

A dynamic tape rebuilt on every training step: the graphs here are a few
hundred nodes of small vector arithmetic, so a plain Python walk is cheap
and keeps the machinery transparent. 64-bit floats throughout; the losses
involve exponentials of TD errors and log-densities, where 32-bit
underflow is a real risk at negligible speed gain at this scale.
"""
from __future__ import annotations

import numpy as np
from scipy import special as _special

# exp inputs are clamped here before exponentiation; healthy training never
# reaches the clamp (tested), it only guards the first NaN of a diverging run
EXP_CLAMP = 30.0
_LN_EPS = 1e-5


class Node:
    """One value in the computation graph.

    value and grad are float64 ndarrays of identical shape (0-d for
    scalars). Nodes made by constant() never receive gradient; parameter
    leaves accumulate gradient across backward calls until cleared.
    """

    __slots__ = ("value", "grad", "requires_grad", "_parents", "_bw")

    def __init__(self, value, parents=(), bw=None, requires_grad=None):
        self.value = value
        self.grad = None
        self._parents = parents
        self._bw = bw
        if requires_grad is None:
            requires_grad = any(p.requires_grad for p in parents)
        self.requires_grad = requires_grad

    def __add__(self, other):
        return add(self, wrap(other))

    def __radd__(self, other):
        return add(wrap(other), self)

    def __sub__(self, other):
        return sub(self, wrap(other))

    def __rsub__(self, other):
        return sub(wrap(other), self)

    def __mul__(self, other):
        return mul(self, wrap(other))

    def __rmul__(self, other):
        return mul(wrap(other), self)

    def __truediv__(self, other):
        return div(self, wrap(other))

    def __rtruediv__(self, other):
        return div(wrap(other), self)

    def __neg__(self):
        return neg(self)


def constant(x) -> Node:
    return Node(np.asarray(x, dtype=np.float64), requires_grad=False)


def wrap(x) -> Node:
    return x if isinstance(x, Node) else constant(x)


def _red(g: np.ndarray, shape) -> np.ndarray:
    # reduce a broadcast gradient back to the operand's shape; operands are
    # either same-shape or scalar, nothing fancier is used in this package
    if g.shape == shape:
        return g
    return np.asarray(g.sum(), dtype=np.float64).reshape(shape)


def add(a: Node, b: Node) -> Node:
    return Node(a.value + b.value, (a, b),
                lambda g: (_red(g, a.value.shape), _red(g, b.value.shape)))


def sub(a: Node, b: Node) -> Node:
    return Node(a.value - b.value, (a, b),
                lambda g: (_red(g, a.value.shape), _red(-g, b.value.shape)))


def neg(a: Node) -> Node:
    return Node(-a.value, (a,), lambda g: (-g,))


def mul(a: Node, b: Node) -> Node:
    return Node(a.value * b.value, (a, b),
                lambda g: (_red(g * b.value, a.value.shape),
                           _red(g * a.value, b.value.shape)))


def div(a: Node, b: Node) -> Node:
    return Node(a.value / b.value, (a, b),
                lambda g: (_red(g / b.value, a.value.shape),
                           _red(-g * a.value / (b.value * b.value),
                                b.value.shape)))


def square(a: Node) -> Node:
    return Node(a.value * a.value, (a,), lambda g: (2.0 * a.value * g,))


def exp(a: Node) -> Node:
    v = np.exp(np.minimum(a.value, EXP_CLAMP))
    return Node(v, (a,), lambda g: (np.where(a.value <= EXP_CLAMP, v * g, 0.0),))


def log(a: Node) -> Node:
    return Node(np.log(a.value), (a,), lambda g: (g / a.value,))


def log1p(a: Node) -> Node:
    return Node(np.log1p(a.value), (a,), lambda g: (g / (1.0 + a.value),))


def tanh(a: Node) -> Node:
    v = np.tanh(a.value)
    return Node(v, (a,), lambda g: ((1.0 - v * v) * g,))


def sigmoid(a: Node) -> Node:
    v = _sigmoid(a.value)
    return Node(v, (a,), lambda g: (v * (1.0 - v) * g,))


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return _special.expit(x)


def softplus(a: Node) -> Node:
    return Node(np.logaddexp(0.0, a.value), (a,),
                lambda g: (_sigmoid(a.value) * g,))


def swish(a: Node) -> Node:
    s = _sigmoid(a.value)
    return Node(a.value * s, (a,),
                lambda g: (s * (1.0 + a.value * (1.0 - s)) * g,))


def clamp_min(a: Node, floor: float) -> Node:
    return Node(np.maximum(a.value, floor), (a,),
                lambda g: (np.where(a.value > floor, g, 0.0),))


def lgamma(a: Node) -> Node:
    return Node(_special.gammaln(a.value), (a,),
                lambda g: (_special.digamma(a.value) * g,))


def asum(a: Node) -> Node:
    return Node(np.asarray(np.sum(a.value)), (a,),
                lambda g: (np.full_like(a.value, float(g)),))


def mean(a: Node) -> Node:
    n = a.value.size
    return Node(np.asarray(np.mean(a.value)), (a,),
                lambda g: (np.full_like(a.value, float(g) / n),))


def affine(w: Node, b: Node, x: Node) -> Node:
    return Node(w.value @ x.value + b.value, (w, b, x),
                lambda g: (np.outer(g, x.value), g, w.value.T @ g))


def layer_norm(x: Node, gain: Node, bias: Node) -> Node:
    v = x.value
    c = v - v.mean()
    inv = 1.0 / np.sqrt((c * c).mean() + _LN_EPS)
    xn = c * inv

    def bw(g):
        gx = g * gain.value
        dx = inv * (gx - gx.mean() - xn * (gx * xn).mean())
        return dx, g * xn, g

    return Node(gain.value * xn + bias.value, (x, gain, bias), bw)


def concat(parts: list[Node]) -> Node:
    sizes = [p.value.size for p in parts]
    splits = np.cumsum(sizes)[:-1]

    def bw(g):
        return tuple(np.split(g, splits))

    return Node(np.concatenate([p.value for p in parts]), tuple(parts), bw)


def stop_gradient(a: Node) -> Node:
    """Identical value, zero gradient flow (a detached coefficient)."""
    return Node(a.value, (), None, requires_grad=False)


def grad_scale(a: Node, factor: float) -> Node:
    """Value passes through bitwise; gradient is multiplied by factor."""
    return Node(a.value, (a,), lambda g: (factor * g,))


def backward(root: Node) -> None:
    """Reverse pass from a scalar root.

    Gradients of leaf nodes (parameters) accumulate across calls;
    intermediate node gradients are cleared first so each call contributes
    exactly d root/d leaf once.
    """
    if np.ndim(root.value) != 0:
        raise ValueError("backward root must be scalar, got shape %r"
                         % (np.shape(root.value),))
    if not root.requires_grad:
        return
    topo: list[Node] = []
    seen: set[int] = set()
    stack: list[tuple[Node, bool]] = [(root, False)]
    while stack:
        node, emitted = stack.pop()
        if emitted:
            topo.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if p.requires_grad and id(p) not in seen:
                stack.append((p, False))

    for node in topo:
        if node._bw is not None:
            node.grad = None
    seed = np.ones((), dtype=np.float64)
    root.grad = seed if root.grad is None or root._bw is not None \
        else root.grad + seed
    for node in reversed(topo):
        g = node.grad
        if node._bw is None or g is None:
            continue
        for p, pg in zip(node._parents, node._bw(g)):
            if not p.requires_grad:
                continue
            p.grad = pg if p.grad is None else p.grad + pg


class Parameter:
    """A named trainable leaf with its optimizer slots."""

    __slots__ = ("name", "node", "m", "v", "vhat")

    def __init__(self, name: str, value: np.ndarray):
        self.name = name
        self.node = Node(np.asarray(value, dtype=np.float64),
                         requires_grad=True)
        self.m = np.zeros_like(self.node.value)
        self.v = np.zeros_like(self.node.value)
        self.vhat = np.zeros_like(self.node.value)

    @property
    def value(self) -> np.ndarray:
        return self.node.value

    @property
    def grad(self):
        return self.node.grad

    def zero_grad(self) -> None:
        self.node.grad = None


class Registry:
    """Flat registry of uniquely named parameters (one per weight)."""

    def __init__(self):
        self._params: dict[str, Parameter] = {}

    def add(self, name: str, value: np.ndarray) -> Parameter:
        if name in self._params:
            raise ValueError("duplicate parameter name: " + name)
        p = Parameter(name, value)
        self._params[name] = p
        return p

    def __iter__(self):
        return iter(self._params.values())

    def __len__(self):
        return len(self._params)

    def __getitem__(self, name: str) -> Parameter:
        return self._params[name]

    def names(self) -> list[str]:
        return list(self._params.keys())

    def zero_grad(self) -> None:
        for p in self._params.values():
            p.node.grad = None

    def values_map(self) -> dict[str, np.ndarray]:
        return {n: p.node.value.copy() for n, p in self._params.items()}

    def load_values(self, values: dict[str, np.ndarray]) -> None:
        for n, p in self._params.items():
            v = values[n]
            if v.shape != p.node.value.shape:
                raise ValueError("shape mismatch for %s: %r vs %r"
                                 % (n, v.shape, p.node.value.shape))
            p.node.value = np.asarray(v, dtype=np.float64).copy()


def grad_check(f, x: np.ndarray, eps: float = 1e-5) -> float:
    """Max relative error between analytic and central-difference gradients.

    f maps a Node to a scalar Node. Relative error per coordinate is
    |analytic - numeric| / max(1, |analytic|).
    """
    x = np.asarray(x, dtype=np.float64)
    leaf = Node(x.copy(), requires_grad=True)
    out = f(leaf)
    if not np.all(np.isfinite(out.value)):
        raise ValueError("f(x) is not finite")
    backward(out)
    analytic = np.zeros_like(x) if leaf.grad is None \
        else np.asarray(leaf.grad, dtype=np.float64).reshape(x.shape)
    worst = 0.0
    flat = x.reshape(-1)
    ana = analytic.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + eps
        hi = float(f(Node(x.copy(), requires_grad=False)).value)
        flat[i] = orig - eps
        lo = float(f(Node(x.copy(), requires_grad=False)).value)
        flat[i] = orig
        numeric = (hi - lo) / (2.0 * eps)
        err = abs(ana[i] - numeric) / max(1.0, abs(ana[i]))
        worst = max(worst, err)
    return worst
