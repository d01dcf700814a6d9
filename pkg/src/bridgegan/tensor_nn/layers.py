"""Layers used by the generator, critic and reward network."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .autograd import (ShapeMismatch, Tensor, as_tensor, concatenate, div, matmul,
                       parameter, sigmoid, softmax, tanh, tsum)


class NonPositiveTemperature(ValueError):
    pass


_ACTIVATIONS = {"tanh": tanh, "none": lambda x: x, "sigmoid": sigmoid}


def uniform_init(rng: np.random.Generator, fan_in: int, shape) -> np.ndarray:
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


class Module:
    """Anything holding named parameter tensors, possibly nested."""

    def named_parameters(self, prefix: str = "") -> dict[str, Tensor]:
        out: dict[str, Tensor] = {}
        for name, value in vars(self).items():
            key = f"{prefix}{name}"
            if isinstance(value, Tensor) and value.requires_grad:
                out[key] = value
            elif isinstance(value, Module):
                out.update(value.named_parameters(key + "."))
            elif isinstance(value, (list, tuple)):
                for k, item in enumerate(value):
                    if isinstance(item, Module):
                        out.update(item.named_parameters(f"{key}.{k}."))
        return out

    def parameters(self) -> list[Tensor]:
        return list(self.named_parameters().values())

    def n_params(self) -> int:
        return sum(p.size for p in self.parameters())


class DenseLayer(Module):
    def __init__(self, fan_in: int, fan_out: int, activation: str = "tanh",
                 rng: np.random.Generator | None = None):
        if activation not in _ACTIVATIONS:
            raise ValueError(f"unknown activation {activation!r}")
        rng = rng if rng is not None else np.random.default_rng(0)
        self.weights = parameter(uniform_init(rng, fan_in, (fan_in, fan_out)))
        self.bias = parameter(uniform_init(rng, fan_in, (fan_out,)))
        self.activation = activation

    @property
    def fan_in(self) -> int:
        return self.weights.shape[0]

    @property
    def fan_out(self) -> int:
        return self.weights.shape[1]

    def __call__(self, x) -> Tensor:
        return dense_forward(self, x)


def dense_forward(layer: DenseLayer, x) -> Tensor:
    x = as_tensor(x)
    if x.shape[-1] != layer.fan_in:
        raise ShapeMismatch(f"dense expects last dim {layer.fan_in}, got {x.shape}")
    return _ACTIVATIONS[layer.activation](matmul(x, layer.weights) + layer.bias)


def sample_gumbel(rng: np.random.Generator, shape) -> np.ndarray:
    u = rng.uniform(np.finfo(float).tiny, 1.0, size=shape)
    return -np.log(-np.log(u))


def gumbel_softmax(logits, tau: float = 1.0, noise: np.ndarray | None = None,
                   rng: np.random.Generator | None = None, hard: bool = False) -> Tensor:
    """Relaxed categorical sample over the last axis.

    ``noise`` injects the Gumbel draws directly (zeros give a plain softmax);
    otherwise they come from ``rng``.  ``hard`` returns the one-hot argmax in
    the forward pass while keeping the soft sample's gradient.
    """
    if not tau > 0:
        raise NonPositiveTemperature(f"temperature must be > 0, got {tau}")
    logits = as_tensor(logits)
    if noise is None:
        noise = sample_gumbel(rng if rng is not None else np.random.default_rng(), logits.shape)
    y = softmax((logits + noise) / tau, axis=-1)
    if not hard:
        return y
    return y + Tensor(one_hot_argmax(y.data) - y.data)


def one_hot_argmax(x: np.ndarray) -> np.ndarray:
    out = np.zeros_like(x)
    np.put_along_axis(out, x.argmax(axis=-1)[..., None], 1.0, axis=-1)
    return out


def normalized_adjacency(adjacency) -> Tensor:
    """Per bond channel (excluding "none"), divide rows by in-degree + 1."""
    a = as_tensor(adjacency)[..., 1:]                     # B,N,N,Y-1
    deg = tsum(a, axis=(2, 3), keepdims=True) + 1.0        # B,N,1,1
    return div(a, deg).transpose(0, 3, 1, 2)               # B,Y-1,N,N


class RGCNLayer(Module):
    def __init__(self, f_in: int, f_out: int, n_bond_types: int = 5, activation: str = "tanh",
                 rng: np.random.Generator | None = None):
        rng = rng if rng is not None else np.random.default_rng(0)
        self.w_self = parameter(uniform_init(rng, f_in, (f_in, f_out)))
        self.w_rel = parameter(uniform_init(rng, f_in, (n_bond_types - 1, f_in, f_out)))
        self.bias = parameter(uniform_init(rng, f_in, (f_out,)))
        self.activation = activation

    def __call__(self, h, adjacency, a_norm: Tensor | None = None) -> Tensor:
        return rgcn_layer(self, h, adjacency, a_norm)


def rgcn_layer(layer: RGCNLayer, h, adjacency, a_norm: Tensor | None = None) -> Tensor:
    h, adjacency = as_tensor(h), as_tensor(adjacency)
    b, n, f = h.shape
    n_rel = layer.w_rel.shape[0]
    if f != layer.w_self.shape[0]:
        raise ShapeMismatch(f"rgcn expects {layer.w_self.shape[0]} features, got {f}")
    if adjacency.shape != (b, n, n, n_rel + 1):
        raise ShapeMismatch(f"adjacency shape {adjacency.shape} does not match features {h.shape}")
    if a_norm is None:
        a_norm = normalized_adjacency(adjacency)
    # messages: sum_y A_y (h W_y)
    hw = matmul(h.reshape(b, 1, n, f), layer.w_rel)        # B,Y-1,N,F'
    msg = tsum(matmul(a_norm, hw), axis=1)                 # B,N,F'
    out = matmul(h, layer.w_self) + msg + layer.bias
    return _ACTIVATIONS[layer.activation](out)


class GraphAggregate(Module):
    def __init__(self, f_in: int, f_out: int, rng: np.random.Generator | None = None):
        rng = rng if rng is not None else np.random.default_rng(0)
        self.gate = DenseLayer(f_in, f_out, "sigmoid", rng)
        self.value = DenseLayer(f_in, f_out, "tanh", rng)

    def __call__(self, h) -> Tensor:
        return graph_aggregate(self, h)


def graph_aggregate(layer: GraphAggregate, h) -> Tensor:
    h = as_tensor(h)
    if h.ndim != 3:
        raise ShapeMismatch(f"aggregate expects B x N x F, got {h.shape}")
    return tsum(layer.gate(h) * layer.value(h), axis=1)


@dataclass
class GraphEncoder(Module):
    """Two relational convolutions, gated readout, then a dense stack to a scalar."""
    n_atom_types: int = 6
    n_bond_types: int = 5
    conv_dims: tuple[int, ...] = (64, 32)
    agg_dim: int = 128
    head_dims: tuple[int, ...] = (64,)
    out_activation: str = "none"
    seed: int = 0
    convs: list = field(init=False)
    aggregate: GraphAggregate = field(init=False)
    head: list = field(init=False)

    def __post_init__(self):
        rng = np.random.default_rng(self.seed)
        dims = (self.n_atom_types,) + tuple(self.conv_dims)
        self.convs = [RGCNLayer(a, b, self.n_bond_types, "tanh", rng) for a, b in zip(dims, dims[1:])]
        # readout sees the last conv output concatenated with the raw features
        self.aggregate = GraphAggregate(dims[-1] + self.n_atom_types, self.agg_dim, rng)
        hd = (self.agg_dim,) + tuple(self.head_dims)
        self.head = [DenseLayer(a, b, "tanh", rng) for a, b in zip(hd, hd[1:])]
        self.head.append(DenseLayer(hd[-1], 1, self.out_activation, rng))

    def __call__(self, features, adjacency) -> Tensor:
        x, a = as_tensor(features), as_tensor(adjacency)
        a_norm = normalized_adjacency(a)
        h = x
        for conv in self.convs:
            h = conv(h, a, a_norm)
        g = self.aggregate(concatenate([h, x], axis=-1))
        for layer in self.head:
            g = layer(g)
        return g.reshape(g.shape[0])
