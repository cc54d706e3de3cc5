"""Two single-head GAT layers and a linear head, with manual gradients.

Everything runs in float64 numpy. Graphs are given as a dense boolean
adjacency ``A[u, v]`` meaning an edge ``u -> v``; each node attends over its
in-neighbours plus itself.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

CHECKPOINT_VERSION = 1
PARAM_NAMES = ("gat1.W", "gat1.a", "gat2.W", "gat2.a", "head.w", "head.b")


class NonFiniteError(FloatingPointError):
    """A loss, gradient or parameter became NaN or infinite."""


class CheckpointError(ValueError):
    pass


def elu(x):
    return np.where(x > 0, x, np.expm1(np.minimum(x, 0.0)))


def glorot(rng: np.random.Generator, fan_in: int, fan_out: int, shape) -> np.ndarray:
    lim = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-lim, lim, size=shape)


@dataclass
class GatCache:
    h: np.ndarray
    z: np.ndarray
    s: np.ndarray
    alpha: np.ndarray
    pre: np.ndarray


def gat_forward(W, a, h, adjacency, slope=0.2, activation=True):
    """Single-head graph attention.

    Returns ``(output, cache)``; ``cache.alpha[i, j]`` is the weight node ``i``
    gives to neighbour ``j`` (rows sum to 1).
    """
    k = h.shape[0]
    if adjacency.shape != (k, k):
        raise ValueError(f"adjacency shape {adjacency.shape} does not match {k} nodes")
    if W.shape[0] != h.shape[1] or a.shape != (2 * W.shape[1],):
        raise ValueError("GAT parameter shapes do not match the input")
    d = W.shape[1]
    z = h @ W
    s = (z @ a[:d])[:, None] + (z @ a[d:])[None, :]
    e = np.where(s > 0, s, slope * s)
    mask = adjacency.T | np.eye(k, dtype=bool)
    e = np.where(mask, e, -np.inf)
    e = np.exp(e - e.max(axis=1, keepdims=True))
    alpha = e / e.sum(axis=1, keepdims=True)
    pre = alpha @ z
    out = elu(pre) if activation else pre
    return out, GatCache(h, z, s, alpha, pre)


def gat_backward(W, a, cache: GatCache, dout, slope=0.2, activation=True):
    """Gradients ``(dW, da, dh)`` for an upstream gradient ``dout``."""
    d = W.shape[1]
    dpre = dout * np.where(cache.pre > 0, 1.0, np.exp(np.minimum(cache.pre, 0.0))) if activation else dout
    alpha, z = cache.alpha, cache.z
    dalpha = dpre @ z.T
    dz = alpha.T @ dpre
    de = alpha * (dalpha - (alpha * dalpha).sum(axis=1, keepdims=True))
    ds = de * np.where(cache.s > 0, 1.0, slope)
    df, dg = ds.sum(axis=1), ds.sum(axis=0)
    dz += np.outer(df, a[:d]) + np.outer(dg, a[d:])
    da = np.concatenate([z.T @ df, z.T @ dg])
    dW = cache.h.T @ dz
    dh = dz @ W.T
    return dW, da, dh


MESSAGE_DIRECTIONS = ("predecessors", "successors", "both")


def _message_adjacency(adjacency, messages_from):
    if messages_from == "successors":
        return adjacency.T
    if messages_from == "both":
        return adjacency | adjacency.T
    return adjacency


class QNetwork:
    """GAT -> GAT -> linear head, one scalar per node.

    ``skip_features`` feeds each node's raw features to the head next to its
    embedding. ``messages_from`` picks whose features a node attends over:
    nodes that can precede it, nodes that can follow it, or both.
    """

    def __init__(
        self,
        in_dim: int = 3,
        hidden: int = 32,
        slope: float = 0.2,
        seed: int = 0,
        skip_features: bool = True,
        messages_from: str = "predecessors",
    ):
        if messages_from not in MESSAGE_DIRECTIONS:
            raise ValueError(f"messages_from must be one of {MESSAGE_DIRECTIONS}")
        self.in_dim, self.hidden, self.slope = in_dim, hidden, slope
        self.skip_features, self.messages_from = skip_features, messages_from
        head_in = hidden + (in_dim if skip_features else 0)
        rng = np.random.default_rng(seed)
        self.params = {
            "gat1.W": glorot(rng, in_dim, hidden, (in_dim, hidden)),
            "gat1.a": glorot(rng, 2 * hidden, 1, (2 * hidden,)),
            "gat2.W": glorot(rng, hidden, hidden, (hidden, hidden)),
            "gat2.a": glorot(rng, 2 * hidden, 1, (2 * hidden,)),
            "head.w": glorot(rng, head_in, 1, (head_in,)),
            "head.b": np.zeros(1),
        }

    def copy(self) -> "QNetwork":
        other = QNetwork.__new__(QNetwork)
        other.in_dim, other.hidden, other.slope = self.in_dim, self.hidden, self.slope
        other.skip_features, other.messages_from = self.skip_features, self.messages_from
        other.params = {k: v.copy() for k, v in self.params.items()}
        return other

    def forward(self, features, adjacency):
        """Q for every node of a graph given by features and ``adjacency[u, v]`` = edge u -> v."""
        p = self.params
        adj = _message_adjacency(adjacency, self.messages_from)
        h1, c1 = gat_forward(p["gat1.W"], p["gat1.a"], features, adj, self.slope)
        h2, c2 = gat_forward(p["gat2.W"], p["gat2.a"], h1, adj, self.slope)
        head_in = np.hstack([h2, features]) if self.skip_features else h2
        q = head_in @ p["head.w"] + p["head.b"][0]
        return q, (c1, c2, head_in)

    def backward(self, cache, dq) -> dict:
        p = self.params
        c1, c2, head_in = cache
        grads = {"head.w": head_in.T @ dq, "head.b": np.array([dq.sum()])}
        dh2 = np.outer(dq, p["head.w"][: self.hidden])
        grads["gat2.W"], grads["gat2.a"], dh1 = gat_backward(p["gat2.W"], p["gat2.a"], c2, dh2, self.slope)
        grads["gat1.W"], grads["gat1.a"], _ = gat_backward(p["gat1.W"], p["gat1.a"], c1, dh1, self.slope)
        return grads

    def apply_gradients(self, grads: dict, lr: float) -> None:
        for name, g in grads.items():
            if not np.all(np.isfinite(g)):
                raise NonFiniteError(f"non-finite gradient for {name}")
        for name, g in grads.items():
            self.params[name] -= lr * g

    def node_values(self, graph) -> np.ndarray:
        """Q for every row of ``graph`` (row 0 is the last action)."""
        q, _ = self.forward(graph.features, graph.adjacency)
        return q

    def q_values(self, graph) -> np.ndarray:
        """Q for the legal actions (rows 1..k-1 of ``graph``)."""
        return self.node_values(graph)[1:]

    # -- checkpoints ---------------------------------------------------------

    def to_dict(self, training: dict | None = None) -> dict:
        return {
            "schema_version": CHECKPOINT_VERSION,
            "kind": "qnetwork",
            "in_dim": self.in_dim,
            "hidden": self.hidden,
            "leaky_relu_slope": self.slope,
            "skip_features": self.skip_features,
            "messages_from": self.messages_from,
            "params": {
                k: {"shape": list(v.shape), "data": v.ravel().tolist()} for k, v in self.params.items()
            },
            "training": training or {},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "QNetwork":
        if d.get("schema_version") != CHECKPOINT_VERSION or d.get("kind") != "qnetwork":
            raise CheckpointError("not a supported Q-network checkpoint")
        net = cls(
            int(d["in_dim"]),
            int(d["hidden"]),
            float(d["leaky_relu_slope"]),
            skip_features=bool(d.get("skip_features", False)),
            messages_from=d.get("messages_from", "predecessors"),
        )
        for name, ref in net.params.items():
            entry = d["params"].get(name)
            if entry is None:
                raise CheckpointError(f"checkpoint lacks parameter {name}")
            arr = np.asarray(entry["data"], dtype=float)
            if tuple(entry["shape"]) != ref.shape or arr.size != ref.size:
                raise CheckpointError(f"shape mismatch for {name}: {entry['shape']} vs {list(ref.shape)}")
            net.params[name] = arr.reshape(ref.shape)
        return net


def backward_and_sgd(net: QNetwork, cache, dq, learning_rate: float) -> QNetwork:
    net.apply_gradients(net.backward(cache, dq), learning_rate)
    return net


def save_checkpoint(net: QNetwork, path, training: dict | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(net.to_dict(training), fh, sort_keys=True)
        fh.write("\n")


def load_checkpoint(path):
    """Returns ``(net, training_dict)``."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            d = json.load(fh)
    except json.JSONDecodeError as exc:
        raise CheckpointError(f"{path}: not valid JSON") from exc
    return QNetwork.from_dict(d), d.get("training", {})
