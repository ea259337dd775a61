"""Minimal dense network with categorical heads, by hand.

One hidden layer of rectified-linear units feeding linear outputs; the
policy net splits its output row into per-head logit vectors, the value
net emits a single scalar.  Backpropagation is written out explicitly so
gradients can be checked against finite differences, and everything runs
in 64-bit floats to keep that comparison clean.

Forward passes accept a single flattened observation or a whole batch
(episode updates stack all steps into one matrix).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import IO, Sequence

import numpy as np

HIDDEN_UNITS = 128

ADAM_LR = 0.0007
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass(frozen=True)
class HeadLayout:
    """Ordered categorical head widths; their sum is the net output width."""

    sizes: tuple[int, ...]

    @property
    def total(self) -> int:
        return sum(self.sizes)

    def slices(self) -> list[slice]:
        out, start = [], 0
        for size in self.sizes:
            out.append(slice(start, start + size))
            start += size
        return out


@dataclass
class Mlp:
    """input -> relu hidden -> linear output, float64 parameters."""

    w1: np.ndarray  # (n_in, n_hidden)
    b1: np.ndarray  # (n_hidden,)
    w2: np.ndarray  # (n_hidden, n_out)
    b2: np.ndarray  # (n_out,)

    @classmethod
    def create(cls, rng: np.random.Generator, n_in: int, n_out: int,
               n_hidden: int = HIDDEN_UNITS, out_scale: float = 0.01) -> "Mlp":
        # He-scaled hidden layer; near-zero output weights so the initial
        # policy heads start (almost) uniform.
        w1 = rng.normal(0.0, np.sqrt(2.0 / n_in), size=(n_in, n_hidden))
        b1 = np.zeros(n_hidden)
        w2 = rng.normal(0.0, out_scale, size=(n_hidden, n_out))
        b2 = np.zeros(n_out)
        return cls(w1, b1, w2, b2)

    @property
    def n_in(self) -> int:
        return self.w1.shape[0]

    @property
    def n_out(self) -> int:
        return self.w2.shape[1]

    def params(self) -> list[np.ndarray]:
        return [self.w1, self.b1, self.w2, self.b2]

    def set_params(self, params: Sequence[np.ndarray]) -> None:
        self.w1, self.b1, self.w2, self.b2 = [np.asarray(p, dtype=float)
                                              for p in params]

    def forward(self, x: np.ndarray) -> tuple[np.ndarray, tuple]:
        """Returns (output, cache); x is (n_in,) or (batch, n_in)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[1] != self.n_in:
            raise ValueError(f"input width {x.shape[1]} != expected {self.n_in}")
        z1 = x @ self.w1 + self.b1
        h = np.maximum(z1, 0.0)
        out = h @ self.w2 + self.b2
        return out, (x, z1, h)

    def backward(self, cache: tuple, dout: np.ndarray) -> list[np.ndarray]:
        """Gradients of a scalar loss given d loss / d output, summed over
        the batch.  Order matches params()."""
        x, z1, h = cache
        dout = np.atleast_2d(dout)
        if not np.all(np.isfinite(dout)):
            raise FloatingPointError("non-finite gradient at output layer")
        dw2 = h.T @ dout
        db2 = dout.sum(axis=0)
        dh = dout @ self.w2.T
        dz1 = dh * (z1 > 0.0)
        if not np.all(np.isfinite(dz1)):
            raise FloatingPointError("non-finite gradient at hidden layer")
        dw1 = x.T @ dz1
        db1 = dz1.sum(axis=0)
        return [dw1, db1, dw2, db2]


@dataclass(frozen=True)
class HeadDistributions:
    """Per-head softmax stats for a batch: lists parallel to the layout."""

    probs: list[np.ndarray]           # each (batch, k)
    log_probs: list[np.ndarray]       # each (batch, k)
    head_entropies: list[np.ndarray]  # each (batch,)

    @property
    def entropies(self) -> np.ndarray:
        """(batch,) entropy summed across heads."""
        return sum(self.head_entropies)


def head_distributions(logits: np.ndarray, layout: HeadLayout) -> HeadDistributions:
    """Stable softmax per head: probabilities, log-probabilities, entropy."""
    logits = np.atleast_2d(np.asarray(logits, dtype=float))
    probs, log_probs, entropies = [], [], []
    for sl in layout.slices():
        z = logits[:, sl]
        z = z - z.max(axis=1, keepdims=True)
        expz = np.exp(z)
        total = expz.sum(axis=1, keepdims=True)
        p = expz / total
        logp = z - np.log(total)
        probs.append(p)
        log_probs.append(logp)
        entropies.append(-(p * logp).sum(axis=1))
    return HeadDistributions(probs, log_probs, entropies)


def joint_log_prob(dists: HeadDistributions, indices: np.ndarray) -> np.ndarray:
    """Sum of per-head log-probabilities of the sampled indices.

    indices is (batch, n_heads); returns (batch,).
    """
    indices = np.atleast_2d(np.asarray(indices, dtype=int))
    batch = np.arange(indices.shape[0])
    out = np.zeros(indices.shape[0])
    for head, logp in enumerate(dists.log_probs):
        idx = indices[:, head]
        if np.any(idx < 0) or np.any(idx >= logp.shape[1]):
            raise IndexError(f"head {head} index out of range")
        out += logp[batch, idx]
    return out


def sample_heads(dists: HeadDistributions, rng: np.random.Generator) -> tuple[int, ...]:
    """Inverse-CDF sample of one index per head (single-row distributions)."""
    picks = []
    for p in dists.probs:
        row = p[0]
        r = rng.random()
        cum = np.cumsum(row)
        picks.append(int(min(np.searchsorted(cum, r, side="right"), len(row) - 1)))
    return tuple(picks)


def global_norm(grads: Sequence[np.ndarray]) -> float:
    return float(np.sqrt(sum(float(np.sum(g * g)) for g in grads)))


def clip_global_norm(grads: Sequence[np.ndarray],
                     max_norm: float) -> tuple[list[np.ndarray], float]:
    """Scale all gradients by max_norm/norm when the joint L2 norm exceeds
    max_norm; direction is preserved.  Returns (grads, pre-clip norm)."""
    norm = global_norm(grads)
    if norm > max_norm and norm > 0.0:
        scale = max_norm / norm
        grads = [g * scale for g in grads]
    return list(grads), norm


@dataclass
class AdamState:
    """First/second moment accumulators for one flat parameter list."""

    m: list[np.ndarray]
    v: list[np.ndarray]
    t: int = 0
    lr: float = ADAM_LR
    beta1: float = ADAM_BETA1
    beta2: float = ADAM_BETA2
    eps: float = ADAM_EPS

    @classmethod
    def for_params(cls, params: Sequence[np.ndarray], lr: float = ADAM_LR) -> "AdamState":
        return cls(m=[np.zeros_like(p) for p in params],
                   v=[np.zeros_like(p) for p in params], lr=lr)


def adam_step(params: Sequence[np.ndarray], grads: Sequence[np.ndarray],
              opt: AdamState) -> None:
    """Bias-corrected adaptive-moment update, in place."""
    opt.t += 1
    for i, (p, g) in enumerate(zip(params, grads)):
        opt.m[i] = opt.beta1 * opt.m[i] + (1.0 - opt.beta1) * g
        opt.v[i] = opt.beta2 * opt.v[i] + (1.0 - opt.beta2) * g * g
        m_hat = opt.m[i] / (1.0 - opt.beta1 ** opt.t)
        v_hat = opt.v[i] / (1.0 - opt.beta2 ** opt.t)
        p -= opt.lr * m_hat / (np.sqrt(v_hat) + opt.eps)


def clip_and_step(params: Sequence[np.ndarray], grads: Sequence[np.ndarray],
                  opt: AdamState, max_norm: float = 0.5) -> float:
    """Global-norm clip then one Adam step; returns the pre-clip norm."""
    clipped, norm = clip_global_norm(grads, max_norm)
    adam_step(params, clipped, opt)
    return norm


# --- checkpoint serialization -------------------------------------------
#
# Versioned JSON.  Python's json writes floats with repr(), the shortest
# exact decimal form, so 64-bit values round-trip bit-for-bit.

CHECKPOINT_VERSION = 1


def _array_to_json(a: np.ndarray) -> dict:
    return {"shape": list(a.shape), "data": a.ravel().tolist()}


def _array_from_json(d: dict) -> np.ndarray:
    return np.asarray(d["data"], dtype=float).reshape(d["shape"])


def _mlp_to_json(net: Mlp) -> dict:
    return {name: _array_to_json(p) for name, p in
            zip(("w1", "b1", "w2", "b2"), net.params())}


def _mlp_from_json(d: dict) -> Mlp:
    return Mlp(*[_array_from_json(d[name]) for name in ("w1", "b1", "w2", "b2")])


def save_checkpoint(fp: IO[str], policy: Mlp, value: Mlp, opt: AdamState,
                    config: dict) -> None:
    payload = {
        "version": CHECKPOINT_VERSION,
        "config": config,
        "policy": _mlp_to_json(policy),
        "value": _mlp_to_json(value),
        "opt": {
            "t": opt.t,
            "lr": opt.lr,
            "beta1": opt.beta1,
            "beta2": opt.beta2,
            "eps": opt.eps,
            "m": [_array_to_json(a) for a in opt.m],
            "v": [_array_to_json(a) for a in opt.v],
        },
    }
    json.dump(payload, fp)


def load_checkpoint(fp: IO[str]) -> tuple[Mlp, Mlp, AdamState, dict]:
    payload = json.load(fp)
    if payload.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {payload.get('version')!r}")
    policy = _mlp_from_json(payload["policy"])
    value = _mlp_from_json(payload["value"])
    o = payload["opt"]
    opt = AdamState(
        m=[_array_from_json(a) for a in o["m"]],
        v=[_array_from_json(a) for a in o["v"]],
        t=o["t"], lr=o["lr"], beta1=o["beta1"], beta2=o["beta2"], eps=o["eps"],
    )
    return policy, value, opt, payload["config"]
