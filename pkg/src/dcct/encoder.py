"""Two-layer tanh perceptron with L2-normalized output, its InfoNCE gradient,
and the EMA shadow ("mean net")."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

import numpy as np

from .errors import NumericalError
from .io import atomic_write_text

PARAM_NAMES = ("w1", "b1", "w2", "b2")


@dataclass
class EncoderParams:
    w1: np.ndarray  # (d_hidden, d_in)
    b1: np.ndarray  # (d_hidden,)
    w2: np.ndarray  # (d_out, d_hidden)
    b2: np.ndarray  # (d_out,)

    @classmethod
    def init(cls, d_in: int, d_hidden: int, d_out: int, rng: np.random.Generator) -> "EncoderParams":
        return cls(
            w1=rng.standard_normal((d_hidden, d_in)) / np.sqrt(d_in),
            b1=np.zeros(d_hidden),
            w2=rng.standard_normal((d_out, d_hidden)) / np.sqrt(d_hidden),
            b2=0.01 * rng.standard_normal(d_out),
        )

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.w1.shape[1], self.w1.shape[0], self.w2.shape[0]

    def arrays(self) -> Iterator[np.ndarray]:
        return (getattr(self, n) for n in PARAM_NAMES)

    def copy(self) -> "EncoderParams":
        return EncoderParams(*(a.copy() for a in self.arrays()))

    def zeros_like(self) -> "EncoderParams":
        return EncoderParams(*(np.zeros_like(a) for a in self.arrays()))

    def flat(self) -> np.ndarray:
        return np.concatenate([a.ravel() for a in self.arrays()])

    def norm(self) -> float:
        return float(np.linalg.norm(self.flat()))

    def __sub__(self, other: "EncoderParams") -> "EncoderParams":
        return EncoderParams(*(a - b for a, b in zip(self.arrays(), other.arrays())))


@dataclass
class MeanNet:
    params: EncoderParams
    alpha: float = 0.99

    @classmethod
    def from_encoder(cls, params: EncoderParams, alpha: float = 0.99) -> "MeanNet":
        if not 0 <= alpha < 1:
            raise ValueError(f"alpha must lie in [0, 1), got {alpha}")
        return cls(params.copy(), alpha)


@dataclass
class EmbeddingBatch:
    emb: np.ndarray
    indices: np.ndarray

    def __len__(self) -> int:
        return len(self.emb)


def _check_inputs(params: EncoderParams, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != params.w1.shape[1]:
        raise ValueError(f"expected inputs with {params.w1.shape[1]} columns, got shape {x.shape}")
    bad = ~np.isfinite(x).all(axis=1)
    if bad.any():
        raise NumericalError(f"non-finite input in row {int(np.flatnonzero(bad)[0])}")
    return x


def _forward(params: EncoderParams, x: np.ndarray):
    h = np.tanh(x @ params.w1.T + params.b1)
    z = h @ params.w2.T + params.b2
    n = np.linalg.norm(z, axis=1, keepdims=True)
    return h, z, n, z / n


def forward(params: EncoderParams, inputs: np.ndarray, indices: np.ndarray | None = None) -> EmbeddingBatch:
    x = _check_inputs(params, inputs)
    q = _forward(params, x)[3]
    if indices is None:
        indices = np.arange(len(x))
    return EmbeddingBatch(q, np.asarray(indices))


def info_nce(q: np.ndarray, positive_ids: np.ndarray, memory: np.ndarray, tau: float):
    """Mean InfoNCE over rows of ``q`` and its gradient w.r.t. ``q``."""
    logits = q @ memory.T / tau
    logits -= logits.max(axis=1, keepdims=True)
    logp = logits - np.log(np.exp(logits).sum(axis=1, keepdims=True))
    b = len(q)
    rows = np.arange(b)
    loss = -logp[rows, positive_ids].mean()
    dlogits = np.exp(logp)
    dlogits[rows, positive_ids] -= 1.0
    dq = dlogits @ memory / (tau * b)
    return float(loss), dq


def loss_and_grad(
    params: EncoderParams,
    batch_inputs: np.ndarray,
    positive_ids,
    memory,
    tau: float,
) -> tuple[float, EncoderParams, np.ndarray]:
    """InfoNCE against fixed cluster representations.

    ``memory`` is a MemoryBank or a (K, d_out) array; it is treated as constant.
    Returns ``(loss, grad, q)`` where ``q`` are the batch embeddings used.
    """
    reps = getattr(memory, "reps", memory)
    if tau <= 0:
        raise ValueError("tau must be > 0")
    x = _check_inputs(params, batch_inputs)
    if len(x) == 0:
        raise ValueError("empty batch")
    pos = np.asarray(positive_ids, dtype=np.int64)
    if pos.shape != (len(x),):
        raise ValueError("positive_ids must have one entry per batch row")
    if pos.min() < 0 or pos.max() >= len(reps):
        raise IndexError(f"positive id out of range [0, {len(reps)})")

    h, z, n, q = _forward(params, x)
    loss, dq = info_nce(q, pos, reps, tau)
    # Back through z / |z|.
    dz = (dq - q * np.sum(q * dq, axis=1, keepdims=True)) / n
    da = (dz @ params.w2) * (1.0 - h * h)
    grad = EncoderParams(w1=da.T @ x, b1=da.sum(axis=0), w2=dz.T @ h, b2=dz.sum(axis=0))
    return loss, grad, q


def sgd_step(params: EncoderParams, grad: EncoderParams, lr: float, weight_decay: float = 0.0) -> EncoderParams:
    """theta <- (1 - lr*wd) * theta - lr * grad."""
    if not lr >= 0:
        raise ValueError("lr must be >= 0")
    for name, g in zip(PARAM_NAMES, grad.arrays()):
        if not np.isfinite(g).all():
            raise NumericalError(f"non-finite gradient in {name}")
    shrink = 1.0 - lr * weight_decay
    return EncoderParams(*(shrink * p - lr * g for p, g in zip(params.arrays(), grad.arrays())))


def ema_update(mean: MeanNet, current: EncoderParams) -> MeanNet:
    a = mean.alpha
    new = []
    for m, c in zip(mean.params.arrays(), current.arrays()):
        if m.shape != c.shape:
            raise ValueError(f"shape mismatch {m.shape} vs {c.shape}")
        new.append(a * m + (1.0 - a) * c)
    return MeanNet(EncoderParams(*new), a)


def save_checkpoint(params: EncoderParams, path: str | Path) -> None:
    """Write ``<path>.json`` (shape manifest) and ``<path>.txt`` (17-digit decimals)."""
    path = Path(path)
    manifest = {"format": "dcct-mlp-v1", "tensors": []}
    lines = []
    for name, a in zip(PARAM_NAMES, params.arrays()):
        manifest["tensors"].append({"name": name, "shape": list(a.shape)})
        lines.extend("%.17g" % v for v in a.ravel())
    atomic_write_text(path.with_suffix(".json"), json.dumps(manifest, indent=2) + "\n")
    atomic_write_text(path.with_suffix(".txt"), "\n".join(lines) + "\n")


def load_checkpoint(path: str | Path) -> EncoderParams:
    path = Path(path)
    manifest = json.loads(path.with_suffix(".json").read_text())
    values = np.array([float(s) for s in path.with_suffix(".txt").read_text().split()])
    out, pos = {}, 0
    for t in manifest["tensors"]:
        size = int(np.prod(t["shape"])) if t["shape"] else 1
        out[t["name"]] = values[pos : pos + size].reshape(t["shape"])
        pos += size
    if pos != len(values):
        raise ValueError(f"checkpoint has {len(values)} values, manifest describes {pos}")
    return EncoderParams(**out)
