"""Dense float64 tensors with a reverse-mode tape and an adaptive-moment optimizer.

numpy supplies storage and kernels; differentiation is owned here.  Ops are
methods on Tape: each records (output, parents, backward closure).  backward()
replays records in reverse, which is a valid reverse-topological order because
outputs are always recorded after their parents.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class ShapeError(ValueError):
    pass


class Tensor:
    __slots__ = ("data",)

    def __init__(self, data):
        self.data = np.asarray(data, dtype=np.float64)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    def item(self) -> float:
        return float(self.data.reshape(()))

    def __repr__(self):
        return f"Tensor(shape={self.shape})"


@dataclass
class _Record:
    out: Tensor
    parents: tuple[Tensor, ...]
    backward: object  # callable: grad ndarray -> tuple of parent grads (or None)


class Tape:
    """Single-threaded recording context; one tape per forward pass."""

    def __init__(self):
        self._records: list[_Record] = []

    def __len__(self):
        return len(self._records)

    def record(self, out: Tensor, parents: tuple[Tensor, ...], backward) -> Tensor:
        self._records.append(_Record(out, parents, backward))
        return out

    # -- primitives ---------------------------------------------------------

    def matmul(self, a: Tensor, b: Tensor) -> Tensor:
        if a.data.ndim != 2 or b.data.ndim != 2 or a.shape[1] != b.shape[0]:
            raise ShapeError(f"matmul {a.shape} @ {b.shape}")
        out = Tensor(a.data @ b.data)

        def backward(g):
            return g @ b.data.T, a.data.T @ g

        return self.record(out, (a, b), backward)

    def add(self, a: Tensor, b: Tensor) -> Tensor:
        if a.shape != b.shape:
            raise ShapeError(f"add {a.shape} + {b.shape}")
        return self.record(Tensor(a.data + b.data), (a, b), lambda g: (g, g))

    def add_bias(self, m: Tensor, b: Tensor) -> Tensor:
        if m.data.ndim != 2 or b.data.ndim != 1 or m.shape[1] != b.shape[0]:
            raise ShapeError(f"add_bias {m.shape} + {b.shape}")
        return self.record(
            Tensor(m.data + b.data), (m, b), lambda g: (g, g.sum(axis=0))
        )

    def sub(self, a: Tensor, b: Tensor) -> Tensor:
        if a.shape != b.shape:
            raise ShapeError(f"sub {a.shape} - {b.shape}")
        return self.record(Tensor(a.data - b.data), (a, b), lambda g: (g, -g))

    def elementwise_mul(self, a: Tensor, b: Tensor) -> Tensor:
        if a.shape != b.shape:
            raise ShapeError(f"mul {a.shape} * {b.shape}")
        return self.record(
            Tensor(a.data * b.data), (a, b), lambda g: (g * b.data, g * a.data)
        )

    def scale(self, a: Tensor, c: float) -> Tensor:
        return self.record(Tensor(a.data * c), (a,), lambda g: (g * c,))

    def relu(self, a: Tensor) -> Tensor:
        mask = a.data > 0
        return self.record(Tensor(a.data * mask), (a,), lambda g: (g * mask,))

    def sigmoid(self, a: Tensor) -> Tensor:
        x = a.data
        s = np.where(x >= 0, 1.0 / (1.0 + np.exp(-np.abs(x))), np.exp(-np.abs(x)) / (1.0 + np.exp(-np.abs(x))))
        return self.record(Tensor(s), (a,), lambda g: (g * s * (1.0 - s),))

    def softplus(self, a: Tensor) -> Tensor:
        out = np.logaddexp(0.0, a.data)
        s = _sigmoid_np(a.data)
        return self.record(Tensor(out), (a,), lambda g: (g * s,))

    def square(self, a: Tensor) -> Tensor:
        return self.record(Tensor(a.data**2), (a,), lambda g: (2.0 * a.data * g,))

    def reduce_sum(self, a: Tensor, axis: int | None = None) -> Tensor:
        out = Tensor(a.data.sum(axis=axis))

        def backward(g):
            if axis is None:
                return (np.full(a.shape, float(g)),)
            return (np.broadcast_to(np.expand_dims(g, axis), a.shape).copy(),)

        return self.record(out, (a,), backward)

    def reduce_max_over_axis(self, a: Tensor, axis: int) -> Tensor:
        # argmax takes the first maximum: gradient ties route to the lowest index
        idx = np.argmax(a.data, axis=axis)
        out = Tensor(np.take_along_axis(a.data, np.expand_dims(idx, axis), axis).squeeze(axis))

        def backward(g):
            ga = np.zeros_like(a.data)
            np.put_along_axis(
                ga, np.expand_dims(idx, axis), np.expand_dims(g, axis), axis
            )
            return (ga,)

        return self.record(out, (a,), backward)

    def concat(self, parts: list[Tensor], axis: int) -> Tensor:
        out = Tensor(np.concatenate([p.data for p in parts], axis=axis))
        sizes = [p.shape[axis] for p in parts]
        offsets = np.cumsum(sizes)[:-1]

        def backward(g):
            return tuple(np.split(g, offsets, axis=axis))

        return self.record(out, tuple(parts), backward)

    def gather_rows(self, a: Tensor, idx: np.ndarray) -> Tensor:
        idx = np.asarray(idx, dtype=np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= a.shape[0]):
            raise ShapeError(f"gather index out of range for {a.shape[0]} rows")
        out = Tensor(a.data[idx])

        def backward(g):
            ga = np.zeros_like(a.data)
            np.add.at(ga, idx, g)
            return (ga,)

        return self.record(out, (a,), backward)

    def scatter_add_rows(self, src: Tensor, idx: np.ndarray, n_rows: int) -> Tensor:
        idx = np.asarray(idx, dtype=np.int64)
        out = np.zeros((n_rows,) + src.shape[1:])
        np.add.at(out, idx, src.data)
        return self.record(Tensor(out), (src,), lambda g: (g[idx],))

    def stack_rows(self, vecs: list[Tensor]) -> Tensor:
        out = Tensor(np.stack([v.data for v in vecs], axis=0))

        def backward(g):
            return tuple(g[i] for i in range(len(vecs)))

        return self.record(out, tuple(vecs), backward)

    def reshape(self, a: Tensor, shape: tuple[int, ...]) -> Tensor:
        out = Tensor(a.data.reshape(shape))
        return self.record(out, (a,), lambda g: (g.reshape(a.shape),))


def _sigmoid_np(x: np.ndarray) -> np.ndarray:
    return np.where(
        x >= 0,
        1.0 / (1.0 + np.exp(-np.abs(x))),
        np.exp(-np.abs(x)) / (1.0 + np.exp(-np.abs(x))),
    )


def backward(tape: Tape, loss: Tensor, store: "ParamStore") -> dict[str, np.ndarray]:
    """Reverse-mode gradients of a recorded scalar for every store parameter.

    Parameters not reachable from the loss get zero gradients.
    """
    if loss.data.size != 1:
        raise ShapeError(f"loss must be scalar, got shape {loss.shape}")
    recorded = any(rec.out is loss for rec in tape._records)
    if not recorded:
        raise ValueError("loss was not recorded on this tape")
    grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
    for rec in reversed(tape._records):
        g = grads.pop(id(rec.out), None)
        if g is None:
            continue
        parent_grads = rec.backward(g)
        for parent, pg in zip(rec.parents, parent_grads):
            if pg is None:
                continue
            acc = grads.get(id(parent))
            if acc is None:
                grads[id(parent)] = pg.copy() if pg is g else pg
            else:
                acc += pg
    return {
        name: grads.get(id(t), np.zeros_like(t.data))
        for name, t in store.params.items()
    }


# ---------------------------------------------------------------------------
# Parameters and the optimizer
# ---------------------------------------------------------------------------


@dataclass
class _AdamState:
    m: np.ndarray
    v: np.ndarray
    step: int = 0


class ParamStore:
    """Named parameter tensors with per-parameter optimizer state."""

    def __init__(self):
        self.params: dict[str, Tensor] = {}
        self._state: dict[str, _AdamState] = {}

    def add(self, name: str, value: np.ndarray) -> Tensor:
        if name in self.params:
            raise ValueError(f"duplicate parameter {name}")
        t = Tensor(np.array(value, dtype=np.float64))
        self.params[name] = t
        self._state[name] = _AdamState(np.zeros_like(t.data), np.zeros_like(t.data))
        return t

    def __getitem__(self, name: str) -> Tensor:
        return self.params[name]

    def names(self) -> list[str]:
        return list(self.params)

    def values_copy(self) -> dict[str, np.ndarray]:
        return {k: v.data.copy() for k, v in self.params.items()}

    def load_values(self, values: dict[str, np.ndarray]) -> None:
        for name, arr in values.items():
            t = self.params.get(name)
            if t is None:
                raise KeyError(f"unknown parameter {name}")
            if t.data.shape != arr.shape:
                raise ShapeError(f"{name}: shape {arr.shape} != {t.data.shape}")
            t.data[...] = arr

    def checksum(self) -> float:
        return float(sum(np.abs(v.data).sum() for v in self.params.values()))


def uniform_init(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int) -> np.ndarray:
    bound = 1.0 / math.sqrt(max(fan_in, 1))
    return rng.uniform(-bound, bound, size=shape)


def adam_step(
    store: ParamStore,
    grads: dict[str, np.ndarray],
    lr: float = 1e-3,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> None:
    for name, g in grads.items():
        t = store.params[name]
        if g.shape != t.data.shape:
            raise ShapeError(f"{name}: grad shape {g.shape} != {t.data.shape}")
        st = store._state[name]
        st.step += 1
        st.m = beta1 * st.m + (1.0 - beta1) * g
        st.v = beta2 * st.v + (1.0 - beta2) * g * g
        m_hat = st.m / (1.0 - beta1**st.step)
        v_hat = st.v / (1.0 - beta2**st.step)
        t.data -= lr * m_hat / (np.sqrt(v_hat) + eps)
