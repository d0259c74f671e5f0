"""Dense tensors and the reverse-mode tape.

Ops record themselves on the tape that is active in the current context
(`with Tape() as tape:`). Outside a tape, or inside `no_grad()`, ops only
compute values. A tensor's node id is meaningful only for the tape that
produced it; leaves with ``requires_grad`` are registered lazily the first
time an op on the active tape consumes them.
"""

from __future__ import annotations

from collections.abc import Callable, Iterator, Sequence
from contextlib import contextmanager
from contextvars import ContextVar, Token
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from numpy.typing import DTypeLike, NDArray

from jafar.models.error_model import DoubleBackward, NonScalarLoss, ShapeMismatch

type Array = NDArray[np.floating[Any]]
type BackwardFn = Callable[[Array], Sequence[Array | None]]

MAX_RANK = 4

_active_tape: ContextVar[Tape | None] = ContextVar("active_tape", default=None)


class Tensor:
    __slots__ = ("_tape", "data", "grad", "name", "node_id", "requires_grad")

    def __init__(
        self,
        data: Any,
        *,
        requires_grad: bool = False,
        dtype: DTypeLike | None = None,
        name: str | None = None,
    ) -> None:
        arr = np.asarray(data)

        if dtype is not None:
            arr = arr.astype(dtype, copy=False)

        elif not np.issubdtype(arr.dtype, np.floating):
            arr = arr.astype(np.float32)

        if arr.ndim > MAX_RANK:
            raise ShapeMismatch(f"tensor rank {arr.ndim} exceeds {MAX_RANK}")

        self.data: Array = arr
        self.requires_grad: bool = requires_grad
        self.node_id: int | None = None
        self.grad: Array | None = None
        self.name: str | None = name
        self._tape: Tape | None = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return int(self.data.size)

    @property
    def dtype(self) -> np.dtype[Any]:
        return self.data.dtype

    def numpy(self) -> Array:
        return self.data

    def item(self) -> float:
        return float(self.data.reshape(-1)[0])

    def detach(self) -> Tensor:
        return Tensor(self.data, dtype=self.data.dtype)

    def astype(self, dtype: DTypeLike) -> Tensor:
        return Tensor(
            self.data.astype(dtype),
            requires_grad=self.requires_grad,
            name=self.name,
        )

    def __repr__(self) -> str:
        label: str = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, dtype={self.dtype}{label})"

    # operators delegate to jafar.core.ops (imported lazily to avoid a cycle)
    def __add__(self, other: Tensor | float) -> Tensor:
        from jafar.core import ops

        return ops.elementwise(self, other, "add")

    def __radd__(self, other: float) -> Tensor:
        return self.__add__(other)

    def __sub__(self, other: Tensor | float) -> Tensor:
        from jafar.core import ops

        return ops.elementwise(self, other, "sub")

    def __rsub__(self, other: float) -> Tensor:
        from jafar.core import ops

        return ops.elementwise(ops.elementwise(self, -1.0, "mul"), other, "add")

    def __mul__(self, other: Tensor | float) -> Tensor:
        from jafar.core import ops

        return ops.elementwise(self, other, "mul")

    def __rmul__(self, other: float) -> Tensor:
        return self.__mul__(other)

    def __truediv__(self, other: Tensor | float) -> Tensor:
        from jafar.core import ops

        return ops.elementwise(self, other, "div")

    def __neg__(self) -> Tensor:
        from jafar.core import ops

        return ops.elementwise(self, -1.0, "mul")

    def __matmul__(self, other: Tensor) -> Tensor:
        from jafar.core import ops

        return ops.matmul(self, other)


@dataclass(slots=True)
class Node:
    op: str
    inputs: tuple[int | None, ...]
    backward: BackwardFn | None = None
    leaf: Tensor | None = None


@dataclass
class Tape:
    nodes: list[Node] = field(default_factory=list)
    gradients: dict[int, Array] = field(default_factory=dict)

    _leaf_ids: dict[int, int] = field(default_factory=dict)
    _done: bool = False
    _token: Token[Tape | None] | None = None

    def __enter__(self) -> Tape:
        self._token = _active_tape.set(self)
        return self

    def __exit__(self, *_: object) -> None:
        if self._token is not None:
            _active_tape.reset(self._token)
            self._token = None

    @staticmethod
    def current() -> Tape | None:
        return _active_tape.get()

    def node_of(self, t: Tensor) -> int | None:
        if t._tape is self:
            return t.node_id

        if not t.requires_grad:
            return None

        key: int = id(t)
        found: int | None = self._leaf_ids.get(key)

        if found is None:
            found = len(self.nodes)
            self.nodes.append(Node(op="leaf", inputs=(), leaf=t))
            self._leaf_ids[key] = found

        return found

    def record(
        self,
        op: str,
        inputs: Sequence[Tensor],
        out: Array,
        backward: BackwardFn,
    ) -> Tensor:
        ids: tuple[int | None, ...] = tuple(self.node_of(x) for x in inputs)
        result: Tensor = Tensor(out, dtype=out.dtype)

        if all(i is None for i in ids):
            return result

        result.node_id = len(self.nodes)
        result._tape = self
        self.nodes.append(Node(op=op, inputs=ids, backward=backward))

        return result

    def backward(self, loss: Tensor) -> dict[int, Array]:
        if self._done:
            raise DoubleBackward("tape already back-propagated; call reset() first")

        if loss.size != 1:
            raise NonScalarLoss(f"loss must be scalar, got shape {loss.shape}")

        grads: dict[int, Array] = {}

        if loss._tape is self and loss.node_id is not None:
            grads[loss.node_id] = np.ones_like(loss.data)

        for nid in range(len(self.nodes) - 1, -1, -1):
            node: Node = self.nodes[nid]
            g: Array | None = grads.get(nid)

            if g is None or node.backward is None:
                continue

            for inp, ig in zip(node.inputs, node.backward(g), strict=True):
                if inp is None or ig is None:
                    continue

                prev: Array | None = grads.get(inp)
                grads[inp] = ig if prev is None else prev + ig

            del grads[nid]

        for nid, node in enumerate(self.nodes):
            if node.leaf is None:
                continue

            leaf_grad: Array = grads.get(nid, np.zeros_like(node.leaf.data))
            node.leaf.grad = leaf_grad
            self.gradients[nid] = leaf_grad

        self._done = True

        return self.gradients

    def grad(self, t: Tensor) -> Array:
        nid: int | None = self._leaf_ids.get(id(t))

        if nid is None or nid not in self.gradients:
            return np.zeros_like(t.data)

        return self.gradients[nid]

    def reset(self) -> None:
        self.nodes.clear()
        self.gradients.clear()
        self._leaf_ids.clear()
        self._done = False


def backward(tape: Tape, loss: Tensor) -> dict[int, Array]:
    return tape.backward(loss)


@contextmanager
def no_grad() -> Iterator[None]:
    token: Token[Tape | None] = _active_tape.set(None)

    try:
        yield

    finally:
        _active_tape.reset(token)


def record(
    op: str,
    inputs: Sequence[Tensor],
    out: Array,
    backward_fn: BackwardFn,
) -> Tensor:
    tape: Tape | None = Tape.current()

    if tape is None:
        return Tensor(out, dtype=out.dtype)

    return tape.record(op, inputs, out, backward_fn)


def as_tensor(value: Tensor | Array, dtype: DTypeLike | None = None) -> Tensor:
    if isinstance(value, Tensor):
        return value

    return Tensor(value, dtype=dtype)
