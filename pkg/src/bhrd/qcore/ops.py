"""Circuit operations and the tensor kernel that applies them.

States are held as complex tensors of shape ``(2,) * n`` with an optional
trailing batch axis; wire ``w`` is tensor axis ``w``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence, Union

import numpy as np


@dataclass(frozen=True, eq=False)
class Gate:
    matrix: np.ndarray
    wires: tuple[int, ...]

    def __post_init__(self):
        k = len(self.wires)
        if self.matrix.shape != (1 << k, 1 << k):
            raise ValueError(
                f"gate of shape {self.matrix.shape} does not act on {k} wires"
            )
        if len(set(self.wires)) != k:
            raise ValueError(f"repeated wires {self.wires}")


@dataclass(frozen=True, eq=False)
class Select:
    """Block-diagonal operation sum_r |r><r| (x) U_r.

    ``branches[r]`` is the op sequence for control value ``r`` (controls[0] is
    the most significant bit). Control wires are never touched by a branch.
    """

    controls: tuple[int, ...]
    branches: tuple[tuple["Op", ...], ...]

    def __post_init__(self):
        if len(self.branches) != 1 << len(self.controls):
            raise ValueError("need one branch per control value")
        ctrl = set(self.controls)
        for branch in self.branches:
            for op in branch:
                if ctrl & set(op_wires(op)):
                    raise ValueError("branch acts on a control wire")


Op = Union[Gate, Select]


def op_wires(op: Op) -> set[int]:
    if isinstance(op, Gate):
        return set(op.wires)
    ws = set(op.controls)
    for branch in op.branches:
        for sub in branch:
            ws |= op_wires(sub)
    return ws


def adjoint(ops: Sequence[Op]) -> tuple[Op, ...]:
    out: list[Op] = []
    for op in reversed(ops):
        if isinstance(op, Gate):
            out.append(Gate(op.matrix.conj().T, op.wires))
        else:
            out.append(Select(op.controls, tuple(adjoint(b) for b in op.branches)))
    return tuple(out)


def remap(ops: Sequence[Op], mapping: Mapping[int, int] | Sequence[int]) -> tuple[Op, ...]:
    out: list[Op] = []
    for op in ops:
        if isinstance(op, Gate):
            out.append(Gate(op.matrix, tuple(mapping[w] for w in op.wires)))
        else:
            out.append(
                Select(
                    tuple(mapping[w] for w in op.controls),
                    tuple(remap(b, mapping) for b in op.branches),
                )
            )
    return tuple(out)


def apply_gate(psi: np.ndarray, matrix: np.ndarray, wires: Sequence[int]) -> np.ndarray:
    k = len(wires)
    g = matrix.reshape((2,) * (2 * k))
    out = np.tensordot(g, psi, axes=(tuple(range(k, 2 * k)), tuple(wires)))
    return np.moveaxis(out, tuple(range(k)), tuple(wires))


def _apply_select(psi: np.ndarray, op: Select) -> np.ndarray:
    out = np.empty_like(psi)
    c = len(op.controls)
    for r, branch in enumerate(op.branches):
        idx: list = [slice(None)] * psi.ndim
        for j, w in enumerate(op.controls):
            bit = (r >> (c - 1 - j)) & 1
            idx[w] = slice(bit, bit + 1)
        key = tuple(idx)
        out[key] = apply_ops(psi[key], branch)
    return out


def apply_ops(psi: np.ndarray, ops: Sequence[Op]) -> np.ndarray:
    for op in ops:
        if isinstance(op, Gate):
            psi = apply_gate(psi, op.matrix, op.wires)
        else:
            psi = _apply_select(psi, op)
    return psi


def ops_unitary(ops: Sequence[Op], n: int) -> np.ndarray:
    """Dense matrix of an op sequence on ``n`` wires."""
    dim = 1 << n
    basis = np.eye(dim, dtype=complex).reshape((2,) * n + (dim,))
    return apply_ops(basis, ops).reshape(dim, dim)
