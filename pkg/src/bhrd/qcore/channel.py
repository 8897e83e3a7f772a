"""CPTP channels in dilated form: zero-initialized ancillas, a unitary circuit, discarded wires.

Dilation wires ``0 .. n_in-1`` are the channel input, ``n_in .. n_in+n_anc-1``
the ancillas. ``out`` lists the kept wires in output order; every other wire
is discarded (traced out).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np

from . import gates
from .ops import Gate, Op, Select, apply_ops, op_wires, ops_unitary, remap
from .state import (
    ATOL_SPECTRAL,
    MAX_PURE_QUBITS,
    LayoutError,
    PureState,
    RegisterLayout,
    SizeLimitError,
    as_matrix,
)


class ChannelError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Channel:
    n_in: int
    n_anc: int
    ops: tuple[Op, ...]
    out: tuple[int, ...]

    def __post_init__(self):
        total = self.n_in + self.n_anc
        if len(set(self.out)) != len(self.out) or any(not 0 <= w < total for w in self.out):
            raise ChannelError(f"bad output wires {self.out} for {total} dilation wires")
        for op in self.ops:
            if any(not 0 <= w < total for w in op_wires(op)):
                raise ChannelError("operation touches a wire outside the dilation")

    @property
    def width(self) -> int:
        return self.n_in + self.n_anc

    @property
    def n_out(self) -> int:
        return len(self.out)

    @property
    def discarded(self) -> tuple[int, ...]:
        kept = set(self.out)
        return tuple(w for w in range(self.width) if w not in kept)

    def unitary(self) -> np.ndarray:
        return ops_unitary(self.ops, self.width)

    def validate(self, atol: float = ATOL_SPECTRAL) -> None:
        u = self.unitary()
        if not np.allclose(u.conj().T @ u, np.eye(u.shape[0]), atol=atol):
            raise ChannelError("dilation is not unitary")

    def isometry(self) -> np.ndarray:
        """Tensor of shape (2,)*width + (2**n_in,): the dilation applied to every input basis state."""
        dim_in = 1 << self.n_in
        basis = np.zeros((2,) * self.width + (dim_in,), dtype=complex)
        flat = basis.reshape(1 << self.n_in, 1 << self.n_anc, dim_in)
        flat[np.arange(dim_in), 0, np.arange(dim_in)] = 1.0
        return apply_ops(basis, self.ops)

    def kraus(self, atol: float = 1e-14) -> list[np.ndarray]:
        """Operator-sum form: one Kraus operator per discarded basis state."""
        v = self.isometry()
        order = list(self.out) + list(self.discarded) + [self.width]
        v = np.transpose(v, order).reshape(1 << self.n_out, 1 << len(self.discarded), 1 << self.n_in)
        ks = [v[:, j, :] for j in range(v.shape[1])]
        return [k for k in ks if np.abs(k).max() > atol]

    def apply_to_density(self, rho) -> np.ndarray:
        rho = as_matrix(rho)
        return sum(k @ rho @ k.conj().T for k in self.kraus())


def identity_channel(n: int) -> Channel:
    return Channel(n, 0, (), tuple(range(n)))


def discard_and_prepare(n: int) -> Channel:
    """Replacement channel: discard the input, output |0...0>."""
    return Channel(n, n, (), tuple(range(n, 2 * n)))


def apply_channel(
    state: PureState,
    channel: Channel,
    source: str | Sequence[int],
    target: str | Mapping[str, int],
) -> PureState:
    """Apply ``channel`` to the ``source`` wires, keeping the purification.

    The source register is destroyed and ``target`` created from the kept
    wires. Discarded wires stay in the global state under hidden register
    names starting with ``~`` so reduced densities remain exact.
    """
    src = state.layout.resolve(source)
    if len(src) != channel.n_in:
        raise ChannelError(f"source width {len(src)} != channel input width {channel.n_in}")
    n_old = state.n
    n_new = n_old + channel.n_anc
    if n_new > MAX_PURE_QUBITS:
        raise SizeLimitError(f"{n_new} qubits exceeds the pure-state limit {MAX_PURE_QUBITS}")
    psi = state.tensor
    if channel.n_anc:
        anc = np.zeros(1 << channel.n_anc, dtype=complex)
        anc[0] = 1.0
        psi = np.multiply.outer(psi, anc.reshape((2,) * channel.n_anc))
    mapping = list(src) + list(range(n_old, n_new))
    psi = apply_ops(psi, remap(channel.ops, mapping))

    src_set = set(src)
    regs: dict[str, tuple[int, ...]] = {}
    for name, wires in state.layout.registers.items():
        keep = tuple(w for w in wires if w not in src_set)
        if keep:
            regs[name] = keep
    out_global = [mapping[w] for w in channel.out]
    if isinstance(target, str):
        target = {target: len(out_global)}
    if sum(target.values()) != len(out_global):
        raise ChannelError(f"target widths {dict(target)} do not cover {len(out_global)} output wires")
    pos = 0
    for name, width in target.items():
        if name in regs:
            raise LayoutError(f"target register {name!r} already exists")
        regs[name] = tuple(out_global[pos:pos + width])
        pos += width
    used = set(w for ws in regs.values() for w in ws)
    k = sum(1 for name in regs if name.startswith("~"))
    for w in range(n_new):
        if w not in used:
            regs[f"~{k}"] = (w,)
            k += 1
    return PureState(RegisterLayout(regs, n_new), psi.reshape(-1))


def prepare(channel: Channel, target: Mapping[str, int]) -> PureState:
    """Output of a zero-input channel, kept wires named by ``target`` and discarded wires hidden."""
    if channel.n_in:
        raise ChannelError("prepare needs a channel without inputs")
    empty = PureState(RegisterLayout({}, 0), np.ones(1, dtype=complex))
    return apply_channel(empty, channel, (), target)


def align_outputs(channel: Channel) -> tuple[Op, ...]:
    """Ops of a zero-input channel followed by swaps that move its outputs onto wires 0..n_out-1."""
    ops = list(channel.ops)
    where = list(range(channel.width))  # where[w] = current position of original wire w
    at = list(range(channel.width))  # at[p] = original wire now at position p
    for i, w in enumerate(channel.out):
        p = where[w]
        if p != i:
            ops.append(Gate(gates.SWAP, (i, p)))
            other = at[i]
            at[i], at[p] = w, other
            where[w], where[other] = i, p
    return tuple(ops)


class ChannelBuilder:
    """Incrementally assemble a dilated channel.

    Wires are allocated as inputs or ancillas in any order; ``build`` renumbers
    them so inputs come first.
    """

    def __init__(self):
        self._kind: list[str] = []
        self._ops: list[Op] = []

    def _alloc(self, kind: str, k: int) -> list[int]:
        start = len(self._kind)
        self._kind.extend([kind] * k)
        return list(range(start, start + k))

    def inputs(self, k: int = 1) -> list[int]:
        return self._alloc("in", k)

    def ancillas(self, k: int = 1) -> list[int]:
        return self._alloc("anc", k)

    def ancilla(self) -> int:
        return self._alloc("anc", 1)[0]

    def gate(self, matrix: np.ndarray, *wires: int) -> "ChannelBuilder":
        self._ops.append(Gate(np.asarray(matrix, dtype=complex), tuple(wires)))
        return self

    def h(self, *wires: int) -> "ChannelBuilder":
        for w in wires:
            self.gate(gates.H, w)
        return self

    def x(self, *wires: int) -> "ChannelBuilder":
        for w in wires:
            self.gate(gates.X, w)
        return self

    def cnot(self, control: int, target: int) -> "ChannelBuilder":
        return self.gate(gates.CNOT, control, target)

    def cz(self, a: int, b: int) -> "ChannelBuilder":
        return self.gate(gates.CZ, a, b)

    def mcx(self, controls: Sequence[int], target: int, values: Sequence[int] | None = None) -> "ChannelBuilder":
        return self.gate(gates.mcx(len(controls), values), *controls, target)

    def epr(self, a: int, b: int) -> "ChannelBuilder":
        return self.h(a).cnot(a, b)

    def coin(self, wire: int, purifier: int) -> "ChannelBuilder":
        """Uniform classical bit on ``wire`` (its copy on ``purifier`` is discarded)."""
        return self.h(wire).cnot(wire, purifier)

    def ops(self, ops: Sequence[Op], wires: Sequence[int]) -> "ChannelBuilder":
        self._ops.extend(remap(ops, list(wires)))
        return self

    def select(self, controls: Sequence[int], branches: Sequence[Sequence[Op]]) -> "ChannelBuilder":
        self._ops.append(Select(tuple(controls), tuple(tuple(b) for b in branches)))
        return self

    def append(self, channel: Channel, wires: Sequence[int]) -> list[int]:
        """Run ``channel`` on ``wires``; returns the builder wires holding its output."""
        if len(wires) != channel.n_in:
            raise ChannelError(f"{len(wires)} wires given to a {channel.n_in}-input channel")
        mapping = list(wires) + self.ancillas(channel.n_anc)
        self._ops.extend(remap(channel.ops, mapping))
        return [mapping[w] for w in channel.out]

    def build(self, out: Sequence[int]) -> Channel:
        ins = [w for w, k in enumerate(self._kind) if k == "in"]
        ancs = [w for w, k in enumerate(self._kind) if k == "anc"]
        perm = {w: i for i, w in enumerate(ins + ancs)}
        return Channel(
            len(ins), len(ancs), remap(self._ops, perm), tuple(perm[w] for w in out)
        )


@dataclass(frozen=True, eq=False)
class Distinguisher:
    """A channel with a single output qubit read in the computational basis."""

    channel: Channel

    def __post_init__(self):
        if self.channel.n_out != 1:
            raise ChannelError("a distinguisher outputs exactly one qubit")

    @property
    def n_in(self) -> int:
        return self.channel.n_in

    @cached_property
    def operator(self) -> np.ndarray:
        """The POVM element O with Pr[output 1] = Tr[O rho]."""
        v = self.channel.isometry()
        idx = [slice(None)] * v.ndim
        idx[self.channel.out[0]] = 1
        m = v[tuple(idx)].reshape(-1, 1 << self.n_in)
        return m.conj().T @ m

    def validate(self, atol: float = ATOL_SPECTRAL) -> None:
        ev = np.linalg.eigvalsh(self.operator)
        if ev.min() < -atol or ev.max() > 1 + atol:
            raise ChannelError("induced operator is not between 0 and I")

    def negated(self) -> "Distinguisher":
        b = ChannelBuilder()
        ins = b.inputs(self.n_in)
        (o,) = b.append(self.channel, ins)
        b.x(o)
        return Distinguisher(b.build([o]))


def constant_distinguisher(n_in: int, value: int = 0) -> Distinguisher:
    b = ChannelBuilder()
    b.inputs(n_in)
    o = b.ancilla()
    if value:
        b.x(o)
    return Distinguisher(b.build([o]))


def computational_distinguisher(n_in: int = 1, wire: int = 0) -> Distinguisher:
    """Outputs the computational-basis value of input wire ``wire``."""
    b = ChannelBuilder()
    ins = b.inputs(n_in)
    o = b.ancilla()
    b.cnot(ins[wire], o)
    return Distinguisher(b.build([o]))


def projector_distinguisher(projector: np.ndarray, atol: float = 1e-9) -> Distinguisher:
    """Two-outcome measurement {I - P, P} for an orthogonal projector P, dilated with one ancilla."""
    p = np.asarray(projector, dtype=complex)
    dim = p.shape[0]
    n = dim.bit_length() - 1
    w, v = np.linalg.eigh((p + p.conj().T) / 2)
    accept = w > 0.5
    if not np.allclose(w, np.round(w), atol=atol):
        raise ChannelError("not a projector")
    # v^dagger rotates the eigenbasis onto the computational basis
    b = ChannelBuilder()
    ins = b.inputs(n)
    o = b.ancilla()
    rot = v.conj().T
    b.gate(rot, *ins)
    b.gate(gates.permutation(lambda i: accept[i], n), *ins, o)
    return Distinguisher(b.build([o]))


def random_unitary(dim: int, rng) -> np.ndarray:
    """Haar-random unitary via QR of a complex Ginibre matrix."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_channel(n_in: int, n_anc: int, n_out: int, rng) -> Channel:
    """Haar-random dilation; the first ``n_out`` ancillas (or wires) are kept."""
    width = n_in + n_anc
    u = random_unitary(1 << width, rng)
    out = tuple(range(n_in, n_in + n_out)) if n_anc >= n_out else tuple(range(n_out))
    return Channel(n_in, n_anc, (Gate(u, tuple(range(width))),), out)


def random_distinguisher(n_in: int, n_anc: int, rng) -> Distinguisher:
    return Distinguisher(random_channel(n_in, max(n_anc, 1), 1, rng))
