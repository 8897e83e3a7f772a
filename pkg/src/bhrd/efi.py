"""State-pair ensembles (EFI candidates), optimal distinguishing, and the EFI to radiation-instance construction.

Each side of a pair is a zero-input generator channel whose outputs are a
purifying register H followed by the sample register R'. Any wire the
generator discards is treated as part of H.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Optional

import numpy as np

from .decoding import RadiationDecoder, RadiationInstance
from .qcore import (
    MAX_PURE_QUBITS,
    PureState,
    RegisterLayout,
    Channel,
    ChannelBuilder,
    ChannelError,
    DensityMatrix,
    Distinguisher,
    Op,
    SizeLimitError,
    advantage,
    align_outputs,
    apply_ops,
    gates,
    helstrom_projector,
    probabilities,
    projector_distinguisher,
    reduced_density,
    trace_distance,
)
from .qcore.ops import remap


@dataclass(eq=False)
class StatePairEnsemble:
    gens: tuple[Channel, Channel]
    h: int
    r: int
    lam: int = 0
    name: str = "custom"
    adversary_class: Optional[str] = None  # declared only; never checked

    def __post_init__(self):
        for g in self.gens:
            if g.n_in != 0:
                raise ChannelError("pair generators take no input")
            if g.n_out != self.h + self.r:
                raise ChannelError(f"generator outputs {g.n_out} wires, expected {self.h + self.r}")

    @property
    def width(self) -> int:
        """Dilation width shared by both sides once aligned (H, R', then junk)."""
        return max(g.width for g in self.gens)

    @property
    def purifier_width(self) -> int:
        return self.width - self.r

    def aligned(self, b: int) -> tuple[Op, ...]:
        """Ops on ``width`` wires leaving H on 0..h-1 and R' on h..h+r-1."""
        return align_outputs(self.gens[b])

    def sample_wires(self) -> tuple[int, ...]:
        return tuple(range(self.h, self.h + self.r))

    def purifier_wires(self) -> tuple[int, ...]:
        return tuple(range(self.h)) + tuple(range(self.h + self.r, self.width))

    def pure(self, b: int) -> PureState:
        psi = np.zeros((2,) * self.width, dtype=complex)
        psi[(0,) * self.width] = 1.0
        psi = apply_ops(psi, self.aligned(b))
        layout = RegisterLayout(
            {"H": self.purifier_wires(), "R'": self.sample_wires()}, self.width
        )
        return PureState(layout, psi.reshape(-1))

    @cached_property
    def densities(self) -> tuple[DensityMatrix, DensityMatrix]:
        return tuple(reduced_density(self.pure(b), "R'") for b in (0, 1))

    def density(self, b: int) -> DensityMatrix:
        return self.densities[b]


def perfect_pair() -> StatePairEnsemble:
    """(|0>, |1>)."""
    gens = []
    for flip in (0, 1):
        b = ChannelBuilder()
        w = b.ancilla()
        if flip:
            b.x(w)
        gens.append(b.build([w]))
    return StatePairEnsemble(tuple(gens), 0, 1, name="perfect")


def theta_pair(theta: float) -> StatePairEnsemble:
    """(|0>, cos t |0> + sin t |1>); statistical distance sin t for t in [0, pi/2]."""
    gens = []
    for angle in (0.0, 2 * theta):
        b = ChannelBuilder()
        w = b.ancilla()
        if angle:
            b.gate(gates.ry(angle), w)
        gens.append(b.build([w]))
    return StatePairEnsemble(tuple(gens), 0, 1, name=f"theta({theta!r})")


def identical_pair() -> StatePairEnsemble:
    return theta_pair(0.0)


def keyed_pair() -> StatePairEnsemble:
    """A uniformly random key k in H; the sample is |k, k xor b>. Distance 1, each half alone is mixed."""
    gens = []
    for flip in (0, 1):
        b = ChannelBuilder()
        k, r0, r1 = b.ancillas(3)
        b.h(k).cnot(k, r0).cnot(k, r1)
        if flip:
            b.x(r1)
        gens.append(b.build([k, r0, r1]))
    return StatePairEnsemble(tuple(gens), 1, 2, name="keyed")


PAIR_FAMILIES = {
    "perfect": lambda **_: perfect_pair(),
    "theta": lambda theta=math.pi / 6, **_: theta_pair(theta),
    "identical": lambda **_: identical_pair(),
    "keyed": lambda **_: keyed_pair(),
}


def pair_by_name(name: str, **params) -> StatePairEnsemble:
    try:
        factory = PAIR_FAMILIES[name]
    except KeyError:
        raise ValueError(f"unknown pair family {name!r}; known: {sorted(PAIR_FAMILIES)}") from None
    return factory(**params)


# --------------------------------------------------------------------------- distinguishing


def statistical_distance(pair: StatePairEnsemble) -> float:
    return trace_distance(pair.density(0), pair.density(1))


def helstrom_distinguisher(pair: StatePairEnsemble) -> Distinguisher:
    return projector_distinguisher(helstrom_projector(pair.density(0), pair.density(1)))


def pair_advantage(d: Distinguisher, pair: StatePairEnsemble) -> float:
    return advantage(d, pair.density(0), pair.density(1))


def guess_game(d: Distinguisher, pair: StatePairEnsemble) -> float:
    """Exact Pr[d guesses b] when b is a uniform coin and the sample is drawn from side b."""
    if d.n_in != pair.r:
        raise ChannelError(f"distinguisher reads {d.n_in} qubits, samples have {pair.r}")
    b = ChannelBuilder()
    coin, purifier = b.ancillas(2)
    gen = b.ancillas(pair.width)
    b.coin(coin, purifier)
    b.select([coin], [remap(pair.aligned(0), gen), remap(pair.aligned(1), gen)])
    (o,) = b.append(d.channel, [gen[w] for w in pair.sample_wires()])
    ch = b.build([coin, o])
    psi = np.zeros((2,) * ch.width, dtype=complex)
    psi[(0,) * ch.width] = 1.0
    psi = apply_ops(psi, ch.ops)
    st = PureState(RegisterLayout({"all": tuple(range(ch.width))}, ch.width), psi.reshape(-1))
    p = probabilities(st, list(ch.out))
    return float(p[0] + p[3])


def primed_densities(pair: StatePairEnsemble) -> tuple[np.ndarray, np.ndarray]:
    """(I/2 (x) rho_0,  1/2 sum_b |b><b| (x) rho_b) over a leading bit register."""
    r0, r1 = pair.density(0).matrix, pair.density(1).matrix
    e0 = np.diag([1.0, 0.0])
    e1 = np.diag([0.0, 1.0])
    return np.kron(np.eye(2) / 2, r0), (np.kron(e0, r0) + np.kron(e1, r1)) / 2


def hybrid_lift(dprime: Distinguisher) -> Distinguisher:
    """Distinguisher for the base pair: put a fresh bit in |1> in front of the sample and run ``dprime``."""
    if dprime.n_in < 1:
        raise ChannelError("the primed distinguisher reads a bit register and a sample")
    b = ChannelBuilder()
    s = b.inputs(dprime.n_in - 1)
    bit = b.ancilla()
    b.x(bit)
    (o,) = b.append(dprime.channel, [bit] + s)
    return Distinguisher(b.build([o]))


def equality_distinguisher(width: int = 1) -> Distinguisher:
    """Reads (bit, sample) and outputs 1 iff the bit equals the first sample qubit."""
    b = ChannelBuilder()
    bit, *s = b.inputs(1 + width)
    o = b.ancilla()
    b.cnot(bit, o).cnot(s[0], o).x(o)
    return Distinguisher(b.build([o]))


def repeat_pair(pair: StatePairEnsemble, k: int) -> StatePairEnsemble:
    """k independent copies per sample."""
    if k < 1:
        raise ValueError("k must be at least 1")
    if k * pair.width > MAX_PURE_QUBITS:
        raise SizeLimitError(f"{k} copies need {k * pair.width} qubits")
    gens = []
    for side in (0, 1):
        b = ChannelBuilder()
        hs, rs = [], []
        for _ in range(k):
            w = b.ancillas(pair.width)
            b.ops(pair.aligned(side), w)
            hs += [w[i] for i in pair.purifier_wires()]
            rs += [w[i] for i in pair.sample_wires()]
        gens.append(b.build(hs + rs))
    return StatePairEnsemble(
        tuple(gens), k * pair.purifier_width, k * pair.r, pair.lam, f"{pair.name}^{k}", pair.adversary_class
    )


# --------------------------------------------------------------------------- EFI -> radiation instance


def bhrd_from_efi(pair: StatePairEnsemble, hybrid: int = 0, lam: int = 0) -> RadiationInstance:
    """Radiation instance hiding B's partner T under a Pauli mask whose key bits select the pair samples.

    Slot 1 holds a sample of side x and slot 2 a sample of side z, where
    (x, z) is the mask key held in H'. Hybrid 1 fixes slot 2 to side 0;
    hybrid 2 fixes both slots.
    """
    if hybrid not in (0, 1, 2):
        raise ValueError(f"hybrid index must be 0, 1 or 2, got {hybrid}")
    total = 4 + 2 * pair.width
    if total > MAX_PURE_QUBITS:
        raise SizeLimitError(f"instance needs {total} qubits")
    b = ChannelBuilder()
    hx, hz = b.ancillas(2)
    slot1 = b.ancillas(pair.width)
    slot2 = b.ancillas(pair.width)
    bw, t = b.ancillas(2)
    b.epr(bw, t).h(hx, hz)
    b.cz(hz, t).cnot(hx, t)
    for key, slot, frozen in ((hx, slot1, hybrid >= 2), (hz, slot2, hybrid >= 1)):
        if frozen:
            b.ops(pair.aligned(0), slot)
        else:
            b.select([key], [remap(pair.aligned(0), slot), remap(pair.aligned(1), slot)])
    purif = [s[i] for s in (slot1, slot2) for i in pair.purifier_wires()]
    samples = [s[i] for s in (slot1, slot2) for i in pair.sample_wires()]
    h_wires = [hx, hz] + purif
    r_wires = [t] + samples
    return RadiationInstance(
        b.build(h_wires + [bw] + r_wires), len(h_wires), len(r_wires), lam=lam,
        name=f"efi[{pair.name}]/hybrid{hybrid}",
    )


def hybrid_instance(pair: StatePairEnsemble, h: int) -> RadiationInstance:
    return bhrd_from_efi(pair, hybrid=h)


def decoder_from_pair_distinguisher(d: Distinguisher, r: int | None = None) -> RadiationDecoder:
    """Decode each slot with ``d``, then undo the mask on T: CZ from the slot-2 guess, CNOT from the slot-1 guess."""
    r = d.n_in if r is None else r
    if d.n_in != r:
        raise ChannelError(f"distinguisher reads {d.n_in} qubits, slots have {r}")
    b = ChannelBuilder()
    t = b.inputs(1)[0]
    s1 = b.inputs(r)
    s2 = b.inputs(r)
    (d1,) = b.append(d.channel, s1)
    (d2,) = b.append(d.channel, s2)
    b.cz(d2, t).cnot(d1, t)
    f = b.ancilla()
    return RadiationDecoder(b.build([t, f]))
