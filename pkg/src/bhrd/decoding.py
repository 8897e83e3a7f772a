"""Radiation decoders, superdense decoders, exact (gamma, epsilon) scoring and the conversions between them.

A radiation instance is a pure state on registers H (interior), B (one qubit)
and R (radiation). A radiation decoder maps R to a decoded qubit D and a
failure flag F; a superdense decoder maps the masked B together with R to a
two-bit guess P = (x', z') and a flag F.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Optional

import numpy as np

from . import primitives
from .primitives import ALL_KEYS, PauliKey, readout_wires
from .qcore import (
    Channel,
    ChannelBuilder,
    PureState,
    RegisterLayout,
    random_unitary,
    apply_channel,
    apply_ops,
    epr_overlap,
    gates,
    probabilities,
    random_channel,
    reduced_density,
)
from .qcore.channel import ChannelError

GAMMA_FLOOR = 1e-12


# --------------------------------------------------------------------------- instances


@dataclass(eq=False)
class RadiationInstance:
    """``prep`` is a zero-input channel whose outputs, in order, are H..., B, R..."""

    prep: Channel
    h: int
    r: int
    lam: int = 0
    name: str = "custom"
    strong_decoder: Optional["RadiationDecoder"] = None

    def __post_init__(self):
        if self.prep.n_in != 0:
            raise ChannelError("an instance generator takes no input")
        if self.prep.n_out != self.h + 1 + self.r:
            raise ChannelError(
                f"generator outputs {self.prep.n_out} wires, layout needs {self.h + 1 + self.r}"
            )
        if self.prep.discarded:
            raise ChannelError("instance generator must output a pure state (no discarded wires)")

    @property
    def width(self) -> int:
        return self.h + 1 + self.r

    @property
    def layout(self) -> RegisterLayout:
        return RegisterLayout.sequential(("H", self.h), ("B", 1), ("R", self.r))

    @cached_property
    def state(self) -> PureState:
        n = self.prep.width
        psi = np.zeros((2,) * n, dtype=complex)
        psi[(0,) * n] = 1.0
        psi = apply_ops(psi, self.prep.ops)
        psi = np.transpose(psi, self.prep.out)
        return PureState(self.layout, psi.reshape(-1))

    def masked(self, k: PauliKey) -> PureState:
        return primitives.pauli_mask(self.state, self.layout["B"][0], k)


def _instance(b: ChannelBuilder, hw, bw, rw, **kw) -> RadiationInstance:
    return RadiationInstance(b.build(list(hw) + [bw] + list(rw)), len(hw), len(rw), **kw)


def trivial_instance(lam: int = 0) -> RadiationInstance:
    """R is the purifying half of B's EPR pair; H is empty."""
    b = ChannelBuilder()
    bw, rw = b.ancillas(2)
    b.epr(bw, rw)
    inst = _instance(b, [], bw, [rw], lam=lam, name="trivial")
    inst.strong_decoder = identity_radiation_decoder(1)
    return inst


def noisy_trivial_instance(theta: float, lam: int = 0) -> RadiationInstance:
    """Trivial instance whose radiation qubit is rotated by Ry(theta) before release."""
    b = ChannelBuilder()
    bw, rw = b.ancillas(2)
    b.epr(bw, rw).gate(gates.ry(theta), rw)
    return _instance(b, [], bw, [rw], lam=lam, name=f"noisy({theta!r})")


def keyed_instance(padding: int = 1, lam: int = 0) -> RadiationInstance:
    """B's partner in R is Pauli-masked by a key held only in H; R also carries key-free padding."""
    b = ChannelBuilder()
    kx, kz = b.ancillas(2)
    bw, partner = b.ancillas(2)
    pad = b.ancillas(padding)
    b.h(kx, kz).epr(bw, partner)
    b.cz(kz, partner).cnot(kx, partner)
    b.h(*pad)
    return _instance(b, [kx, kz], bw, [partner] + pad, lam=lam, name="keyed")


def product_instance(r: int = 1, lam: int = 0) -> RadiationInstance:
    """B is maximally entangled with H only; R is an unrelated |+...+>."""
    b = ChannelBuilder()
    hw, bw = b.ancillas(2)
    rw = b.ancillas(r)
    b.epr(hw, bw).h(*rw)
    return _instance(b, [hw], bw, rw, lam=lam, name="product")


def random_instance(h: int, r: int, rng, lam: int = 0) -> RadiationInstance:
    """Haar-random pure state on H, B, R."""
    b = ChannelBuilder()
    wires = b.ancillas(h + 1 + r)
    b.gate(random_unitary(1 << len(wires), rng), *wires)
    return _instance(b, wires[:h], wires[h], wires[h + 1:], lam=lam, name=f"random({h},{r})")


# --------------------------------------------------------------------------- decoders


@dataclass(frozen=True, eq=False)
class RadiationDecoder:
    """Channel R -> (D, F)."""

    channel: Channel

    def __post_init__(self):
        if self.channel.n_out != 2:
            raise ChannelError("a radiation decoder outputs D and F")

    @property
    def r(self) -> int:
        return self.channel.n_in


@dataclass(frozen=True, eq=False)
class SuperdenseDecoder:
    """Channel (B, R) -> (P = (x', z'), F)."""

    channel: Channel

    def __post_init__(self):
        if self.channel.n_out != 3:
            raise ChannelError("a superdense decoder outputs two P qubits and F")
        if self.channel.n_in < 1:
            raise ChannelError("a superdense decoder reads at least B")

    @property
    def r(self) -> int:
        return self.channel.n_in - 1


def identity_radiation_decoder(r: int, wire: int = 0) -> RadiationDecoder:
    b = ChannelBuilder()
    rw = b.inputs(r)
    f = b.ancilla()
    return RadiationDecoder(b.build([rw[wire], f]))


def mixed_radiation_decoder(r: int) -> RadiationDecoder:
    """Outputs D maximally mixed (half of a fresh EPR pair) and F = 0."""
    b = ChannelBuilder()
    b.inputs(r)
    d, partner, f = b.ancillas(3)
    b.epr(d, partner)
    return RadiationDecoder(b.build([d, f]))


def random_radiation_decoder(r: int, n_anc: int, rng) -> RadiationDecoder:
    return RadiationDecoder(random_channel(r, max(n_anc, 2), 2, rng))


def coin_failure(dec: RadiationDecoder | SuperdenseDecoder, p_fail: float = 0.5):
    """Same decoder, but F is replaced by an independent coin with Pr[F=1] = p_fail."""
    b = ChannelBuilder()
    ins = b.inputs(dec.channel.n_in)
    outs = b.append(dec.channel, ins)
    f, purifier = b.ancillas(2)
    b.gate(gates.ry(2 * math.asin(math.sqrt(p_fail))), f).cnot(f, purifier)
    return type(dec)(b.build(outs[:-1] + [f]))


def bell_superdense_decoder(r: int, partner: int = 0) -> SuperdenseDecoder:
    """Bell-basis readout of B together with R[partner]; F = 0."""
    b = ChannelBuilder()
    bw = b.inputs(1)[0]
    rw = b.inputs(r)
    f = b.ancilla()
    q = rw[partner]
    b.cnot(bw, q).h(bw)
    xw, zw = readout_wires(bw, q)
    return SuperdenseDecoder(b.build([xw, zw, f]))


def uniform_superdense_decoder(r: int) -> SuperdenseDecoder:
    b = ChannelBuilder()
    b.inputs(1 + r)
    p0, p1, c0, c1, f = b.ancillas(5)
    b.coin(p0, c0).coin(p1, c1)
    return SuperdenseDecoder(b.build([p0, p1, f]))


def failing_superdense_decoder(r: int) -> SuperdenseDecoder:
    b = ChannelBuilder()
    b.inputs(1 + r)
    p0, p1, f = b.ancillas(3)
    b.x(f)
    return SuperdenseDecoder(b.build([p0, p1, f]))


def noisy_superdense_decoder(base: SuperdenseDecoder, q: float) -> SuperdenseDecoder:
    """With probability q the guess of ``base`` is replaced by a uniform one."""
    b = ChannelBuilder()
    ins = b.inputs(base.channel.n_in)
    p0, p1, f = b.append(base.channel, ins)
    coin, cp, m0, m1, c0, c1 = b.ancillas(6)
    b.gate(gates.ry(2 * math.asin(math.sqrt(q))), coin).cnot(coin, cp)
    b.coin(m0, c0).coin(m1, c1)
    cswap = gates.controlled(gates.SWAP)
    b.gate(cswap, coin, p0, m0).gate(cswap, coin, p1, m1)
    return SuperdenseDecoder(b.build([p0, p1, f]))


def random_superdense_decoder(r: int, n_anc: int, rng) -> SuperdenseDecoder:
    return SuperdenseDecoder(random_channel(1 + r, max(n_anc, 3), 3, rng))


# --------------------------------------------------------------------------- scores


@dataclass(frozen=True)
class DecoderScore:
    gamma: float
    epsilon: float
    mode: str = "exact"
    trials: Optional[int] = None
    seed: Optional[int] = None
    undefined: bool = False
    radius: Optional[float] = None

    @property
    def effectiveness(self) -> float:
        return self.gamma * self.epsilon

    @property
    def success(self) -> float:
        """Conditional success probability 1/4 + 3/4 epsilon."""
        return 0.25 + 0.75 * self.epsilon

    def to_json(self) -> dict:
        out = {
            "gamma": float(self.gamma),
            "epsilon": float(self.epsilon),
            "effectiveness": float(self.effectiveness),
            "mode": "exact" if self.mode == "exact" else "mc",
        }
        if self.trials is not None:
            out["trials"] = int(self.trials)
        if self.seed is not None:
            out["seed"] = int(self.seed)
        if self.undefined:
            out["undefined"] = True
        if self.radius is not None:
            out["radius"] = float(self.radius)
        return out


def epsilon_from_success(p: float) -> float:
    return (p - 0.25) * 4.0 / 3.0


def make_score(gamma: float, cond_success: float | None, **kw) -> DecoderScore:
    if gamma <= GAMMA_FLOOR or cond_success is None:
        return DecoderScore(max(gamma, 0.0), 0.0, undefined=True, **kw)
    return DecoderScore(gamma, epsilon_from_success(cond_success), **kw)


def hoeffding_radius(trials: int, confidence: float = 0.95) -> float:
    return math.sqrt(math.log(2 / (1 - confidence)) / (2 * trials))


def _check_width(inst: RadiationInstance, n_in: int, expect: int) -> None:
    if n_in != expect:
        raise ChannelError(f"decoder input width {n_in} does not match instance ({expect})")


def radiation_output_state(inst: RadiationInstance, dec: RadiationDecoder) -> PureState:
    _check_width(inst, dec.channel.n_in, inst.r)
    return apply_channel(inst.state, dec.channel, "R", {"D": 1, "F": 1})


def radiation_fbd(inst: RadiationInstance, dec: RadiationDecoder) -> np.ndarray:
    st = radiation_output_state(inst, dec)
    return reduced_density(st, st.layout.wires("F", "B", "D")).matrix


def eval_radiation_decoder(inst: RadiationInstance, dec: RadiationDecoder) -> DecoderScore:
    rho = radiation_fbd(inst, dec)
    gamma = float(np.real(np.trace(rho[:4, :4])))
    if gamma <= GAMMA_FLOOR:
        return make_score(gamma, None)
    return make_score(gamma, epr_overlap(rho[:4, :4] / gamma))


def superdense_table(inst: RadiationInstance, dec: SuperdenseDecoder) -> np.ndarray:
    """t[k, k', f] = Pr[P = k', F = f | mask key k], exactly."""
    _check_width(inst, dec.channel.n_in, 1 + inst.r)
    table = np.zeros((4, 4, 2))
    for k in ALL_KEYS:
        st = apply_channel(inst.masked(k), dec.channel, inst.layout.wires("B", "R"), {"P": 2, "F": 1})
        p = probabilities(st, st.layout.wires("P", "F"))
        table[k.index] = p.reshape(4, 2)
    return table


def score_from_table(table: np.ndarray) -> DecoderScore:
    gamma = float(table[:, :, 0].sum() / 4)
    if gamma <= GAMMA_FLOOR:
        return make_score(gamma, None)
    joint = float(sum(table[k, k, 0] for k in range(4)) / 4)
    return make_score(gamma, joint / gamma)


def eval_superdense_decoder(inst: RadiationInstance, dec: SuperdenseDecoder) -> DecoderScore:
    return score_from_table(superdense_table(inst, dec))


def superdense_confusion(inst: RadiationInstance, dec: SuperdenseDecoder) -> np.ndarray:
    """q[k, k'] = Pr[P = k' | key k], ignoring F."""
    return superdense_table(inst, dec).sum(axis=2)


def eval_superdense_teleported(inst: RadiationInstance, dec: SuperdenseDecoder) -> DecoderScore:
    """The superdense experiment with the mask realized by teleporting B into a fresh qubit T."""
    _check_width(inst, dec.channel.n_in, 1 + inst.r)
    prep = ChannelBuilder()
    d, t = prep.ancillas(2)
    prep.epr(d, t)
    st = apply_channel(inst.state, prep.build([d, t]), [], {"D": 1, "T": 1})
    bw, dw = st.layout["B"][0], st.layout["D"][0]
    st = primitives.bell_rotation(st, bw, dw)
    xw, zw = readout_wires(bw, dw)
    st = apply_channel(st, dec.channel, st.layout.wires("T", "R"), {"P": 2, "F": 1})
    p = probabilities(st, (xw, zw) + st.layout.wires("P", "F")).reshape(4, 4, 2)
    gamma = float(p[:, :, 0].sum())
    if gamma <= GAMMA_FLOOR:
        return make_score(gamma, None)
    return make_score(gamma, float(sum(p[k, k, 0] for k in range(4))) / gamma)


def eval_radiation_decoder_mc(
    inst: RadiationInstance, dec: RadiationDecoder, trials: int, rng, confidence: float = 0.95
) -> DecoderScore:
    """Sampled score: Bell-measure B, D and read F in each trial."""
    st = radiation_output_state(inst, dec)
    bw, dw, fw = st.layout["B"][0], st.layout["D"][0], st.layout["F"][0]
    rotated = primitives.bell_rotation(st, bw, dw)
    xw, zw = readout_wires(bw, dw)
    p = probabilities(rotated, (fw, xw, zw))
    draws = rng.choice(8, size=trials, p=p / p.sum())
    accepted = draws < 4
    n_acc = int(accepted.sum())
    gamma = n_acc / trials
    if n_acc == 0:
        return DecoderScore(0.0, 0.0, mode="mc", trials=trials, seed=getattr(rng, "seed", None),
                            undefined=True, radius=hoeffding_radius(trials, confidence))
    hit = int((draws == 0).sum()) / n_acc
    return DecoderScore(gamma, epsilon_from_success(hit), mode="mc", trials=trials,
                        seed=getattr(rng, "seed", None), radius=hoeffding_radius(trials, confidence))


def eval_superdense_decoder_mc(
    inst: RadiationInstance, dec: SuperdenseDecoder, trials: int, rng, confidence: float = 0.95
) -> DecoderScore:
    table = superdense_table(inst, dec).reshape(4, 8)
    keys_drawn = rng.integers(0, 4, size=trials)
    acc = hits = 0
    for k in range(4):
        sel = int((keys_drawn == k).sum())
        if not sel:
            continue
        draws = rng.choice(8, size=sel, p=table[k] / table[k].sum())
        ok = draws % 2 == 0
        acc += int(ok.sum())
        hits += int((ok & (draws // 2 == k)).sum())
    seed = getattr(rng, "seed", None)
    if acc == 0:
        return DecoderScore(0.0, 0.0, mode="mc", trials=trials, seed=seed, undefined=True,
                            radius=hoeffding_radius(trials, confidence))
    return DecoderScore(acc / trials, epsilon_from_success(hits / acc), mode="mc", trials=trials,
                        seed=seed, radius=hoeffding_radius(trials, confidence))


# --------------------------------------------------------------------------- conversions


def rad_to_superdense(dec: RadiationDecoder) -> SuperdenseDecoder:
    """Run the radiation decoder on R, then Bell-measure (B, D) into P."""
    b = ChannelBuilder()
    bw = b.inputs(1)[0]
    rw = b.inputs(dec.r)
    d, f = b.append(dec.channel, rw)
    b.cnot(bw, d).h(bw)
    xw, zw = readout_wires(bw, d)
    return SuperdenseDecoder(b.build([xw, zw, f]))


def superdense_to_rad(dec: SuperdenseDecoder) -> RadiationDecoder:
    """Share a fresh EPR pair DT, run the superdense decoder on (T, R), then correct D by Z^z' X^x'."""
    b = ChannelBuilder()
    rw = b.inputs(dec.r)
    d, t = b.ancillas(2)
    b.epr(d, t)
    p0, p1, f = b.append(dec.channel, [t] + rw)
    b.cnot(p0, d).cz(p1, d)
    return RadiationDecoder(b.build([d, f]))


def fold_failure(dec: RadiationDecoder) -> RadiationDecoder:
    """Never fail: when the original flag is 1, output a maximally mixed D instead."""
    b = ChannelBuilder()
    rw = b.inputs(dec.r)
    d, f_old = b.append(dec.channel, rw)
    m1, m2, f = b.ancillas(3)
    b.epr(m1, m2)
    b.gate(gates.controlled(gates.SWAP), f_old, d, m1)
    return RadiationDecoder(b.build([d, f]))
