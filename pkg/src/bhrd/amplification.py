"""From radiation decoders back to EFI candidates, and the amplification pipeline.

Plain candidate: the masked B with R, plus either the true mask key (side 0)
or an independent uniform key (side 1).

GL candidate: n independent masked slots, random strings a, a', and the bit
c' = (a.x xor a'.z) xor b.

The batch decoder is the Goldreich-Levin extractor driven by a GL-candidate
distinguisher; ``single_from_batch`` turns any batch decoder into a
single-slot superdense decoder by estimating conditional slot accuracies.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Sequence

import numpy as np

from . import goldreich_levin as gl
from .decoding import (
    DecoderScore,
    RadiationInstance,
    SuperdenseDecoder,
    epsilon_from_success,
    eval_superdense_decoder,
    hoeffding_radius,
    make_score,
    superdense_confusion,
)
from .primitives import ALL_KEYS
from .qcore import (
    MAX_DENSITY_QUBITS,
    ChannelBuilder,
    ChannelError,
    Distinguisher,
    Gate,
    PureState,
    RegisterLayout,
    SizeLimitError,
    advantage,
    accept_probability,
    adjoint,
    apply_channel,
    gates,
    prepare,
    probabilities,
    reduced_density,
    trace_distance,
)

STRONG_GAMMA_TOL = 1e-9


def _slot_densities(inst: RadiationInstance) -> list[np.ndarray]:
    """Reduced density of (B, R) after masking B with each of the four keys."""
    if 1 + inst.r > MAX_DENSITY_QUBITS:
        raise SizeLimitError("slot too wide for exact density evaluation")
    return [reduced_density(inst.masked(k), inst.layout.wires("B", "R")).matrix for k in ALL_KEYS]


def _basis(dim: int, i: int) -> np.ndarray:
    e = np.zeros((dim, dim))
    e[i, i] = 1.0
    return e


def _strong_eta(s: SuperdenseDecoder, inst: RadiationInstance) -> float:
    score = eval_superdense_decoder(inst, s)
    if abs(score.gamma - 1) > STRONG_GAMMA_TOL:
        raise ChannelError(f"decoder is not strong: gamma = {score.gamma}")
    return 0.75 * (1 - score.epsilon)


# --------------------------------------------------------------------------- plain candidate


@dataclass(eq=False)
class EfiPlainCandidate:
    """Outputs (B, R, x', z')."""

    inst: RadiationInstance

    @property
    def width(self) -> int:
        return 1 + self.inst.r + 2

    @cached_property
    def _parts(self):
        sig = _slot_densities(self.inst)
        real = sum(np.kron(s, _basis(4, k)) for k, s in enumerate(sig)) / 4
        wrong = sum(
            np.kron(s, (np.eye(4) - _basis(4, k)) / 3) for k, s in enumerate(sig)
        ) / 4
        indep = np.kron(sum(sig) / 4, np.eye(4) / 4)
        return real, indep, wrong

    @property
    def rho0(self) -> np.ndarray:
        return self._parts[0]

    @property
    def rho1(self) -> np.ndarray:
        return self._parts[1]

    @property
    def rho_bot(self) -> np.ndarray:
        """Side-1 output conditioned on the random key differing from the true one."""
        return self._parts[2]

    def generator(self, b: int):
        """Purified circuit for side ``b``; outputs B, R, x', z'."""
        bld = ChannelBuilder()
        hw = bld.ancillas(self.inst.prep.width)
        bld.ops(self.inst.prep.ops, hw)
        outs = [hw[w] for w in self.inst.prep.out]
        bw, rw = outs[self.inst.h], outs[self.inst.h + 1:]
        kx, kz, xp, zp = bld.ancillas(4)
        bld.h(kx, kz)
        bld.cz(kz, bw).cnot(kx, bw)
        if b == 0:
            bld.cnot(kx, xp).cnot(kz, zp)
        else:
            px, pz = bld.ancillas(2)
            bld.coin(xp, px).coin(zp, pz)
        return bld.build([bw] + rw + [xp, zp])

    def circuit_density(self, b: int) -> np.ndarray:
        st = prepare(self.generator(b), {"O": self.width})
        return reduced_density(st, "O").matrix


def efi_plain(inst: RadiationInstance) -> EfiPlainCandidate:
    return EfiPlainCandidate(inst)


def plain_distance(c: EfiPlainCandidate) -> float:
    return trace_distance(c.rho0, c.rho1)


def plain_distinguisher_from_strong_decoder(s: SuperdenseDecoder, inst: RadiationInstance) -> Distinguisher:
    """Run ``s`` on (B, R) and output 1 iff its guess differs from (x', z')."""
    _strong_eta(s, inst)
    b = ChannelBuilder()
    ins = b.inputs(1 + inst.r + 2)
    xp, zp = ins[-2:]
    p0, p1, _f = b.append(s.channel, ins[:-2])
    o = b.ancilla()
    b.cnot(xp, p0).cnot(zp, p1)
    b.mcx([p0, p1], o, (0, 0)).x(o)
    return Distinguisher(b.build([o]))


def strong_decoder_eta(s: SuperdenseDecoder, inst: RadiationInstance) -> float:
    """eta with score (1, 1 - 4 eta / 3); raises if gamma != 1."""
    return _strong_eta(s, inst)


@dataclass(frozen=True)
class PlainReport:
    """delta_b = Pr[d outputs 0 | rho_b]; delta = advantage of d (after sign normalization)."""

    delta: float
    delta0: float
    delta1: float
    delta_bot: float
    success_floor: float
    success_measured: float
    success_oracle: float
    negated: bool

    @property
    def identity_gap(self) -> float:
        return abs(self.delta1 - (0.25 * self.delta0 + 0.75 * self.delta_bot))

    def to_json(self) -> dict:
        return {
            "delta": self.delta,
            "delta0": self.delta0,
            "delta1": self.delta1,
            "deltaBot": self.delta_bot,
            "successFloor": self.success_floor,
            "successMeasured": self.success_measured,
            "successOracle": self.success_oracle,
            "negated": self.negated,
        }


def plain_deltas(d: Distinguisher, c: EfiPlainCandidate) -> tuple[float, float, float]:
    return tuple(1 - accept_probability(d, rho) for rho in (c.rho0, c.rho1, c.rho_bot))


def superdense_from_plain_distinguisher(d: Distinguisher, inst: RadiationInstance) -> tuple[SuperdenseDecoder, PlainReport]:
    """Guess a uniform key; keep it if ``d`` says it looks real (t = 0), otherwise guess afresh."""
    c = efi_plain(inst)
    if d.n_in != c.width:
        raise ChannelError(f"distinguisher reads {d.n_in} qubits, candidate outputs {c.width}")
    negated = advantage(d, c.rho0, c.rho1) < 0
    if negated:
        d = d.negated()
    d0, d1, dbot = plain_deltas(d, c)
    delta = d0 - d1

    b = ChannelBuilder()
    bw = b.inputs(1)[0]
    rw = b.inputs(inst.r)
    xp, zp, px, pz = b.ancillas(4)
    b.coin(xp, px).coin(zp, pz)
    (t,) = b.append(d.channel, [bw] + rw + [xp, zp])
    p0, p1, m0, m1, q0, q1, f = b.ancillas(7)
    b.coin(m0, q0).coin(m1, q1)
    # d may rotate its inputs in place; px, pz still hold the guessed key
    b.mcx([t, px], p0, (0, 1)).mcx([t, pz], p1, (0, 1))
    b.mcx([t, m0], p0, (1, 1)).mcx([t, m1], p1, (1, 1))
    dec = SuperdenseDecoder(b.build([p0, p1, f]))

    measured = eval_superdense_decoder(inst, dec).success
    report = PlainReport(
        delta=delta,
        delta0=d0,
        delta1=d1,
        delta_bot=dbot,
        success_floor=0.25 + delta / 16,
        success_measured=measured,
        success_oracle=0.25 * d0 + (1 - d0) / 16 + 3 * (1 - dbot) / 16,
        negated=negated,
    )
    return dec, report


# --------------------------------------------------------------------------- GL candidate


def default_slots(lam: int) -> int:
    """ceil(log2(lam)^2): a concrete superlogarithmic slot count."""
    return math.ceil(math.log2(lam) ** 2)


def _bits(v: int, n: int) -> list[int]:
    return [(v >> (n - 1 - i)) & 1 for i in range(n)]


@dataclass(eq=False)
class EfiGlCandidate:
    """Outputs (B_1 R_1, ..., B_n R_n, a_1..a_n, a'_1..a'_n, c')."""

    inst: RadiationInstance
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be at least 1")

    @property
    def slot_width(self) -> int:
        return 1 + self.inst.r

    @property
    def width(self) -> int:
        return self.n * self.slot_width + 2 * self.n + 1

    @cached_property
    def densities(self) -> tuple[np.ndarray, np.ndarray]:
        if self.width > MAX_DENSITY_QUBITS:
            raise SizeLimitError(f"{self.width}-qubit candidate exceeds the exact density limit")
        sig = _slot_densities(self.inst)
        n = self.n
        dim_cls = 1 << (2 * n + 1)
        out = [np.zeros((1 << self.width,) * 2, dtype=complex) for _ in range(2)]
        for keys in itertools.product(range(4), repeat=n):
            slots = np.ones((1, 1))
            for k in keys:
                slots = np.kron(slots, sig[k])
            xs = sum(((k >> 1) & 1) << (n - 1 - i) for i, k in enumerate(keys))
            zs = sum((k & 1) << (n - 1 - i) for i, k in enumerate(keys))
            for a in range(1 << n):
                for ap in range(1 << n):
                    c = gl.inner(a, xs) ^ gl.inner(ap, zs)
                    for b in (0, 1):
                        idx = (((a << n) | ap) << 1) | (c ^ b)
                        out[b] += np.kron(slots, _basis(dim_cls, idx))
        norm = 4.0 ** n * 4.0 ** n
        return out[0] / norm, out[1] / norm

    def generator(self, b: int):
        """Purified circuit for side ``b``."""
        bld = ChannelBuilder()
        slots, xs, zs = [], [], []
        for _ in range(self.n):
            hw = bld.ancillas(self.inst.prep.width)
            bld.ops(self.inst.prep.ops, hw)
            outs = [hw[w] for w in self.inst.prep.out]
            kx, kz = bld.ancillas(2)
            bld.h(kx, kz)
            bw = outs[self.inst.h]
            bld.cz(kz, bw).cnot(kx, bw)
            slots += [bw] + outs[self.inst.h + 1:]
            xs.append(kx)
            zs.append(kz)
        a = bld.ancillas(2 * self.n)
        for w in a:
            bld.coin(w, bld.ancilla())
        c = bld.ancilla()
        for ai, ki in zip(a, xs + zs):
            bld.mcx([ai, ki], c)
        if b:
            bld.x(c)
        return bld.build(slots + a + [c])

    def circuit_density(self, b: int) -> np.ndarray:
        st = prepare(self.generator(b), {"O": self.width})
        return reduced_density(st, "O").matrix


def efi_gl(inst: RadiationInstance, n: int) -> EfiGlCandidate:
    return EfiGlCandidate(inst, n)


def gl_distance(c: EfiGlCandidate) -> float:
    rho0, rho1 = c.densities
    return trace_distance(rho0, rho1)


def gl_distinguisher_from_strong_decoder(s: SuperdenseDecoder, inst: RadiationInstance, n: int) -> Distinguisher:
    """Decode every slot with ``s`` and output c' xor a.x' xor a'.z'."""
    _strong_eta(s, inst)
    sw = 1 + inst.r
    b = ChannelBuilder()
    slots = [b.inputs(sw) for _ in range(n)]
    a = b.inputs(n)
    ap = b.inputs(n)
    c = b.inputs(1)[0]
    o = b.ancilla()
    for i, slot in enumerate(slots):
        p0, p1, _f = b.append(s.channel, slot)
        b.mcx([a[i], p0], o).mcx([ap[i], p1], o)
    b.cnot(c, o)
    return Distinguisher(b.build([o]))


def gl_candidate_advantage(d: Distinguisher, c: EfiGlCandidate) -> float:
    rho0, rho1 = c.densities
    return advantage(d, rho0, rho1)


def slotwise_gl_advantage(s: SuperdenseDecoder, inst: RadiationInstance, n: int) -> float:
    """Exact advantage of ``gl_distinguisher_from_strong_decoder`` using slot independence.

    Slot i contributes the factor E[(-1)^(a_i dx_i xor a'_i dz_i)] where
    (dx_i, dz_i) is the decoding error; averaging over a_i, a'_i leaves
    Pr[no error on slot i]. The advantage is the product over slots.
    """
    q = superdense_confusion(inst, s)
    factor = 0.0
    for k in range(4):
        for g in range(4):
            delta = k ^ g
            for ab in range(4):
                sign = gl.inner(ab, delta)
                factor += q[k, g] * (1 - 2 * sign) / 16
    return factor ** n


# --------------------------------------------------------------------------- batch decoders


def _key_bits(keys: Sequence[int]) -> int:
    """Pack per-slot key indices into the string (x_1..x_n, z_1..z_n)."""
    n = len(keys)
    xs = sum(((k >> 1) & 1) << (n - 1 - i) for i, k in enumerate(keys))
    zs = sum((k & 1) << (n - 1 - i) for i, k in enumerate(keys))
    return (xs << n) | zs


def _unpack(s: int, n: int) -> tuple[int, ...]:
    xs, zs = s >> n, s & ((1 << n) - 1)
    return tuple(2 * ((xs >> (n - 1 - i)) & 1) + ((zs >> (n - 1 - i)) & 1) for i in range(n))


class BatchDecoder:
    """Anything that maps n masked slots to n key guesses."""

    n: int

    def sample(self, keys: np.ndarray, rng) -> np.ndarray:
        """keys: (trials, n) key indices; returns guesses of the same shape."""
        raise NotImplementedError

    def prefix_masses(self) -> np.ndarray:
        """Exact Pr[slots 1..j all correct] for j = 0..n, keys uniform."""
        raise NotImplementedError

    def batch_success(self) -> float:
        return float(self.prefix_masses()[-1])


@dataclass(eq=False)
class GlBatchDecoder(BatchDecoder):
    """The extractor circuit around a GL-candidate distinguisher, as a channel slots -> Q."""

    inst: RadiationInstance
    n: int
    family: gl.PredictorFamily
    channel: object  # Channel

    @cached_property
    def table(self) -> np.ndarray:
        """table[s, s'] = Pr[Q = s' | key string s] with s = (x_1..x_n, z_1..z_n)."""
        size = 4 ** self.n
        t = np.zeros((size, size))
        for keys in itertools.product(range(4), repeat=self.n):
            st = _masked_slots(self.inst, keys)
            out = apply_channel(st, self.channel, st.layout.wires(*[f"S{i}" for i in range(self.n)]), {"Q": 2 * self.n})
            t[_key_bits(keys)] = probabilities(out, "Q")
        return t

    def batch_success(self) -> float:
        return float(np.mean(np.diag(self.table)))

    def prefix_masses(self) -> np.ndarray:
        n = self.n
        masses = np.zeros(n + 1)
        for s in range(4 ** n):
            truth = _unpack(s, n)
            for g in range(4 ** n):
                p = self.table[s, g]
                if not p:
                    continue
                guess = _unpack(g, n)
                j = 0
                while j < n and guess[j] == truth[j]:
                    j += 1
                masses[: j + 1] += p
        return masses / 4 ** n

    def sample(self, keys: np.ndarray, rng) -> np.ndarray:
        out = np.empty_like(keys)
        for i, row in enumerate(keys):
            p = self.table[_key_bits(row)]
            out[i] = _unpack(int(rng.choice(p.size, p=p / p.sum())), self.n)
        return out


def _masked_slots(inst: RadiationInstance, keys: Sequence[int]) -> PureState:
    """Product of masked instance copies; register S{i} = (B_i, R_i), hidden H_i."""
    regs: dict[str, tuple[int, ...]] = {}
    amps = np.ones(1, dtype=complex)
    pos = 0
    for i, k in enumerate(keys):
        st = inst.masked(ALL_KEYS[k])
        regs[f"S{i}"] = tuple(pos + w for w in inst.layout.wires("B", "R"))
        regs[f"H{i}"] = tuple(pos + w for w in inst.layout["H"])
        amps = np.kron(amps, st.amplitudes)
        pos += st.n
    regs = {k: v for k, v in regs.items() if v}
    return PureState(RegisterLayout(regs, pos), amps)


def predictor_from_distinguisher(d: Distinguisher, inst: RadiationInstance, n: int) -> gl.PredictorFamily:
    """U_r: write r = (a, a') into fresh wires, feed c' = t' for a uniform t', run d, output t xor t'.

    Work wires: slots, a, a', c', t', then d's ancillas.
    """
    sw = 1 + inst.r
    if d.n_in != n * sw + 2 * n + 1:
        raise ChannelError("distinguisher width does not match the GL candidate")
    b = ChannelBuilder()
    ins = b.inputs(d.n_in)
    tp = b.inputs(1)[0]
    (o,) = b.append(d.channel, ins)
    common_ch = b.build([o])
    m = common_ch.width
    a_wires = ins[n * sw: n * sw + 2 * n]
    c_wire = ins[-1]
    common = (
        (Gate(gates.H, (tp,)), Gate(gates.CNOT, (tp, c_wire)))
        + tuple(common_ch.ops)
        + (Gate(gates.CNOT, (tp, common_ch.out[0])),)
    )
    branches = []
    for r in range(1 << (2 * n)):
        flips = tuple(Gate(gates.X, (w,)) for w, bit in zip(a_wires, _bits(r, 2 * n)) if bit)
        branches.append(flips + common)
    return gl.PredictorFamily(2 * n, m, tuple(branches), output=common_ch.out[0])


def batch_from_distinguisher(d: Distinguisher, inst: RadiationInstance, n: int) -> GlBatchDecoder:
    fam = predictor_from_distinguisher(d, inst, n)
    sw = 1 + inst.r
    bld = ChannelBuilder()
    slot_in = bld.inputs(n * sw)
    r = bld.ancillas(2 * n)
    extra = bld.ancillas(fam.m - n * sw)
    flag = bld.ancilla()
    work = slot_in + extra
    u = fam.controlled(r, work)
    bld.h(*r).x(flag)
    wires = list(range(flag + 1))
    bld.ops([u], wires)
    bld.cz(work[fam.output], flag)
    bld.ops(adjoint([u]), wires)
    bld.h(*r)
    return GlBatchDecoder(inst, n, fam, bld.build(r))


def gl_phi(inst: RadiationInstance, n: int, keys: Sequence[int], fam: gl.PredictorFamily) -> PureState:
    """Input of the extractor for a key vector: work wires (slots, then zeros), then hidden H wires."""
    st = _masked_slots(inst, keys)
    slot_w = st.layout.wires(*[f"S{i}" for i in range(n)])
    hid = [w for w in range(st.n) if w not in set(slot_w)]
    t = np.transpose(st.tensor, list(slot_w) + hid)
    extra = fam.m - len(slot_w)
    zeros = np.zeros(1 << extra)
    zeros[0] = 1.0
    t = np.multiply.outer(t, zeros.reshape((2,) * extra)) if extra else t
    order = list(range(len(slot_w))) + list(range(st.n, st.n + extra)) + list(range(len(slot_w), st.n))
    t = np.transpose(t, order)
    return PureState(RegisterLayout.sequential(("W", fam.m), ("A", st.n - len(slot_w))), t.reshape(-1))


def corrupted_distinguisher(d: Distinguisher, inst: RadiationInstance, n: int, bad: Sequence[int]) -> Distinguisher:
    """Flip the output of a GL-candidate distinguisher whenever (a, a') is in ``bad``.

    Unlike a coin flip, this error survives the extractor's uncomputation:
    a coin inside the purified predictor is undone by U^dagger.
    """
    bad = frozenset(bad)
    sw = 1 + inst.r
    b = ChannelBuilder()
    ins = b.inputs(d.n_in)
    (o,) = b.append(d.channel, ins)
    a = ins[n * sw: n * sw + 2 * n]
    b.gate(gates.permutation(lambda v: int(v in bad), 2 * n), *a, o)
    return Distinguisher(b.build([o]))


def noisy_distinguisher(d: Distinguisher, p_flip: float) -> Distinguisher:
    """Flip the output of ``d`` with probability ``p_flip`` (a purified coin)."""
    b = ChannelBuilder()
    ins = b.inputs(d.n_in)
    (o,) = b.append(d.channel, ins)
    coin, purifier = b.ancillas(2)
    b.gate(gates.ry(2 * math.asin(math.sqrt(p_flip))), coin).cnot(coin, purifier).cnot(coin, o)
    return Distinguisher(b.build([o]))


@dataclass(eq=False)
class PlantedBatchDecoder(BatchDecoder):
    """Mixture of correctness patterns: in each branch a slot is either decoded correctly or guessed uniformly."""

    n: int
    branches: tuple[tuple[float, tuple[bool, ...]], ...]
    name: str = "planted"

    def __post_init__(self):
        total = sum(p for p, _ in self.branches)
        if abs(total - 1) > 1e-12:
            raise ValueError(f"branch probabilities sum to {total}")
        for _, pattern in self.branches:
            if len(pattern) != self.n:
                raise ValueError("pattern length must equal n")

    def prefix_masses(self) -> np.ndarray:
        masses = np.zeros(self.n + 1)
        for p, pattern in self.branches:
            per = np.where(pattern, 1.0, 0.25)
            masses += p * np.concatenate([[1.0], np.cumprod(per)])
        return masses

    def sample(self, keys: np.ndarray, rng) -> np.ndarray:
        trials = keys.shape[0]
        probs = np.array([p for p, _ in self.branches])
        patterns = np.array([pat for _, pat in self.branches], dtype=bool)
        which = rng.choice(len(probs), size=trials, p=probs)
        correct = patterns[which]
        uniform = rng.integers(0, 4, size=keys.shape)
        return np.where(correct, keys, uniform)


def coin_then_correct(n: int, p: float) -> PlantedBatchDecoder:
    """All slots correct with probability p, otherwise uniform guesses."""
    return PlantedBatchDecoder(n, ((p, (True,) * n), (1 - p, (False,) * n)), f"coin({p})")


def perfect_batch(n: int) -> PlantedBatchDecoder:
    return PlantedBatchDecoder(n, ((1.0, (True,) * n),), "perfect")


def late_starter(n: int, p_bad: float = 0.5) -> PlantedBatchDecoder:
    """With probability p_bad the first slot is guessed uniformly; everything else is always correct."""
    return PlantedBatchDecoder(
        n, ((1 - p_bad, (True,) * n), (p_bad, (False,) + (True,) * (n - 1))), "late-starter"
    )


# --------------------------------------------------------------------------- batch -> single


def estimation_trials(n: int, lam: int, delta_prime: float, c: float = 64.0) -> int:
    """Default estimation budget ceil(c n^2 ln(lam) / ln(1/delta'))."""
    return math.ceil(c * n * n * math.log(lam) / math.log(1 / delta_prime))


def minimum_trials(n: int, lam: int, delta_prime: float, confidence: float = 0.95) -> int:
    """Fewest trials for which every alpha_i estimate has additive error at most ln(lam)/n.

    Conditioning events have mass at least delta', so each ratio estimate
    sees about delta' * T samples; Hoeffding plus a union bound over n slots.
    """
    err = min(1.0, math.log(lam) / n)
    return math.ceil(math.log(2 * n / (1 - confidence)) / (2 * (err * delta_prime) ** 2))


@dataclass(frozen=True)
class AlphaEstimates:
    alphas: tuple[float, ...]
    i_star: int  # 1-based
    trials: int
    seed: Optional[int]
    error_bound: float


@dataclass(eq=False)
class BatchSlotDecoder:
    """Single-slot superdense decoder built from a batch decoder.

    The real (B, R) goes into slot i*; the other slots are fresh copies masked
    with keys the decoder chose itself. F = 0 iff every slot before i* was
    decoded correctly; P is the guess for slot i*.
    """

    batch: BatchDecoder
    estimates: AlphaEstimates

    @property
    def i_star(self) -> int:
        return self.estimates.i_star

    def exact_score(self):
        m = self.batch.prefix_masses()
        gamma = float(m[self.i_star - 1])
        return make_score(gamma, float(m[self.i_star] / gamma) if gamma > 0 else None)

    def sampled_score(self, trials: int, rng, confidence: float = 0.95):
        n = self.batch.n
        keys = rng.integers(0, 4, size=(trials, n))
        guesses = self.batch.sample(keys, rng)
        correct = guesses == keys
        accept = correct[:, : self.i_star - 1].all(axis=1)
        hit = accept & correct[:, self.i_star - 1]
        acc = int(accept.sum())
        radius = hoeffding_radius(trials, confidence)
        seed = getattr(rng, "seed", None)
        if acc == 0:
            return DecoderScore(0.0, 0.0, mode="mc", trials=trials, seed=seed, undefined=True, radius=radius)
        return DecoderScore(acc / trials, epsilon_from_success(int(hit.sum()) / acc), mode="mc",
                            trials=trials, seed=seed, radius=radius)


def estimate_alphas(batch: BatchDecoder, trials: int, rng) -> tuple[np.ndarray, np.ndarray]:
    """Sampled conditional accuracies alpha_i and the prefix counts behind them."""
    n = batch.n
    keys = rng.integers(0, 4, size=(trials, n))
    correct = batch.sample(keys, rng) == keys
    prefix = np.cumprod(correct, axis=1).sum(axis=0)
    counts = np.concatenate([[trials], prefix])
    alphas = np.divide(counts[1:], counts[:-1], out=np.zeros(n), where=counts[:-1] > 0)
    return alphas, counts


def single_from_batch(
    batch: BatchDecoder,
    trials: Optional[int],
    rng,
    lam: int = 64,
    delta_prime: Optional[float] = None,
    confidence: float = 0.95,
) -> BatchSlotDecoder:
    n = batch.n
    if delta_prime is None:
        delta_prime = batch.batch_success()
    if delta_prime <= 0:
        raise ValueError("batch decoder never succeeds; nothing to amplify")
    need = minimum_trials(n, lam, delta_prime, confidence)
    if trials is None:
        trials = max(need, estimation_trials(n, lam, delta_prime))
    if trials < need:
        raise ValueError(f"{trials} trials cannot reach additive error ln(lam)/n; need {need}")
    alphas, _ = estimate_alphas(batch, trials, rng)
    best = alphas.max()
    i_star = int(np.flatnonzero(alphas == best)[0]) + 1
    est = AlphaEstimates(tuple(float(a) for a in alphas), i_star, trials, getattr(rng, "seed", None),
                         min(1.0, math.log(lam) / n))
    return BatchSlotDecoder(batch, est)


# --------------------------------------------------------------------------- estimation lemma


@dataclass(frozen=True)
class EstimationReport:
    epsilon: float
    threshold: float
    fraction: float
    delta: float
    applicable: bool
    holds: bool
    note: str = ""

    def to_json(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "threshold": self.threshold,
            "fraction": self.fraction,
            "delta": self.delta,
            "applicable": self.applicable,
            "holds": self.holds,
            "note": self.note,
        }


def estimation_check(alphas: Sequence[float], delta: float) -> EstimationReport:
    """At least a (1 - delta) fraction of indices have alpha_i > 1 - ln(1/eps)/(delta n), eps = prod alpha_i."""
    a = np.asarray(alphas, dtype=float)
    if a.size == 0:
        raise ValueError("need at least one alpha")
    if np.any((a < 0) | (a > 1)):
        raise ValueError("alphas must lie in [0, 1]")
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    n = a.size
    eps = float(np.prod(a))
    if eps == 0:
        return EstimationReport(0.0, float("nan"), 0.0, delta, False, True, "some alpha is 0: lemma inapplicable")
    if eps == 1:
        # threshold is exactly 1; with a non-strict comparison every index qualifies
        return EstimationReport(1.0, 1.0, 1.0, delta, True, True, "all alpha are 1: bound holds with equality")
    threshold = 1 - math.log(1 / eps) / (delta * n)
    fraction = float(np.mean(a > threshold))
    return EstimationReport(eps, threshold, fraction, delta, True, fraction >= 1 - delta)


def alphas_from_event_table(table: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Conditional rates from a joint distribution over event patterns.

    ``table[p]`` is the probability of pattern p, whose bit i (most significant
    first) says whether event i happened. Returns (alphas, prefix masses).
    """
    table = np.asarray(table, dtype=float)
    n = table.size.bit_length() - 1
    t = table.reshape((2,) * n)
    masses = [1.0]
    for i in range(1, n + 1):
        masses.append(float(t[(1,) * i].sum()))
    masses = np.array(masses)
    alphas = np.divide(masses[1:], masses[:-1], out=np.zeros(n), where=masses[:-1] > 0)
    return alphas, masses


def sample_event_sequences(alphas: Sequence[float], trials: int, rng) -> np.ndarray:
    """Prefix counts when event i happens with probability alpha_i given all earlier events."""
    a = np.asarray(alphas, dtype=float)
    draws = rng.random((trials, a.size)) < a
    prefix = np.cumprod(draws, axis=1).sum(axis=0)
    return np.concatenate([[trials], prefix])


def concordance(alphas: Sequence[float], trials: int, rng, confidence: float = 0.99) -> dict:
    """Compare sampled alpha estimates against the true values with a per-index Hoeffding radius."""
    a = np.asarray(alphas, dtype=float)
    counts = sample_event_sequences(a, trials, rng)
    est = np.divide(counts[1:], counts[:-1], out=np.full(a.size, np.nan), where=counts[:-1] > 0)
    beta = (1 - confidence) / a.size
    ok = True
    worst = 0.0
    for i in range(a.size):
        if counts[i] == 0:
            continue
        r = math.sqrt(math.log(2 / beta) / (2 * counts[i]))
        dev = abs(est[i] - a[i])
        worst = max(worst, dev / r)
        ok &= dev <= r
    return {"estimates": est.tolist(), "counts": counts.tolist(), "worstRatio": worst, "concordant": bool(ok)}
