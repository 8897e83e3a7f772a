"""Quantum Goldreich-Levin extraction.

A predictor family is a controlled unitary U = sum_r |r><r| (x) U_r on m work
qubits. Given a state phi (m work qubits, then any number of auxiliary wires
U never touches), the extractor runs

    H^n on r;  X on the flag;  U;  CZ(output, flag);  U^dagger;  H^n

and measures r. If the output bit of U_r phi agrees with r.x with average
probability 1/2 + eps, the result is x with probability at least (2 eps)^2.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .qcore import Gate, Op, PureState, RegisterLayout, Select, adjoint, apply_ops, gates, random_unitary
from .qcore.ops import apply_gate, op_wires, ops_unitary, remap

MAX_N = 12
VARIANTS = ("standard", "flag_z", "flag_h")


def inner(r: int, x: int) -> int:
    return bin(r & x).count("1") & 1


@dataclass(frozen=True, eq=False)
class PredictorFamily:
    """``branches[r]`` acts on work wires 0..m-1; ``output`` is the work wire holding the prediction."""

    n: int
    m: int
    branches: tuple[tuple[Op, ...], ...]
    output: int = 0

    def __post_init__(self):
        if not 1 <= self.n <= MAX_N:
            raise ValueError(f"n must be in [1, {MAX_N}], got {self.n}")
        if len(self.branches) != 1 << self.n:
            raise ValueError(f"need {1 << self.n} branches, got {len(self.branches)}")
        if not 0 <= self.output < self.m:
            raise ValueError("output wire outside the work register")
        for br in self.branches:
            for op in br:
                if any(not 0 <= w < self.m for w in op_wires(op)):
                    raise ValueError("branch acts outside the work register")

    @classmethod
    def from_unitaries(cls, n: int, mats: Sequence[np.ndarray], output: int = 0) -> "PredictorFamily":
        mats = [np.asarray(u, dtype=complex) for u in mats]
        m = mats[0].shape[0].bit_length() - 1
        return cls(n, m, tuple((Gate(u, tuple(range(m))),) for u in mats), output)

    @classmethod
    def from_function(cls, n: int, f: Callable[[int], int], m: int = 1) -> "PredictorFamily":
        """Deterministic classical predictor: U_r flips the output iff f(r) = 1."""
        branches = tuple((Gate(gates.X, (0,)),) if f(r) else () for r in range(1 << n))
        return cls(n, m, branches)

    def block(self, r: int) -> np.ndarray:
        return ops_unitary(self.branches[r], self.m)

    def controlled(self, r_wires: Sequence[int], work_wires: Sequence[int]) -> Select:
        return Select(tuple(r_wires), tuple(remap(b, list(work_wires)) for b in self.branches))


def perfect(n: int, x: int, m: int = 1) -> PredictorFamily:
    return PredictorFamily.from_function(n, lambda r: inner(r, x), m)


def antiperfect(n: int, x: int, m: int = 1) -> PredictorFamily:
    return flip_output(perfect(n, x, m))


def flip_output(p: PredictorFamily) -> PredictorFamily:
    x_out = Gate(gates.X, (p.output,))
    return PredictorFamily(p.n, p.m, tuple(tuple(b) + (x_out,) for b in p.branches), p.output)


def noisy(n: int, x: int, fraction: float, rng, m: int = 1) -> PredictorFamily:
    """Correct on a fixed random set of round(fraction * 2^n) values of r, wrong on the rest."""
    size = 1 << n
    good = set(rng.permutation(size)[: int(round(fraction * size))].tolist())
    return PredictorFamily.from_function(n, lambda r: inner(r, x) ^ (r not in good), m)


def random_family(n: int, x: int, m: int, rng, correct: Optional[float] = None) -> PredictorFamily:
    """Mixed-quality family with random phases and work-register scrambling.

    Each r is Haar-random with probability 1/10, otherwise correct with
    probability c = ``correct`` (random if omitted) and wrong with the rest.
    """
    c = rng.uniform(0.0, 0.9) if correct is None else min(correct, 0.9)
    branches = []
    for r in range(1 << n):
        u = rng.uniform()
        ops: list[Op] = []
        if u < 0.1:
            ops.append(Gate(random_unitary(1 << m, rng), tuple(range(m))))
        else:
            if m > 1:
                ops.append(Gate(random_unitary(1 << (m - 1), rng), tuple(range(1, m))))
            ops.append(Gate(gates.phase(rng.uniform(0, 2 * np.pi)), (0,)))
            wrong = u >= 0.1 + c
            if inner(r, x) ^ wrong:
                ops.append(Gate(gates.X, (0,)))
            if m > 1:
                # entangle the prediction with the scratch space without changing it
                ops.append(Gate(gates.CNOT, (0, 1)))
        branches.append(tuple(ops))
    return PredictorFamily(n, m, tuple(branches))


PRESETS = ("perfect", "antiperfect", "noisy", "random")


def family_by_name(name: str, n: int, x: int, rng, fraction: float = 0.75, m: int = 1) -> PredictorFamily:
    if name == "perfect":
        return perfect(n, x, m)
    if name == "antiperfect":
        return antiperfect(n, x, m)
    if name == "noisy":
        return noisy(n, x, fraction, rng, m)
    if name == "random":
        return random_family(n, x, max(m, 2), rng)
    raise ValueError(f"unknown predictor {name!r}; known: {list(PRESETS)}")


def _check(p: PredictorFamily, phi: PureState) -> None:
    if phi.n < p.m:
        raise ValueError(f"phi has {phi.n} qubits, the work register needs {p.m}")


def correlation_epsilon(p: PredictorFamily, x: int, phi: PureState) -> float:
    """E_r Pr[output of U_r phi = r.x] - 1/2, exactly over all r."""
    _check(p, phi)
    psi = phi.tensor
    total = 0.0
    for r, branch in enumerate(p.branches):
        out = apply_ops(psi, branch)
        total += float(np.sum(np.abs(np.take(out, inner(r, x), axis=p.output)) ** 2))
    return total / (1 << p.n) - 0.5


@dataclass(frozen=True)
class GlReport:
    epsilon: float
    p_true: float
    distribution: np.ndarray = field(repr=False)
    sample: Optional[int] = None

    @property
    def bound(self) -> float:
        return (2 * self.epsilon) ** 2

    @property
    def holds(self) -> bool:
        return self.p_true >= self.bound - 1e-9


def gl_state(p: PredictorFamily, phi: PureState, variant: str = "standard") -> np.ndarray:
    """Final tensor over (r: n wires, phi wires, flag) before measuring r."""
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    _check(p, phi)
    n, w = p.n, phi.n
    r_wires = list(range(n))
    work = list(range(n, n + p.m))
    flag = n + w
    psi = np.zeros((2,) * n + phi.tensor.shape + (2,), dtype=complex)
    psi[(0,) * n + (slice(None),) * w + (0,)] = phi.tensor
    for q in r_wires:
        psi = apply_gate(psi, gates.H, [q])
    psi = apply_gate(psi, gates.X, [flag])
    u = p.controlled(r_wires, work)
    psi = apply_ops(psi, [u])
    psi = apply_gate(psi, gates.CZ, [work[p.output], flag])
    if variant == "flag_z":
        psi = apply_gate(psi, gates.Z, [flag])
    psi = apply_ops(psi, adjoint([u]))
    for q in r_wires:
        psi = apply_gate(psi, gates.H, [q])
    if variant == "flag_h":
        psi = apply_gate(psi, gates.H, [flag])
    return psi


def candidate_distribution(p: PredictorFamily, phi: PureState, variant: str = "standard") -> np.ndarray:
    psi = gl_state(p, phi, variant)
    probs = np.abs(psi.reshape(1 << p.n, -1)) ** 2
    return probs.sum(axis=1)


def gl_extract(
    p: PredictorFamily,
    phi: PureState,
    x: Optional[int] = None,
    rng=None,
    variant: str = "standard",
) -> GlReport:
    """Exact candidate distribution; optionally one sampled candidate."""
    dist = candidate_distribution(p, phi, variant)
    sample = int(rng.choice(dist.size, p=dist / dist.sum())) if rng is not None else None
    if x is None:
        return GlReport(float("nan"), float("nan"), dist, sample)
    eps = correlation_epsilon(p, x, phi)
    return GlReport(eps, float(dist[x]), dist, sample)


def zero_state(m: int) -> PureState:
    amps = np.zeros(1 << m, dtype=complex)
    amps[0] = 1.0
    return PureState(RegisterLayout.sequential(("W", m)), amps)


def with_aux(phi: PureState, aux: PureState) -> PureState:
    """phi followed by spectator wires."""
    return PureState(RegisterLayout.sequential(("W", phi.n), ("A", aux.n)), np.kron(phi.amplitudes, aux.amplitudes))
