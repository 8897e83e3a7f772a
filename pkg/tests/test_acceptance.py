"""Acceptance criteria, one test each, at the stated tolerances and runtime budgets.

Run with ``pytest tests/test_acceptance.py`` (or ``python tests/test_acceptance.py``);
the terminal summary prints one PASS/FAIL line per criterion.
"""

from __future__ import annotations

import io
import json
import math
import time

import jsonschema
import numpy as np
import pytest

from bhrd import amplification as amp
from bhrd import cli
from bhrd import decoding as dec
from bhrd import efi
from bhrd import goldreich_levin as gl
from bhrd import primitives as prim
from bhrd.qcore import (
    RegisterLayout,
    SeededRng,
    computational_distinguisher,
    constant_distinguisher,
    from_vector,
    helstrom_projector,
    projector_distinguisher,
    random_distinguisher,
    random_unitary,
    reduced_density,
    tensor_product,
    trace_distance,
)


class Budget:
    def __init__(self, seconds: float):
        self.seconds = seconds

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start
        return False

    def check(self):
        assert self.elapsed < self.seconds, f"took {self.elapsed:.1f} s, budget {self.seconds} s"


def _epr(a: str, b: str):
    st = prim.make_epr()
    return st.with_tensor(st.tensor, RegisterLayout.sequential((a, 1), (b, 1)))


@pytest.mark.criterion(1, "superdense coding and teleportation are exact")
def test_superdense_and_teleportation_exact():
    with Budget(5) as t:
        for k in prim.ALL_KEYS:
            p = prim.bell_distribution(prim.make_epr_xz(k), 0, 1)
            assert p[k] == pytest.approx(1.0, abs=1e-12)
        rng = SeededRng(2024)
        for i in range(100):
            sub = rng.spawn(i)
            v = random_unitary(2, sub)[:, 0]
            st = tensor_product(from_vector(v, RegisterLayout.sequential(("S", 1))), _epr("A", "B"))
            _, post = prim.teleport(st, 0, 1, 2, sub)
            fid = float(np.real(v.conj() @ reduced_density(post, [2]).matrix @ v))
            assert fid == pytest.approx(1.0, abs=1e-12)
    t.check()


def _small_instances(rng):
    return [
        dec.trivial_instance(),
        dec.noisy_trivial_instance(0.7),
        dec.product_instance(),
        dec.keyed_instance(),
        dec.random_instance(1, 2, rng.spawn(100)),
        dec.random_instance(2, 2, rng.spawn(101)),
    ]


@pytest.mark.criterion(2, "radiation and superdense decoding conversions preserve (gamma, epsilon)")
def test_equivalence_conversions_exact():
    rng = SeededRng(11)
    insts = _small_instances(rng)
    assert all(i.width <= 6 for i in insts)
    with Budget(120) as t:
        for i in range(50):
            inst = insts[i % len(insts)]
            sub = rng.spawn(i)
            if i % 2 == 0:
                rd = dec.random_radiation_decoder(inst.r, 1 + i % 3, sub)
                a = dec.eval_radiation_decoder(inst, rd)
                sd = dec.rad_to_superdense(rd)
                b = dec.eval_superdense_decoder(inst, sd)
                c = dec.eval_radiation_decoder(inst, dec.superdense_to_rad(sd))
            else:
                sd = dec.random_superdense_decoder(inst.r, 1 + i % 3, sub)
                a = dec.eval_superdense_decoder(inst, sd)
                rd = dec.superdense_to_rad(sd)
                b = dec.eval_radiation_decoder(inst, rd)
                c = dec.eval_superdense_decoder(inst, dec.rad_to_superdense(rd))
            for s in (b, c):
                assert abs(s.gamma - a.gamma) <= 1e-9
                assert abs(s.epsilon - a.epsilon) <= 1e-9
    t.check()


def _gl_families(rng):
    fams = []
    for idx, (n, m, aux) in enumerate([(2, 1, 0), (3, 1, 1), (4, 1, 0), (5, 1, 2), (6, 1, 0), (6, 2, 1)]):
        x = int(rng.spawn(idx).integers(0, 1 << n))
        fams.append(("perfect", gl.perfect(n, x, m), x, aux))
        fams.append(("antiperfect", gl.antiperfect(n, x, m), x, aux))
    for idx, (n, frac, aux) in enumerate([(3, 0.75, 0), (4, 0.25, 1), (5, 0.6, 0), (6, 0.3, 2), (6, 0.9, 1)]):
        sub = rng.spawn(50 + idx)
        x = int(sub.integers(0, 1 << n))
        fams.append(("noisy", gl.noisy(n, x, frac, sub), x, aux))
    for idx, (n, m, aux) in enumerate([(2, 2, 0), (3, 3, 1), (4, 4, 0), (4, 2, 2), (5, 3, 0), (6, 4, 1), (6, 2, 0)]):
        sub = rng.spawn(80 + idx)
        x = int(sub.integers(0, 1 << n))
        fams.append(("random", gl.random_family(n, x, m, sub), x, aux))
    return fams


@pytest.mark.criterion(3, "Goldreich-Levin extraction meets the (2 eps)^2 floor")
def test_goldreich_levin_bound():
    rng = SeededRng(5)
    fams = _gl_families(rng)
    assert len(fams) >= 20
    signs = set()
    with Budget(120) as t:
        for i, (kind, fam, x, aux) in enumerate(fams):
            assert fam.n <= 6 and fam.m <= 4
            phi = gl.zero_state(fam.m)
            if aux:
                phi = gl.with_aux(phi, from_vector(random_unitary(1 << aux, rng.spawn(200 + i))[:, 0]))
            rep = gl.gl_extract(fam, phi, x)
            signs.add(np.sign(round(rep.epsilon, 12)))
            assert rep.p_true >= rep.bound - 1e-9, (kind, fam.n, fam.m, rep.epsilon, rep.p_true)
            if kind == "perfect":
                assert rep.p_true == pytest.approx(1.0, abs=1e-9)
    assert {-1.0, 1.0} <= signs
    t.check()


@pytest.mark.criterion(4, "EFI pairs give radiation instances with the expected decoder scores")
def test_efi_to_bhrd():
    rng = SeededRng(17)
    with Budget(180) as t:
        pair = efi.perfect_pair()
        s = dec.eval_radiation_decoder(
            efi.bhrd_from_efi(pair), efi.decoder_from_pair_distinguisher(efi.helstrom_distinguisher(pair), 1)
        )
        assert s.gamma == pytest.approx(1.0, abs=1e-9)
        assert s.epsilon == pytest.approx(1.0, abs=1e-9)

        for theta in (math.pi / 12, math.pi / 6, math.pi / 4):
            pair = efi.theta_pair(theta)
            d = efi.helstrom_distinguisher(pair)
            eta = 1 - math.sin(theta)
            assert efi.pair_advantage(d, pair) == pytest.approx(math.sin(theta), abs=1e-12)
            s = dec.eval_radiation_decoder(efi.bhrd_from_efi(pair), efi.decoder_from_pair_distinguisher(d, 1))
            assert s.epsilon >= 1 - 4 / 3 * eta - 1e-9

        for j, pair in enumerate([efi.perfect_pair(), efi.theta_pair(math.pi / 6), efi.keyed_pair()]):
            inst = efi.bhrd_from_efi(pair, hybrid=2)
            st = inst.state
            rho_b = reduced_density(st, "B").matrix
            rho_r = reduced_density(st, "R").matrix
            rho_br = reduced_density(st, st.layout.wires("B", "R"))
            assert trace_distance(rho_br, np.kron(rho_b, rho_r)) <= 1e-12

            decoders = [
                efi.decoder_from_pair_distinguisher(efi.helstrom_distinguisher(pair), pair.r),
                efi.decoder_from_pair_distinguisher(computational_distinguisher(pair.r), pair.r),
                efi.decoder_from_pair_distinguisher(constant_distinguisher(pair.r, 1), pair.r),
                efi.decoder_from_pair_distinguisher(random_distinguisher(pair.r, 1, rng.spawn(j)), pair.r),
            ]
            if inst.r <= 3:
                decoders.append(dec.random_radiation_decoder(inst.r, 1, rng.spawn(10 + j)))
            for d in decoders:
                s = dec.eval_radiation_decoder(inst, d)
                assert s.gamma > 0
                assert abs(s.epsilon) <= 1e-12
    t.check()


@pytest.mark.criterion(5, "plain candidate: delta identity, decoder floor, strong-decoder advantage")
def test_bhrd_to_efi_plain():
    rng = SeededRng(23)
    inst = dec.trivial_instance()
    cand = amp.efi_plain(inst)
    with Budget(120) as t:
        ds = [projector_distinguisher(helstrom_projector(cand.rho0, cand.rho1))]
        ds += [random_distinguisher(cand.width, 1 + i % 2, rng.spawn(i)) for i in range(19)]
        for d in ds:
            _, rep = amp.superdense_from_plain_distinguisher(d, inst)
            assert rep.identity_gap <= 1e-10
            assert rep.success_measured >= rep.success_floor - 1e-9

        for eta in (0.0, 0.04):
            strong = dec.bell_superdense_decoder(inst.r)
            if eta:
                strong = dec.noisy_superdense_decoder(strong, 4 * eta / 3)
            assert amp.strong_decoder_eta(strong, inst) == pytest.approx(eta, abs=1e-12)
            d = amp.plain_distinguisher_from_strong_decoder(strong, inst)
            adv = float(np.real(np.trace(d.operator @ (cand.rho1 - cand.rho0))))
            assert adv >= 0.75 * (1 - 4 / 3 * eta) - 4 / 3 * eta - 1e-9
    t.check()


@pytest.mark.criterion(6, "GL candidate advantage, batch success floor, planted amplification")
def test_bhrd_to_efi_gl_and_amplification():
    inst = dec.trivial_instance()
    with Budget(600) as t:
        for n, eta in ((2, 0.0), (4, 0.01)):
            strong = dec.bell_superdense_decoder(inst.r)
            if eta:
                strong = dec.noisy_superdense_decoder(strong, 4 * eta / 3)
            adv = amp.slotwise_gl_advantage(strong, inst, n)
            assert adv >= 1 - 2 * n * eta - 1e-9
            if eta == 0:
                d = amp.gl_distinguisher_from_strong_decoder(strong, inst, n)
                assert amp.gl_candidate_advantage(d, amp.efi_gl(inst, n)) == pytest.approx(adv, abs=1e-9)

        rng = SeededRng(29)
        for n in (1, 2):
            cand = amp.efi_gl(inst, n)
            base = amp.gl_distinguisher_from_strong_decoder(dec.bell_superdense_decoder(1), inst, n)
            ds = [
                base,
                amp.corrupted_distinguisher(base, inst, n, range(0, 1 << (2 * n), 4)),
                constant_distinguisher(cand.width),
            ]
            if n == 1:
                ds += [random_distinguisher(cand.width, 1, rng.spawn(i)) for i in range(4)]
            for d in ds:
                delta = amp.gl_candidate_advantage(d, cand)
                if delta < 0:
                    d, delta = d.negated(), -delta
                success = amp.batch_from_distinguisher(d, inst, n).batch_success()
                assert success >= (delta / 2) ** 3 - 1e-6

        batch = amp.coin_then_correct(16, 0.3)
        single = amp.single_from_batch(batch, 10_000, SeededRng(7).spawn(0), lam=64)
        score = single.sampled_score(10_000, SeededRng(7).spawn(1))
        assert 0.25 <= score.gamma <= 0.4
        assert score.epsilon >= 0.9
    t.check()


@pytest.mark.criterion(7, "estimation lemma: no violations, worked threshold, telescoping")
def test_estimation_lemma():
    rng = SeededRng(31)
    with Budget(60) as t:
        violations = 0
        for i in range(1000):
            sub = rng.spawn(i)
            n = int(sub.integers(1, 41))
            alphas = sub.uniform(0.0, 1.0, size=n) ** sub.uniform(0.01, 1.0)
            for delta in (0.1, 0.5, 0.9):
                violations += not amp.estimation_check(alphas, delta).holds
        assert violations == 0

        rep = amp.estimation_check([0.9] * 10, 0.5)
        assert rep.threshold == pytest.approx(0.78927, abs=1e-5)
        assert rep.fraction == 1.0

        for i in range(20):
            sub = rng.spawn(5000 + i)
            n = int(sub.integers(1, 9))
            table = sub.dirichlet(np.ones(1 << n))
            alphas, masses = amp.alphas_from_event_table(table)
            assert abs(np.prod(alphas) - table[-1]) <= 1e-12
            assert abs(np.prod(alphas) - masses[-1]) <= 1e-12
        for batch in (amp.coin_then_correct(12, 0.3), amp.late_starter(12, 0.4), amp.perfect_batch(12)):
            m = batch.prefix_masses()
            alphas = np.divide(m[1:], m[:-1], out=np.zeros(batch.n), where=m[:-1] > 0)
            assert abs(np.prod(alphas) - m[-1]) <= 1e-12
    t.check()


@pytest.mark.criterion(8, "guessing game, hybrid lift and repetition distance")
def test_guessing_game_lift_and_repetition():
    rng = SeededRng(37)
    with Budget(60) as t:
        pairs = [efi.perfect_pair(), efi.theta_pair(0.4), efi.keyed_pair(), efi.theta_pair(1.1)]
        for i in range(20):
            pair = pairs[i % len(pairs)]
            d = random_distinguisher(pair.r, 1 + i % 2, rng.spawn(i))
            assert efi.guess_game(d, pair) == pytest.approx(0.5 + efi.pair_advantage(d, pair) / 2, abs=1e-10)

        for i in range(10):
            pair = pairs[i % len(pairs)]
            dprime = random_distinguisher(1 + pair.r, 1, rng.spawn(100 + i))
            p0, p1 = efi.primed_densities(pair)
            eps = float(np.real(np.trace(dprime.operator @ (p1 - p0))))
            lifted = efi.pair_advantage(efi.hybrid_lift(dprime), pair)
            assert lifted == pytest.approx(2 * eps, abs=1e-10)

        for theta in (0.3, math.pi / 5, 1.2):
            for k in range(1, 9):
                got = efi.statistical_distance(efi.repeat_pair(efi.theta_pair(theta), k))
                assert got == pytest.approx(math.sqrt(1 - math.cos(theta) ** (2 * k)), abs=1e-10)
    t.check()


CLI_RUNS = [
    ["bell-check"],
    ["teleport-check", "--trials", "20", "--seed", "3"],
    ["score", "--kind", "sd", "--decoder", "noisy", "--instance", "keyed"],
    ["score", "--instance", "random", "--decoder", "random", "--mode", "mc", "--trials", "500", "--seed", "4"],
    ["reduce", "--direction", "roundtrip", "--instance", "trivial", "--seed", "7"],
    ["efi2bhrd", "--pair", "theta", "--theta", "0.5"],
    ["efi2bhrd", "--pair", "perfect", "--hybrid", "2"],
    ["bhrd2efi", "--mode", "plain"],
    ["bhrd2efi", "--mode", "gl", "--n", "4", "--eta", "0.01"],
    ["gl", "--predictor", "random", "--n", "4", "--seed", "9", "--aux", "1"],
    ["amplify", "--n", "16", "--trials", "10000", "--seed", "7"],
    ["amplify", "--source", "gl", "--n", "1", "--seed", "1"],
    ["estlemma", "--alphas", "0.9,0.9,0.9,0.9,0.9,0.9,0.9,0.9,0.9,0.9", "--delta", "0.5"],
    ["estlemma", "--random", "30", "--seed", "2"],
    ["score", "--instance", "missing"],
    ["amplify", "--n", "16", "--trials", "10", "--seed", "7"],
]


def _run(argv):
    buf = io.StringIO()
    code = cli.run(argv, stdout=buf)
    return code, buf.getvalue()


@pytest.mark.criterion(9, "CLI reports are deterministic and schema-valid")
def test_cli_determinism_and_schema(monkeypatch):
    monkeypatch.delenv(cli.OUTPUT_DIR_ENV, raising=False)
    schema = cli.load_schema()
    for argv in CLI_RUNS:
        code1, text1 = _run(argv)
        code2, text2 = _run(argv)
        r1, r2 = json.loads(text1), json.loads(text2)
        jsonschema.validate(r1, schema)
        assert code1 == code2
        r1.pop("timestamp"), r2.pop("timestamp")
        assert json.dumps(r1, sort_keys=True) == json.dumps(r2, sort_keys=True), argv
        if "error" in r1:
            assert code1 == 2
        else:
            assert code1 == (0 if r1["ok"] else 1)
            assert r1["version"] and r1["config"]["seed"] is not None
        code_csv1, csv1 = _run(argv + ["--format", "csv"])
        code_csv2, csv2 = _run(argv + ["--format", "csv"])
        if code_csv1 != 2:
            assert csv1 == csv2


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
