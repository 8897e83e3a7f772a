"""Command-line experiment runner.

Every subcommand prints (or writes) one schema-versioned report and exits 0
iff all of its checks pass. Runs are deterministic given ``--seed``; only the
``timestamp`` field varies between identical invocations.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path
from typing import Any, Callable

import jsonschema
import numpy as np

from . import __version__
from . import amplification as amp
from . import decoding as dec
from . import efi
from . import goldreich_levin as gl
from . import primitives as prim
from .qcore import (
    ATOL_ALGEBRA,
    ATOL_REDUCTION,
    ATOL_SPECTRAL,
    MAX_DENSITY_QUBITS,
    ChannelError,
    LayoutError,
    RegisterLayout,
    SeededRng,
    SizeLimitError,
    computational_distinguisher,
    constant_distinguisher,
    epr_overlap,
    from_vector,
    helstrom_projector,
    projector_distinguisher,
    random_unitary,
    reduced_density,
    tensor_product,
    trace_distance,
)

SCHEMA_VERSION = "bhrd-report/1"
# widest dilation whose isometry the circuit cross-check will build
CIRCUIT_WIDTH = 16
OUTPUT_DIR_ENV = "BHRD_OUTPUT_DIR"


@dataclass
class Outcome:
    results: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)
    rows: list = field(default_factory=list)

    def check(self, name: str, value, bound, passed: bool) -> None:
        self.checks.append({"name": name, "value": _num(value), "bound": _num(bound), "passed": bool(passed)})

    def at_most(self, name: str, value: float, bound: float) -> None:
        self.check(name, value, bound, value <= bound)

    def at_least(self, name: str, value: float, bound: float) -> None:
        self.check(name, value, bound, value >= bound)


def _num(v):
    if isinstance(v, (bool, str)) or v is None:
        return v
    v = float(v)
    return None if math.isnan(v) else v


def load_schema() -> dict:
    return json.loads(resources.files("bhrd").joinpath("report.schema.json").read_text())


# --------------------------------------------------------------------------- subcommands


def cmd_bell_check(args, rng: SeededRng) -> Outcome:
    out = Outcome()
    bell = [prim.make_epr_xz(k).amplitudes for k in prim.ALL_KEYS]
    completeness = np.abs(sum(np.outer(v, v.conj()) for v in bell) - np.eye(4)).max()
    out.at_most("bell_completeness", completeness, ATOL_ALGEBRA)
    out.check("readout_calibration", prim.calibrate_readout() == prim.READOUT, True,
              prim.calibrate_readout() == prim.READOUT)
    worst = 0.0
    for k in prim.ALL_KEYS:
        p = prim.bell_distribution(prim.make_epr_xz(k), 0, 1)[k]
        worst = max(worst, 1 - p)
        out.rows.append({"x": k.x, "z": k.z, "p_correct": p})
    out.at_most("superdense_roundtrip", worst, ATOL_ALGEBRA)
    sampled = [prim.bell_readout(prim.make_epr_xz(k), 0, 1, rng.spawn(i))[0].key == k
               for i, k in enumerate(prim.ALL_KEYS)]
    out.check("sampled_roundtrip", all(sampled), True, all(sampled))
    out.results = {"readout": {f"{b}{d}": [k.x, k.z] for (b, d), k in prim.READOUT.items()}}
    return out


def cmd_teleport_check(args, rng: SeededRng) -> Outcome:
    out = Outcome()
    worst_fid = 0.0
    worst_branch = 0.0
    for i in range(args.trials):
        sub = rng.spawn(i)
        v = random_unitary(2, sub)[:, 0]
        st = tensor_product(from_vector(v, RegisterLayout.sequential(("S", 1))), _renamed_epr())
        k, post = prim.teleport(st, 0, 1, 2, sub)
        fid = float(np.real(v.conj() @ reduced_density(post, [2]).matrix @ v))
        worst_fid = max(worst_fid, abs(1 - fid))
        for kk, (p, br) in prim.teleport_branches(st, 0, 1, 2).items():
            if p > 0:
                f = float(np.real(v.conj() @ reduced_density(br, [2]).matrix @ v))
                worst_branch = max(worst_branch, abs(1 - f))
        out.rows.append({"trial": i, "x": k.x, "z": k.z, "fidelity": fid})
    out.at_most("teleport_fidelity", worst_fid, ATOL_ALGEBRA)
    out.at_most("outcome_independence", worst_branch, ATOL_ALGEBRA)
    # entanglement swapping: teleport half of a fresh pair
    pair = prim.make_epr()
    st = tensor_product(pair, _renamed_epr("C", "D"))
    _, post = prim.teleport(st, 1, 2, 3, rng.spawn(args.trials))
    swap = epr_overlap(reduced_density(post, [0, 3]))
    out.at_most("entanglement_swap", abs(1 - swap), ATOL_ALGEBRA)
    out.results = {"trials": args.trials, "worstInfidelity": worst_fid, "swapOverlap": swap}
    return out


def _renamed_epr(a: str = "A", b: str = "B"):
    st = prim.make_epr()
    return st.with_tensor(st.tensor, RegisterLayout.sequential((a, 1), (b, 1)))


INSTANCES: dict[str, Callable[..., dec.RadiationInstance]] = {
    "trivial": lambda a, rng: dec.trivial_instance(a.lam),
    "keyed": lambda a, rng: dec.keyed_instance(lam=a.lam),
    "noisy": lambda a, rng: dec.noisy_trivial_instance(a.theta, a.lam),
    "product": lambda a, rng: dec.product_instance(lam=a.lam),
    "random": lambda a, rng: dec.random_instance(1, 2, rng, a.lam),
}


def _instance(args, rng) -> dec.RadiationInstance:
    try:
        return INSTANCES[args.instance](args, rng)
    except KeyError:
        raise ValueError(f"unknown instance {args.instance!r}; known: {sorted(INSTANCES)}") from None


def _rad_decoder(name: str, inst, rng) -> dec.RadiationDecoder:
    table = {
        "identity": lambda: dec.identity_radiation_decoder(inst.r),
        "mixed": lambda: dec.mixed_radiation_decoder(inst.r),
        "random": lambda: dec.random_radiation_decoder(inst.r, 2, rng),
        "coin": lambda: dec.coin_failure(dec.identity_radiation_decoder(inst.r)),
    }
    if name not in table:
        raise ValueError(f"unknown radiation decoder {name!r}; known: {sorted(table)}")
    return table[name]()


def _sd_decoder(name: str, inst, rng, q: float) -> dec.SuperdenseDecoder:
    table = {
        "bell": lambda: dec.bell_superdense_decoder(inst.r),
        "uniform": lambda: dec.uniform_superdense_decoder(inst.r),
        "failing": lambda: dec.failing_superdense_decoder(inst.r),
        "noisy": lambda: dec.noisy_superdense_decoder(dec.bell_superdense_decoder(inst.r), q),
        "random": lambda: dec.random_superdense_decoder(inst.r, 2, rng),
    }
    if name not in table:
        raise ValueError(f"unknown superdense decoder {name!r}; known: {sorted(table)}")
    return table[name]()


def _score_checks(out: Outcome, s: dec.DecoderScore, prefix: str = "") -> None:
    out.check(f"{prefix}gamma_range", s.gamma, "[0,1]", -ATOL_REDUCTION <= s.gamma <= 1 + ATOL_REDUCTION)
    out.at_least(f"{prefix}epsilon_floor", s.epsilon, -1 / 3 - ATOL_REDUCTION)


def cmd_score(args, rng: SeededRng) -> Outcome:
    out = Outcome()
    inst = _instance(args, rng.spawn(0))
    drng = rng.spawn(1)
    if args.kind == "rad":
        d = _rad_decoder(args.decoder or "identity", inst, drng)
        s = (dec.eval_radiation_decoder(inst, d) if args.mode == "exact"
             else dec.eval_radiation_decoder_mc(inst, d, args.trials, rng.spawn(2)))
    else:
        d = _sd_decoder(args.decoder or "bell", inst, drng, args.q)
        s = (dec.eval_superdense_decoder(inst, d) if args.mode == "exact"
             else dec.eval_superdense_decoder_mc(inst, d, args.trials, rng.spawn(2)))
    if s.mode == "mc":
        s = dec.DecoderScore(s.gamma, s.epsilon, "mc", s.trials, args.seed, s.undefined, s.radius)
    _score_checks(out, s)
    out.results = {"score": s.to_json(), "instance": inst.name, "width": inst.width}
    out.rows.append({"gamma": s.gamma, "epsilon": s.epsilon, "effectiveness": s.effectiveness})
    return out


def cmd_reduce(args, rng: SeededRng) -> Outcome:
    out = Outcome()
    inst = _instance(args, rng.spawn(0))
    worst_g = worst_e = 0.0
    for i in range(args.count):
        drng = rng.spawn(i + 1)
        if args.direction in ("rad2sd", "roundtrip"):
            rd = dec.random_radiation_decoder(inst.r, args.ancillas, drng)
            before = dec.eval_radiation_decoder(inst, rd)
            sd = dec.rad_to_superdense(rd)
            after = (dec.eval_radiation_decoder(inst, dec.superdense_to_rad(sd))
                     if args.direction == "roundtrip" else dec.eval_superdense_decoder(inst, sd))
        else:
            sd = dec.random_superdense_decoder(inst.r, args.ancillas, drng)
            before = dec.eval_superdense_decoder(inst, sd)
            after = dec.eval_radiation_decoder(inst, dec.superdense_to_rad(sd))
        dg, de = abs(before.gamma - after.gamma), abs(before.epsilon - after.epsilon)
        worst_g, worst_e = max(worst_g, dg), max(worst_e, de)
        out.rows.append({"index": i, "gammaIn": before.gamma, "epsilonIn": before.epsilon,
                         "gammaOut": after.gamma, "epsilonOut": after.epsilon})
    out.at_most("delta_gamma", worst_g, ATOL_REDUCTION)
    out.at_most("delta_epsilon", worst_e, ATOL_REDUCTION)
    out.results = {"direction": args.direction, "instance": inst.name, "count": args.count,
                   "deltaGamma": worst_g, "deltaEpsilon": worst_e}
    return out


def cmd_efi2bhrd(args, rng: SeededRng) -> Outcome:
    out = Outcome()
    pair = efi.pair_by_name(args.pair, theta=args.theta)
    inst = efi.bhrd_from_efi(pair, hybrid=args.hybrid, lam=args.lam)
    dist = {
        "helstrom": lambda: efi.helstrom_distinguisher(pair),
        "computational": lambda: computational_distinguisher(pair.r),
        "constant": lambda: constant_distinguisher(pair.r),
    }
    if args.distinguisher not in dist:
        raise ValueError(f"unknown distinguisher {args.distinguisher!r}; known: {sorted(dist)}")
    d = dist[args.distinguisher]()
    decoder = efi.decoder_from_pair_distinguisher(d, pair.r)
    grid = [dec.eval_radiation_decoder(efi.bhrd_from_efi(pair, hybrid=h, lam=args.lam), decoder) for h in (0, 1, 2)]
    s = grid[args.hybrid]
    sd = efi.statistical_distance(pair)
    eta = 1 - efi.pair_advantage(d, pair)
    _score_checks(out, s)
    if args.hybrid == 0:
        out.at_least("epsilon_bound", s.epsilon, 1 - 4 / 3 * eta - ATOL_REDUCTION)
    if args.hybrid == 2:
        out.at_most("hybrid2_epsilon", abs(s.epsilon), ATOL_ALGEBRA)
        st = inst.state
        rho_br = reduced_density(st, st.layout.wires("B", "R"))
        rho_b = reduced_density(st, "B").matrix
        rho_r = reduced_density(st, "R").matrix
        gap = trace_distance(rho_br, np.kron(rho_b, rho_r))
        out.at_most("hybrid2_tensor_product", gap, ATOL_ALGEBRA)
    out.results = {"pair": pair.name, "hybrid": args.hybrid, "statisticalDistance": sd, "eta": eta,
                   "epsilon": s.epsilon, "gamma": s.gamma, "score": s.to_json(), "width": inst.width,
                   "hybrids": [{"h": h, **g.to_json()} for h, g in enumerate(grid)]}
    out.rows = [{"hybrid": h, "gamma": g.gamma, "epsilon": g.epsilon} for h, g in enumerate(grid)]
    return out


def cmd_bhrd2efi(args, rng: SeededRng) -> Outcome:
    out = Outcome()
    inst = _instance(args, rng.spawn(0))
    strong = dec.bell_superdense_decoder(inst.r)
    if args.eta > 0:
        strong = dec.noisy_superdense_decoder(strong, 4 * args.eta / 3)
    if args.mode == "plain":
        cand = amp.efi_plain(inst)
        h = projector_distinguisher(helstrom_projector(cand.rho0, cand.rho1))
        _, rep = amp.superdense_from_plain_distinguisher(h, inst)
        out.at_most("delta_identity", rep.identity_gap, ATOL_SPECTRAL)
        out.at_least("success_floor", rep.success_measured, rep.success_floor - ATOL_REDUCTION)
        results = {"statisticalDistance": amp.plain_distance(cand), **rep.to_json()}
        try:
            eta = amp.strong_decoder_eta(strong, inst)
            dist = amp.plain_distinguisher_from_strong_decoder(strong, inst)
            adv = float(np.real(np.trace(dist.operator @ (cand.rho1 - cand.rho0))))
            out.at_least("strong_advantage", adv, 0.75 * (1 - 4 / 3 * eta) - 4 / 3 * eta - ATOL_REDUCTION)
            results.update({"eta": eta, "strongAdvantage": adv})
        except ChannelError as exc:
            results["strongDecoder"] = str(exc)
    else:
        n = args.n or 2
        eta = amp.strong_decoder_eta(strong, inst)
        adv = amp.slotwise_gl_advantage(strong, inst, n)
        results = {"n": n, "eta": eta, "advantage": adv}
        cand = amp.efi_gl(inst, n)
        d = amp.gl_distinguisher_from_strong_decoder(strong, inst, n)
        if cand.width <= MAX_DENSITY_QUBITS and d.channel.width <= CIRCUIT_WIDTH:
            exact = amp.gl_candidate_advantage(d, cand)
            results.update({"advantageCircuit": exact, "statisticalDistance": amp.gl_distance(cand)})
            out.at_most("advantage_routes_agree", abs(exact - adv), ATOL_REDUCTION)
        out.at_least("gl_advantage", adv, 1 - 2 * n * eta - ATOL_REDUCTION)
    out.results = results
    out.rows.append({k: v for k, v in results.items() if isinstance(v, (int, float))})
    return out


def cmd_gl(args, rng: SeededRng) -> Outcome:
    out = Outcome()
    n = args.n or 4
    x = args.x if args.x is not None else int(rng.integers(0, 1 << n))
    fam = gl.family_by_name(args.predictor, n, x, rng.spawn(0), fraction=args.fraction, m=args.m)
    phi = gl.zero_state(fam.m)
    if args.aux:
        aux = from_vector(random_unitary(1 << args.aux, rng.spawn(1))[:, 0])
        phi = gl.with_aux(phi, aux)
    rep = gl.gl_extract(fam, phi, x, rng.spawn(2))
    dists = [gl.candidate_distribution(fam, phi, v) for v in gl.VARIANTS]
    spread = max(float(np.abs(d - dists[0]).max()) for d in dists)
    out.at_least("extraction_bound", rep.p_true, rep.bound - ATOL_REDUCTION)
    out.at_most("variant_agreement", spread, ATOL_ALGEBRA)
    out.at_most("normalization", abs(rep.distribution.sum() - 1), ATOL_SPECTRAL)
    out.results = {"predictor": args.predictor, "n": n, "m": fam.m, "x": x, "epsilon": rep.epsilon,
                   "pTrue": rep.p_true, "bound": rep.bound, "sample": rep.sample, "aux": args.aux}
    out.rows = [{"candidate": i, "probability": float(p)} for i, p in enumerate(rep.distribution)]
    return out


PLANTED = {
    "coin": lambda n, p: amp.coin_then_correct(n, p),
    "perfect": lambda n, p: amp.perfect_batch(n),
    "late": lambda n, p: amp.late_starter(n, p),
}


def cmd_amplify(args, rng: SeededRng) -> Outcome:
    out = Outcome()
    if args.source == "gl":
        n = args.n or 1
        if n > 2:
            raise SizeLimitError("the extractor-based batch decoder is exact only for n <= 2 slots")
        inst = dec.trivial_instance(args.lam)
        base = amp.gl_distinguisher_from_strong_decoder(dec.bell_superdense_decoder(1), inst, n)
        d = amp.corrupted_distinguisher(base, inst, n, range(0, 1 << (2 * n), 4))
        delta = amp.gl_candidate_advantage(d, amp.efi_gl(inst, n))
        batch = amp.batch_from_distinguisher(d, inst, n)
        succ = batch.batch_success()
        out.at_least("batch_success", succ, (delta / 2) ** 3 - 1e-6)
        extra = {"delta": delta, "batchSuccess": succ, "batchFloor": (delta / 2) ** 3}
    else:
        n = args.n or amp.default_slots(args.lam)
        if args.family not in PLANTED:
            raise ValueError(f"unknown planted family {args.family!r}; known: {sorted(PLANTED)}")
        batch = PLANTED[args.family](n, args.p)
        extra = {"family": args.family}
    delta_prime = batch.batch_success()
    single = amp.single_from_batch(batch, args.trials, rng.spawn(0), lam=args.lam, delta_prime=delta_prime)
    exact = single.exact_score()
    sampled = single.sampled_score(single.estimates.trials, rng.spawn(1))
    masses = batch.prefix_masses()
    prefix = float(masses[single.i_star - 1])
    out.at_most("acceptance_matches_prefix", abs(sampled.gamma - prefix), sampled.radius)
    out.at_least("gamma_floor", exact.gamma, delta_prime - ATOL_REDUCTION)
    floor = 1 - 2 * math.log(1 / delta_prime) / n if delta_prime < 1 else 1.0
    out.at_least("epsilon_floor", exact.epsilon, floor - ATOL_REDUCTION)
    out.results = {
        "n": n,
        "deltaPrime": delta_prime,
        "alphas": list(single.estimates.alphas),
        "iStar": single.i_star,
        "gamma": sampled.gamma,
        "epsilon": sampled.epsilon,
        "gammaExact": exact.gamma,
        "epsilonExact": exact.epsilon,
        "radius": sampled.radius,
        "seed": args.seed,
        "trials": single.estimates.trials,
        "minimumTrials": amp.minimum_trials(n, args.lam, delta_prime),
        "errorBound": single.estimates.error_bound,
        **extra,
    }
    out.rows = [{"slot": i + 1, "alpha": a, "prefixMass": float(masses[i + 1])}
                for i, a in enumerate(single.estimates.alphas)]
    return out


def cmd_estlemma(args, rng: SeededRng) -> Outcome:
    out = Outcome()
    if args.alphas:
        alphas = [float(v) for v in args.alphas.split(",") if v.strip()]
        rep = amp.estimation_check(alphas, args.delta)
        out.check("lemma_holds", rep.fraction, 1 - args.delta, rep.holds)
        conc = amp.concordance(alphas, args.trials, rng.spawn(0)) if rep.applicable else None
        if conc is not None:
            out.check("concordance", conc["worstRatio"], 1.0, conc["concordant"])
        out.results = {**rep.to_json(), "alphas": alphas, "concordance": conc}
        out.rows = [{"index": i + 1, "alpha": a, "above": a > rep.threshold} for i, a in enumerate(alphas)]
    else:
        k = args.random or 1000
        deltas = [args.delta] if args.delta_given else [0.25, 0.5, 0.75]
        violations = 0
        for i in range(k):
            sub = rng.spawn(i)
            n = int(sub.integers(1, 33))
            alphas = sub.uniform(0.5, 1.0, size=n)
            for delta in deltas:
                rep = amp.estimation_check(alphas, delta)
                violations += not rep.holds
                out.rows.append({"vector": i, "n": n, "delta": delta, "epsilon": rep.epsilon,
                                 "threshold": rep.threshold, "fraction": rep.fraction})
        out.check("violations", violations, 0, violations == 0)
        out.results = {"vectors": k, "deltas": deltas, "violations": violations}
    return out


COMMANDS = {
    "bell-check": cmd_bell_check,
    "teleport-check": cmd_teleport_check,
    "score": cmd_score,
    "reduce": cmd_reduce,
    "efi2bhrd": cmd_efi2bhrd,
    "bhrd2efi": cmd_bhrd2efi,
    "gl": cmd_gl,
    "amplify": cmd_amplify,
    "estlemma": cmd_estlemma,
}


# --------------------------------------------------------------------------- plumbing


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None,
                        help="RNG seed; required by sampled modes, otherwise 0")
    common.add_argument("--lambda", dest="lam", type=int, default=64)
    common.add_argument("--out", type=Path, default=None, help="report path (default: stdout)")
    common.add_argument("--format", choices=("json", "csv"), default="json")

    p = argparse.ArgumentParser(prog="bhrd", description="Radiation-decoding and EFI reduction experiments.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("bell-check", parents=[common])
    t = sub.add_parser("teleport-check", parents=[common])
    t.add_argument("--trials", type=int, default=100)

    def instance_flags(q):
        q.add_argument("--instance", default="trivial")
        q.add_argument("--theta", type=float, default=math.pi / 6)

    s = sub.add_parser("score", parents=[common])
    instance_flags(s)
    s.add_argument("--kind", choices=("rad", "sd"), default="rad")
    s.add_argument("--decoder", default=None)
    s.add_argument("--mode", choices=("exact", "mc"), default="exact")
    s.add_argument("--trials", type=int, default=10_000)
    s.add_argument("--q", type=float, default=0.2, help="noise of the noisy superdense decoder")

    r = sub.add_parser("reduce", parents=[common])
    instance_flags(r)
    r.add_argument("--direction", choices=("rad2sd", "sd2rad", "roundtrip"), default="roundtrip")
    r.add_argument("--count", type=int, default=10)
    r.add_argument("--ancillas", type=int, default=2)

    e = sub.add_parser("efi2bhrd", parents=[common])
    e.add_argument("--pair", default="perfect")
    e.add_argument("--theta", type=float, default=math.pi / 6)
    e.add_argument("--hybrid", type=int, choices=(0, 1, 2), default=0)
    e.add_argument("--distinguisher", default="helstrom")

    b = sub.add_parser("bhrd2efi", parents=[common])
    instance_flags(b)
    b.add_argument("--mode", choices=("plain", "gl"), default="plain")
    b.add_argument("--n", type=int, default=None)
    b.add_argument("--eta", type=float, default=0.0)

    g = sub.add_parser("gl", parents=[common])
    g.add_argument("--predictor", default="perfect")
    g.add_argument("--n", type=int, default=None)
    g.add_argument("--x", type=int, default=None)
    g.add_argument("--m", type=int, default=1)
    g.add_argument("--fraction", type=float, default=0.75)
    g.add_argument("--aux", type=int, default=0)

    a = sub.add_parser("amplify", parents=[common])
    a.add_argument("--source", choices=("planted", "gl"), default="planted")
    a.add_argument("--family", default="coin")
    a.add_argument("--p", type=float, default=0.3)
    a.add_argument("--n", type=int, default=None)
    a.add_argument("--trials", type=int, default=None)

    l = sub.add_parser("estlemma", parents=[common])
    l.add_argument("--alphas", default=None)
    l.add_argument("--random", type=int, default=None)
    l.add_argument("--delta", type=float, default=None)
    l.add_argument("--trials", type=int, default=10_000)
    return p


def _sampled(args) -> bool:
    return args.command == "amplify" or (args.command == "score" and args.mode == "mc")


def _resolve_seed(args) -> None:
    if args.seed is None:
        if _sampled(args):
            raise ValueError(f"{args.command} runs in a sampled mode and needs an explicit --seed")
        args.seed = 0
    if args.seed < 0:
        raise ValueError("seed must be non-negative")


def _config(args) -> dict:
    cfg = {k: v for k, v in vars(args).items() if k not in ("out", "command")}
    cfg["lambda"] = cfg.pop("lam")
    return {k: (str(v) if isinstance(v, Path) else v) for k, v in sorted(cfg.items())}


def _envelope(command, **body) -> dict:
    return {
        "schema": SCHEMA_VERSION,
        "version": __version__,
        "command": command,
        **body,
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }


def render(report: dict, fmt: str, rows: list) -> str:
    if fmt == "json":
        return json.dumps(report, sort_keys=True, indent=2, allow_nan=False) + "\n"
    rows = rows or report.get("checks", [])
    buf = io.StringIO()
    if rows:
        keys = sorted({k for row in rows for k in row})
        w = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    return buf.getvalue()


def _destination(args) -> Path | None:
    if args.out is not None:
        return args.out
    env = os.environ.get(OUTPUT_DIR_ENV)
    if env:
        return Path(env) / f"{args.command}.{args.format}"
    return None


def run(argv: list[str] | None = None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    args = build_parser().parse_args(argv)
    if args.command == "estlemma":
        args.delta_given = args.delta is not None
        args.delta = 0.5 if args.delta is None else args.delta
    schema = load_schema()
    rows: list = []
    try:
        _resolve_seed(args)
        outcome = COMMANDS[args.command](args, SeededRng(args.seed))
        rows = outcome.rows
        ok = all(c["passed"] for c in outcome.checks)
        report = _envelope(args.command, config=_config(args), results=_jsonable(outcome.results),
                           checks=outcome.checks, ok=ok)
        code = 0 if ok else 1
    except (ValueError, ChannelError, LayoutError, SizeLimitError) as exc:
        report = _envelope(args.command, error={"type": type(exc).__name__, "message": str(exc)}, ok=False)
        code = 2
    jsonschema.validate(report, schema)
    text = render(report, args.format if code != 2 else "json", rows)
    dest = _destination(args)
    if dest is None:
        stdout.write(text)
    else:
        dest.parent.mkdir(parents=True, exist_ok=True)
        dest.write_text(text)
    return code


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return None if math.isnan(v) else v
    return obj


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
