import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bhrd import decoding as dec
from bhrd import efi
from bhrd.qcore import ChannelError, SeededRng, SizeLimitError, computational_distinguisher, random_distinguisher


@pytest.mark.parametrize("theta", [0.0, math.pi / 12, math.pi / 6, math.pi / 4, math.pi / 2])
def test_theta_pair_distance_is_sine(theta):
    assert efi.statistical_distance(efi.theta_pair(theta)) == pytest.approx(math.sin(theta), abs=1e-12)


def test_theta_pi_over_6_oracles():
    pair = efi.theta_pair(math.pi / 6)
    d = efi.helstrom_distinguisher(pair)
    assert efi.statistical_distance(pair) == pytest.approx(0.5)
    assert efi.pair_advantage(d, pair) == pytest.approx(0.5)
    assert efi.guess_game(d, pair) == pytest.approx(0.75)


def test_keyed_pair_halves_look_mixed():
    pair = efi.keyed_pair()
    assert efi.statistical_distance(pair) == pytest.approx(1.0)
    for b in (0, 1):
        rho = pair.density(b).matrix
        assert np.allclose(np.diag(rho).real.reshape(2, 2).sum(axis=1), [0.5, 0.5])


def test_pair_lookup():
    assert efi.pair_by_name("theta", theta=0.3).name.startswith("theta")
    with pytest.raises(ValueError):
        efi.pair_by_name("nope")


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(["perfect", "theta", "keyed"]))
def test_guess_game_is_half_plus_half_advantage(seed, name):
    pair = efi.pair_by_name(name, theta=0.7)
    d = random_distinguisher(pair.r, 1, SeededRng(seed))
    assert efi.guess_game(d, pair) == pytest.approx(0.5 + efi.pair_advantage(d, pair) / 2, abs=1e-10)


def test_hybrid_lift_doubles_primed_advantage():
    pair = efi.theta_pair(0.5)
    d = efi.equality_distinguisher(pair.r)
    p0, p1 = efi.primed_densities(pair)
    eps = float(np.real(np.trace(d.operator @ (p1 - p0))))
    assert efi.pair_advantage(efi.hybrid_lift(d), pair) == pytest.approx(2 * eps, abs=1e-10)


@pytest.mark.parametrize("k", [1, 2, 5, 8])
def test_repeat_pair_closed_form(k):
    theta = 0.35
    got = efi.statistical_distance(efi.repeat_pair(efi.theta_pair(theta), k))
    assert got == pytest.approx(math.sqrt(1 - math.cos(theta) ** (2 * k)), abs=1e-10)


def test_repeat_pair_limits():
    with pytest.raises(ValueError):
        efi.repeat_pair(efi.perfect_pair(), 0)
    with pytest.raises(SizeLimitError):
        efi.repeat_pair(efi.keyed_pair(), 8)


def test_perfect_pair_computational_decoder_is_perfect():
    d = efi.decoder_from_pair_distinguisher(computational_distinguisher(1), 1)
    s = dec.eval_radiation_decoder(efi.bhrd_from_efi(efi.perfect_pair()), d)
    assert s.gamma == pytest.approx(1.0, abs=1e-12) and s.epsilon == pytest.approx(1.0, abs=1e-12)


def test_perfect_pair_hybrid_scores():
    pair = efi.perfect_pair()
    d = efi.decoder_from_pair_distinguisher(efi.helstrom_distinguisher(pair), pair.r)
    eps = [dec.eval_radiation_decoder(efi.bhrd_from_efi(pair, h), d).epsilon for h in (0, 1, 2)]
    assert eps[0] == pytest.approx(1.0, abs=1e-12)
    # one slot still decodes: the guess is right with probability 1/2
    assert eps[1] == pytest.approx(1 / 3, abs=1e-12)
    assert abs(eps[2]) <= 1e-12


@pytest.mark.parametrize("theta", [math.pi / 12, math.pi / 6, math.pi / 4])
def test_theta_pair_epsilon_bound(theta):
    pair = efi.theta_pair(theta)
    d = efi.helstrom_distinguisher(pair)
    s = dec.eval_radiation_decoder(efi.bhrd_from_efi(pair), efi.decoder_from_pair_distinguisher(d, 1))
    assert s.epsilon >= 1 - 4 / 3 * (1 - math.sin(theta)) - 1e-9


def test_keyed_pair_instance_is_decodable():
    pair = efi.keyed_pair()
    d = efi.decoder_from_pair_distinguisher(efi.helstrom_distinguisher(pair), pair.r)
    s = dec.eval_radiation_decoder(efi.bhrd_from_efi(pair), d)
    assert s.gamma == pytest.approx(1.0) and s.epsilon == pytest.approx(1.0, abs=1e-10)


def test_hybrid_index_and_width_checks():
    with pytest.raises(ValueError):
        efi.bhrd_from_efi(efi.perfect_pair(), hybrid=3)
    with pytest.raises(ChannelError):
        efi.decoder_from_pair_distinguisher(computational_distinguisher(2), 1)
