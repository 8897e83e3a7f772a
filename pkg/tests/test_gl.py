import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bhrd import goldreich_levin as gl
from bhrd.qcore import SeededRng, from_vector, random_unitary


@pytest.mark.parametrize("n", [1, 3, 6])
def test_perfect_and_antiperfect_extract_exactly(n):
    x = (1 << n) - 2 if n > 1 else 1
    for fam in (gl.perfect(n, x), gl.antiperfect(n, x)):
        rep = gl.gl_extract(fam, gl.zero_state(1), x)
        assert rep.p_true == pytest.approx(1.0, abs=1e-12)
        assert abs(rep.epsilon) == pytest.approx(0.5)


def test_noisy_three_quarters():
    fam = gl.noisy(4, 9, 0.75, SeededRng(0))
    rep = gl.gl_extract(fam, gl.zero_state(1), 9)
    assert rep.epsilon == pytest.approx(0.25)
    assert rep.p_true == pytest.approx(0.25, abs=1e-12)
    assert rep.holds


def test_half_correct_carries_no_signal():
    fam = gl.noisy(3, 5, 0.5, SeededRng(2))
    assert gl.correlation_epsilon(fam, 5, gl.zero_state(1)) == pytest.approx(0.0)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 5), st.integers(1, 3))
def test_extraction_floor_on_random_families(seed, n, m):
    rng = SeededRng(seed)
    x = int(rng.integers(0, 1 << n))
    fam = gl.random_family(n, x, m, rng)
    rep = gl.gl_extract(fam, gl.zero_state(m), x)
    assert rep.p_true >= rep.bound - 1e-9
    assert rep.distribution.sum() == pytest.approx(1.0, abs=1e-10)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_auxiliary_wires_are_spectators(seed):
    rng = SeededRng(seed)
    fam = gl.random_family(3, 6, 2, rng)
    aux = from_vector(random_unitary(4, rng)[:, 0])
    a = gl.candidate_distribution(fam, gl.zero_state(2))
    b = gl.candidate_distribution(fam, gl.with_aux(gl.zero_state(2), aux))
    assert np.allclose(a, b, atol=1e-12)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_variants_agree(seed):
    fam = gl.random_family(3, 3, 2, SeededRng(seed))
    dists = [gl.candidate_distribution(fam, gl.zero_state(2), v) for v in gl.VARIANTS]
    for d in dists[1:]:
        assert np.allclose(d, dists[0], atol=1e-12)


def test_sampled_candidate_is_seeded():
    fam = gl.noisy(4, 3, 0.8, SeededRng(1))
    a = gl.gl_extract(fam, gl.zero_state(1), 3, SeededRng(5)).sample
    b = gl.gl_extract(fam, gl.zero_state(1), 3, SeededRng(5)).sample
    assert a == b and 0 <= a < 16


def test_family_validation():
    with pytest.raises(ValueError):
        gl.perfect(0, 0)
    with pytest.raises(ValueError):
        gl.perfect(13, 0)
    with pytest.raises(ValueError):
        gl.family_by_name("oracle", 2, 1, SeededRng(0))
    with pytest.raises(ValueError):
        gl.gl_extract(gl.perfect(2, 1, m=2), gl.zero_state(1), 1)
