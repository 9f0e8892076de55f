from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from repavg import exact
from repavg.exact import Dyadic, DyadicState, check_odd_invariant, dyadic_average
from repavg.errors import InvalidArgument, ResourceLimit
from repavg.streams import replicate_rng

dyadics = st.builds(
    lambda num, exp: Dyadic.reduced(num, exp), st.integers(-(2**40), 2**40), st.integers(0, 60)
)


@pytest.mark.parametrize(
    "a, b, expected",
    [
        (Dyadic(3, 2), Dyadic(1, 1), Dyadic(5, 3)),
        (Dyadic(1, 1), Dyadic(1, 1), Dyadic(1, 1)),
        (Dyadic(1), Dyadic(0), Dyadic(1, 1)),
    ],
)
def test_dyadic_average_examples(a, b, expected):
    assert dyadic_average(a, b) == expected


@given(dyadics, dyadics)
def test_dyadic_average_matches_fractions(a, b):
    out = dyadic_average(a, b)
    assert out.to_fraction() == (a.to_fraction() + b.to_fraction()) / 2
    # constructor re-validates lowest terms
    assert Dyadic(out.num, out.exp) == out


def test_unreduced_dyadic_rejected():
    with pytest.raises(InvalidArgument):
        Dyadic(2, 2)
    with pytest.raises(InvalidArgument):
        Dyadic(0, 3)
    assert Dyadic.reduced(2, 2) == Dyadic(1, 1)


def test_from_fraction():
    assert Dyadic.from_fraction(Fraction(6, 8)) == Dyadic(3, 2)
    with pytest.raises(InvalidArgument):
        Dyadic.from_fraction(Fraction(1, 3))


def test_odd_invariant_initial():
    assert check_odd_invariant(DyadicState.delta(3))


def test_odd_invariant_detects_even_numerator():
    # an even numerator survives reduction only with exponent 0
    assert not check_odd_invariant(DyadicState(2, [Dyadic(2), Dyadic(0)]))


@pytest.mark.parametrize("n", [3, 5, 6, 7, 12])
def test_odd_invariant_along_random_paths(n):
    rng = replicate_rng(n)
    state = DyadicState.delta(n)
    from repavg.core import sample_pair

    for _ in range(2000):
        state.average(*sample_pair(n, rng))
        assert check_odd_invariant(state)
    assert state.total() == 1
    assert all(0 <= v.to_fraction() <= 1 for v in state.values)
    assert not state.is_constant()


def test_run_exact_n2():
    for seed in range(10):
        rep = exact.run_exact(2, 10, seed)
        assert rep.absorbed and rep.absorb_step == 1


def test_run_exact_n3_never_absorbs():
    rep = exact.run_exact(3, 10_000, 1)
    assert not rep.absorbed
    assert rep.absorb_step is None
    assert rep.invariant_violations == 0


@pytest.mark.parametrize("seed", range(10))
def test_run_exact_n4_absorbs(seed):
    rep = exact.run_exact(4, 100_000, seed)
    assert rep.absorbed


def test_run_exact_exp_cap():
    with pytest.raises(ResourceLimit):
        exact.run_exact(3, 10_000, 1, exp_cap=20)


def test_run_exact_argument_checks():
    with pytest.raises(InvalidArgument):
        exact.run_exact(1, 10, 0)
    with pytest.raises(InvalidArgument):
        exact.run_exact(4, 0, 0)


def test_equalization_schedule_small():
    assert exact.equalization_schedule(2) == [(0, 1)]
    assert exact.equalization_schedule(4) == [(0, 1), (2, 3), (0, 2), (1, 3)]
    state = exact.apply_schedule(DyadicState.delta(4), exact.equalization_schedule(4))
    assert [v.to_fraction() for v in state.values] == [Fraction(1, 4)] * 4


def test_equalization_schedule_length():
    for m in range(1, 8):
        n = 2**m
        assert len(exact.equalization_schedule(n)) == n * m // 2


def test_equalization_schedule_rejects_non_power():
    with pytest.raises(InvalidArgument):
        exact.equalization_schedule(6)


def test_quoted_n4_order_does_not_equalize():
    state = exact.apply_schedule(DyadicState.delta(4), [(0, 1), (2, 3), (0, 2), (0, 3)])
    assert [v.to_fraction() for v in state.values] == [
        Fraction(1, 8), Fraction(1, 2), Fraction(1, 4), Fraction(1, 8)
    ]


@given(st.sampled_from([2, 4, 8, 16]), st.data())
def test_equalization_schedule_equalizes_any_start(n, data):
    values = data.draw(st.lists(dyadics, min_size=n, max_size=n))
    state = exact.apply_schedule(DyadicState(n, list(values)), exact.equalization_schedule(n))
    assert state.is_constant()
    assert state.values[0].to_fraction() == sum(v.to_fraction() for v in values) / n


def test_termination_csv():
    text = exact.termination_csv([exact.run_exact(2, 5, 0), exact.run_exact(3, 5, 0)], cmd="terminate")
    lines = text.splitlines()
    assert lines[0].startswith("# params: cmd=terminate")
    assert lines[1] == "n,seed,absorbed,absorb_step,invariant_violations"
    assert lines[2] == "2,0,true,1,0"
    assert lines[3] == "3,0,false,,0"
