import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gridspec.errors import DegenerateDenominator, EvaluationAtPole, InvalidParams
from gridspec.freq_core import (
    FrequencyResponse,
    RationalTransferFunction,
    closed_loop_response,
    evaluate,
    is_hurwitz,
    polymul,
    routh_array,
)

coeff = st.floats(-10, 10, allow_nan=False).filter(lambda x: abs(x) > 1e-3)


def test_evaluate_first_order_lag():
    tf = RationalTransferFunction((2.0,), (1.0, 0.5))
    assert evaluate(tf, 2.0) == pytest.approx(2.0 / (1 + 1j))


def test_evaluate_vectorized_matches_scalar():
    tf = RationalTransferFunction((1.0, 3.0), (2.0, 1.0, 0.1))
    w = np.array([0.1, 1.0, 10.0])
    vec = evaluate(tf, w)
    assert np.allclose(vec, [evaluate(tf, x) for x in w], rtol=0, atol=1e-15)


@settings(max_examples=200, deadline=None)
@given(st.lists(coeff, min_size=1, max_size=5), st.lists(coeff, min_size=1, max_size=5),
       st.floats(1e-2, 1e2))
def test_evaluate_matches_numpy_polyval(num, den, w):
    # independent second path: numpy's descending-order polyval at complex s
    tf = RationalTransferFunction(tuple(num), tuple(den))
    s = 1j * w
    d = np.polyval(den[::-1], s)
    if abs(d) < 1e-6 * max(abs(a) for a in den):
        return
    ref = np.polyval(num[::-1], s) / d
    assert evaluate(tf, w) == pytest.approx(ref, rel=1e-9, abs=1e-12)


def test_evaluation_at_pole_raises():
    tf = RationalTransferFunction((1.0,), (1.0, 0.0, 1.0))  # poles at +-j
    with pytest.raises(EvaluationAtPole):
        evaluate(tf, 1.0)


def test_invalid_coefficients():
    with pytest.raises(InvalidParams):
        RationalTransferFunction((1.0,), (0.0,))
    with pytest.raises(InvalidParams):
        RationalTransferFunction((math.nan,), (1.0,))


def test_relative_degree():
    assert RationalTransferFunction((1.0,), (1.0, 1.0)).relative_degree == 1
    # the grid-following model: cubic over linear
    gfl = RationalTransferFunction(polymul((10.0, 1.0, 1.0), (1.0, 0.02)), (5.0, 0.5))
    assert gfl.relative_degree == -2


@pytest.mark.parametrize(
    "den,expected",
    [
        ((1.0,), True),
        ((2.0, 1.0), True),
        ((-2.0, 1.0), False),
        ((1.0, 0.0, 1.0), False),  # roots on the imaginary axis
        ((6.0, 11.0, 6.0, 1.0), True),  # (s+1)(s+2)(s+3)
        ((0.0, 1.0, 1.0), False),  # root at zero
        ((1.0, 1.0, 1.0, 1.0, 1.0, 1.0), False),
    ],
)
def test_is_hurwitz_known_cases(den, expected):
    assert is_hurwitz(den) is expected


def test_is_hurwitz_degenerate():
    with pytest.raises(DegenerateDenominator):
        is_hurwitz((0.0, 0.0))


def test_routh_auxiliary_event():
    # s^4 + 5 s^2 + 4 = (s^2+1)(s^2+4): odd row vanishes immediately
    first, events = routh_array((4.0, 0.0, 5.0, 0.0, 1.0))
    assert any(e[0] == "auxiliary" for e in events)


def test_routh_hurwitz_agrees_with_eigenvalues():
    """200 random polynomials built from random roots kept away from the axis."""
    rng = np.random.default_rng(20240611)
    for _ in range(200):
        deg = int(rng.integers(1, 8))
        roots = []
        while len(roots) < deg:
            re = rng.uniform(0.05, 5.0) * rng.choice([-1.0, 1.0])
            if deg - len(roots) >= 2 and rng.random() < 0.5:
                im = rng.uniform(0.1, 5.0)
                roots += [complex(re, im), complex(re, -im)]
            else:
                roots.append(complex(re, 0.0))
        desc = np.real(np.poly(roots)) * rng.uniform(0.2, 5.0)
        # eigenvalue oracle from the companion matrix
        comp = np.zeros((deg, deg))
        comp[0, :] = -desc[1:] / desc[0]
        comp[1:, :-1] = np.eye(deg - 1)
        eig = np.linalg.eigvals(comp)
        expected = bool(np.all(eig.real < 0))
        assert is_hurwitz(tuple(desc[::-1])) is expected, roots


def test_closed_loop_dc_gain_droop():
    g = RationalTransferFunction((0.05,), (1.0, 0.1))
    gw, gp = closed_loop_response(g, 5.0)
    assert abs(evaluate(gw, 1e-9)) == pytest.approx(1.0, abs=1e-8)
    assert abs(evaluate(gp, 1e-9)) == pytest.approx(1 / 0.05, rel=1e-8)


def test_frequency_response_immutable():
    frf = FrequencyResponse.from_hz([1.0, 2.0], [1 + 1j, 2.0])
    assert np.allclose(frf.omega, [2 * math.pi, 4 * math.pi])
    with pytest.raises(ValueError):
        frf.values[0] = 0
