import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gridspec.devices import (
    DroopParams,
    GflParams,
    GfmPiParams,
    InnerLoopConfig,
    build_device,
    device_params,
    fastest_time_constant,
)
from gridspec.errors import EvaluationAtPole, InvalidParams
from gridspec.freq_core import evaluate, is_hurwitz
from gridspec.network import (
    GraphBounds,
    LineParams,
    NetworkAbstraction,
    build_line_tf,
    gamma_bound,
    gamma_single_line,
    line_mu,
    static_gain,
)

W60 = 2 * math.pi * 60


def test_droop_structure_and_dc_gain():
    g = build_device("droop", DroopParams(0.05, 0.1))
    assert g.num == (0.05,) and g.den == (1.0, 0.1)
    assert evaluate(g, 0.0) == pytest.approx(0.05)


def test_gfm_pi_structure_not_hurwitz():
    g = build_device("gfm_pi", GfmPiParams(1.0, 2.0, 0.1))
    assert g.num == (1.0, 2.0) and g.den == (0.0, 1.0, 0.1)
    assert not is_hurwitz(g)


def test_gfl_matches_independent_evaluation():
    p = GflParams(k_p=1.0, k_i=10.0, tau_d=0.02, D=20.0)
    g = build_device("gfl", p)
    s = 1j * 2 * math.pi * 10
    ref = (s * s + p.k_p * s + p.k_i) / (p.k_p * s + p.k_i) * (p.tau_d * s + 1) / p.D
    assert abs(evaluate(g, 2 * math.pi * 10) / ref - 1) < 1e-12


def test_gfl_relative_degree_is_minus_two():
    # cubic numerator over linear denominator
    g = build_device("gfl", GflParams(1.0, 10.0, 0.02, 20.0))
    assert (g.num_degree, g.den_degree, g.relative_degree) == (3, 1, -2)


@pytest.mark.parametrize("kind,bad", [
    ("droop", dict(m_p=0.0, tau=0.1)),
    ("droop", dict(m_p=0.05, tau=-1.0)),
    ("gfl", dict(k_p=1.0, k_i=0.0, tau_d=0.1, D=1.0)),
    ("gfm_pi", dict(xi_p=1.0, xi_i=1.0, tau=math.inf)),
])
def test_invalid_params(kind, bad):
    with pytest.raises(InvalidParams):
        device_params(kind, **bad)


def test_unknown_kind_and_mismatch():
    with pytest.raises(InvalidParams):
        build_device("vsm", DroopParams(1, 1))
    with pytest.raises(InvalidParams):
        build_device("gfl", DroopParams(1, 1))


def test_inner_loop_config_rules():
    assert InnerLoopConfig().mode == "none"
    with pytest.raises(InvalidParams):
        InnerLoopConfig("lag")
    with pytest.raises(InvalidParams):
        InnerLoopConfig("none", T_a=0.01)
    with pytest.raises(InvalidParams):
        InnerLoopConfig("lag", 0.01, ell_f=-1.0)


def test_fastest_time_constant():
    p = GflParams(k_p=50.0, k_i=1000.0, tau_d=0.02, D=5.0)
    assert fastest_time_constant(p, InnerLoopConfig("lag", 0.002)) == 0.002
    assert fastest_time_constant(DroopParams(1.0, 0.1)) == 0.1


def test_mu_dc_value():
    rho, w0 = 30.0, 2 * math.pi * 50
    assert evaluate(line_mu(rho, w0), 0.0) == pytest.approx(1 / (w0 ** 2 + rho ** 2))


def test_kappa_direct_formula():
    kappa, _ = build_line_tf(LineParams(ell=0.1, r=0.0, v_n=1.0, v_k=1.0, omega0=W60))
    assert kappa == pytest.approx(3769.91, abs=0.01)


def test_undamped_line_pole_at_omega0():
    _, mu = build_line_tf(LineParams(ell=0.1, r=0.0, v_n=1.0, v_k=1.0, omega0=W60))
    with pytest.raises(EvaluationAtPole):
        evaluate(mu, W60)


def test_gamma_bound_examples():
    assert gamma_bound(GraphBounds(1.0, 0.1, 1.0), W60) == pytest.approx(7539.82, abs=0.01)
    line = LineParams(ell=0.1, r=0.01, v_n=1.0, v_k=1.0, omega0=W60)
    assert gamma_single_line(line) == pytest.approx(gamma_bound(GraphBounds(1.0, 0.1, 1.0), W60))
    assert gamma_bound(GraphBounds(1.0, 0.05, 1.0), W60) == pytest.approx(2 * 7539.822368615503)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.01, 1), st.floats(0.8, 1.2), st.floats(0.8, 1.2), st.floats(1.0, 2.0), st.floats(1.0, 2.0))
def test_single_line_dominated_by_graph_bound(ell, vn, vk, ell_scale, v_scale):
    line = LineParams(ell=ell, r=0.0, v_n=vn, v_k=vk, omega0=W60)
    bounds = GraphBounds(1.0, ell / ell_scale, max(vn, vk) * v_scale)
    assert gamma_single_line(line) <= gamma_bound(bounds, W60) * (1 + 1e-12)


def test_from_scr():
    w0 = 2 * math.pi * 50
    line = LineParams.from_scr(2.5, 0.1 * w0, 1.0, w0)
    assert line.reactance == pytest.approx(0.4)
    assert line.rho == pytest.approx(0.1 * w0)


def test_static_gain_closed_form():
    w0 = 2 * math.pi * 50
    line = LineParams(ell=0.2 / w0, r=0.02, v_n=1.0, v_k=1.0, omega0=w0)
    expected = 1.0 / (line.ell * w0 * (1 + (line.rho / w0) ** 2))
    assert static_gain(line) == pytest.approx(expected, rel=1e-12)


def test_network_abstraction():
    net = NetworkAbstraction(gamma=100.0, rho=10.0, omega0=314.0, psi=2.0)
    assert net.ratio == 50.0
    assert net.scaled(2.0).ratio == 100.0
    with pytest.raises(InvalidParams):
        NetworkAbstraction(gamma=-1.0, rho=1.0, omega0=1.0, psi=1.0)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.1, 200), st.floats(0.1, 5000), st.floats(1e-3, 0.5), st.floats(0.1, 100))
def test_gfl_dc_gain_is_inverse_damping(k_p, k_i, tau_d, D):
    g = build_device("gfl", GflParams(k_p, k_i, tau_d, D))
    assert abs(evaluate(g, 1e-6) * D - 1) < 1e-4


@settings(max_examples=100, deadline=None)
@given(st.floats(1e-3, 1e3), st.floats(1e-3, 1e3), st.floats(1e-4, 10))
def test_gfm_pi_never_hurwitz(xi_p, xi_i, tau):
    assert not is_hurwitz(build_device("gfm_pi", GfmPiParams(xi_p, xi_i, tau)))
