from __future__ import annotations

import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from ark import (GraphBuilder, NumericError, Registry, SimConfig, compile_graph, integrate, load_program,
                 simulate, steady_state, sweep)
from ark.simulator import SweepError, dopri5
from ark.stdlib.generators import LineParams, branched_tline, linear_tline, obc_network

DECAY = """
lang decay {
  node-type(1, sum) X {
    attr a = real[0, 100]
    init(0) real[-10, 10]
  }
  node-type(2, sum) Osc {
    attr w = real[0, 100]
    init(0) real[-10, 10]
    init(1) real[-10, 10]
  }
  edge-type W {}
  prod(e:W, s:X->s:X) s <= -s.a*var(s)
  prod(e:W, s:Osc->s:Osc) s <= -s.w*s.w*var(s) + 0.2*(1 - var(s)^2)
}
"""


@pytest.fixture(scope="module")
def decay():
    reg = Registry()
    load_program(DECAY, reg)
    return reg.language("decay")


def _decay_graph(lang, a=1.0, x0=1.0):
    b = GraphBuilder(lang)
    b.node("x", "X")
    b.set_attr("x", "a", a)
    b.set_init("x", 0, x0)
    b.edge("x", "x", "s", "W")
    return b.finish()


def test_exponential_decay_accuracy(decay):
    traj = simulate(_decay_graph(decay), decay, SimConfig(t_end=5.0, samples=51, rtol=1e-10, atol=1e-12))
    np.testing.assert_allclose(traj["x"], np.exp(-traj.times), rtol=1e-8, atol=1e-12)
    assert traj.times[-1] == 5.0 and traj.steps > 0 and traj.evaluations >= 6 * traj.steps


def test_error_scales_with_tolerance(decay):
    # without the default t_end/100 step cap the error is tolerance-limited
    errs = []
    for rtol in (1e-4, 1e-5, 1e-6, 1e-7, 1e-8):
        tr = simulate(_decay_graph(decay), decay,
                      SimConfig(t_end=5.0, samples=2, rtol=rtol, atol=1e-14, max_step=5.0))
        errs.append(abs(tr["x"][-1] - math.exp(-5.0)))
    for a, b in zip(errs, errs[1:]):
        assert a / b >= 8.0
    capped = simulate(_decay_graph(decay), decay, SimConfig(t_end=5.0, samples=2, rtol=1e-4, atol=1e-14))
    assert abs(capped["x"][-1] - math.exp(-5.0)) < errs[0]


def test_matches_scipy_on_nonlinear_second_order(decay):
    b = GraphBuilder(decay)
    b.node("o", "Osc")
    b.set_attr("o", "w", 2.0)
    b.set_init("o", 0, 0.5)
    b.set_init("o", 1, 0.0)
    b.edge("o", "o", "s", "W")
    g = b.finish()
    sys = compile_graph(g, decay)
    cfg = SimConfig(t_end=10.0, samples=201, rtol=1e-10, atol=1e-12)
    mine = integrate(sys, cfg)
    ref = solve_ivp(lambda t, y: sys.rhs(t, y), (0, 10.0), sys.x0, method="DOP853", t_eval=mine.times,
                    rtol=1e-12, atol=1e-14)
    np.testing.assert_allclose(mine.values, ref.y.T, atol=1e-7)


def test_matches_scipy_on_transmission_line(stdlib):
    tln = stdlib.language("tln")
    sys = compile_graph(branched_tline(tln, 1, main=9, branch=6), tln)
    cfg = SimConfig(t_end=4e-8, samples=81, rtol=1e-8, atol=1e-12)
    mine = integrate(sys, cfg)
    ref = solve_ivp(lambda t, y: sys.rhs(t, y), (0, 4e-8), sys.x0, method="RK45", t_eval=mine.times,
                    rtol=1e-10, atol=1e-13, max_step=4e-10)
    assert np.max(np.abs(mine.values - ref.y.T)) < 1e-5


def test_dense_output_between_steps(decay):
    # few steps, many samples: the interpolant must stay accurate
    tr = simulate(_decay_graph(decay), decay, SimConfig(t_end=2.0, samples=1001, rtol=1e-9, atol=1e-12,
                                                        max_step=1.0))
    assert tr.steps < 200
    np.testing.assert_allclose(tr["x"], np.exp(-tr.times), atol=1e-8)


@pytest.mark.parametrize("kw", [dict(t_end=0.0), dict(t_end=-1.0), dict(t_end=float("inf")),
                                dict(t_end=1.0, samples=1), dict(t_end=1.0, rtol=0.0),
                                dict(t_end=1.0, max_step=0.0)])
def test_invalid_configs(kw):
    with pytest.raises(ValueError):
        SimConfig(**kw)


def test_blow_up_is_a_numeric_error():
    def f(t, y, out):
        out[0] = y[0] ** 2
        return out

    with pytest.raises(NumericError):
        dopri5(f, np.array([1.0]), np.linspace(0, 2.0, 3), rtol=1e-6, atol=1e-9, h_max=0.1, max_steps=10_000)


def test_step_limit(decay):
    with pytest.raises(NumericError):
        simulate(_decay_graph(decay, a=100.0), decay, SimConfig(t_end=100.0, max_steps=20))


def test_csv_is_reproducible(stdlib):
    tln = stdlib.language("tln")
    cfg = SimConfig(t_end=2e-8, samples=21)
    a = simulate(linear_tline(tln, 5), tln, cfg).to_csv()
    assert a == simulate(linear_tline(tln, 5), tln, cfg).to_csv()
    assert a.splitlines()[0].startswith("time,")
    assert len(a.splitlines()) == 22


def test_sweep_is_deterministic_and_reports_failing_seed(stdlib):
    gmc = stdlib.language("gmc-tln")
    p = LineParams(types={"V": "Vm", "I": "Im"})
    cfg = SimConfig(t_end=3e-8, samples=31)
    r1 = sweep(lambda s: linear_tline(gmc, 5, seed=s, params=p), gmc, range(4), cfg, "OUT_V")
    r2 = sweep(lambda s: linear_tline(gmc, 5, seed=s, params=p), gmc, range(4), cfg, "OUT_V")
    assert r1.summary_csv() == r2.summary_csv()
    assert r1.samples.shape == (4, 31) and r1.window_std(0, 3e-8) > 0

    def build(seed):
        return linear_tline(gmc, 5, seed=seed, params=LineParams(c=0.0 if seed == 2 else 1e-9))

    with pytest.raises(SweepError) as info:
        sweep(build, gmc, range(4), cfg, "OUT_V")
    assert info.value.seed == 2


def test_steady_state(stdlib, decay):
    tr = simulate(_decay_graph(decay, a=3.0), decay, SimConfig(t_end=10.0, samples=201))
    ss = steady_state(tr, (8.0, 10.0))
    assert ss["x"].converged and abs(ss["x"].value) < 1e-6
    obc = stdlib.language("obc")
    g = obc_network(obc, 2, [(0, 1)], k=1.0, phases=[0.3, 2.0])
    tr = simulate(g, obc, SimConfig(t_end=2e-9, samples=201))
    assert not steady_state(tr, (0.0, 1e-9))["Osc_0"].converged
    with pytest.raises(ValueError):
        steady_state(tr, (0.0, 1.0))
