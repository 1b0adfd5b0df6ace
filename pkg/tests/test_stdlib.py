from __future__ import annotations

import math

import numpy as np
import pytest

from ark import SimConfig, invoke, simulate, validate
from ark.graph import GraphBuilder
from ark.stdlib.analysis import (UNKNOWN, analyze_phases, classify_phase, cnn_edge_oracle, cut_value,
                                 detect_pulses, max_cut, maxcut_solve)
from ark.stdlib.experiments import manifest, maxcut_instances, offset_language, parse_image
from ark.stdlib.generators import (connected_graphs, cnn_grid, initial_phases, intercon_network, linear_tline,
                                   obc_network)


def test_every_shipped_example_validates(stdlib):
    tln = stdlib.language("tln")
    for br in (0, 1):
        assert validate(invoke(stdlib.function("br-func"), tln, {"br": br}), tln).ok
    assert not validate(invoke(stdlib.function("malformed-line"), tln), tln).ok
    ic = stdlib.language("intercon-obc")
    assert validate(invoke(stdlib.function("intercon-good"), ic, {"k": -1.0}), ic).ok


def test_grid_topology(stdlib):
    cnn = stdlib.language("cnn")
    img = -np.ones((3, 3))
    g = cnn_grid(cnn, img)
    rep = validate(g, cnn)
    assert rep.ok and rep.global_results["grid-topology"].details == {"rows": 3, "cols": 3}
    # mutate: one long-range fE edge from a corner output to the opposite corner
    g.edges["long"] = type(g.edges["a_0_0_0_0"])("long", "fE", "Out_0_0", "V_2_2", {"g": 1.0})
    rep = validate(g, cnn)
    assert not rep.ok and rep.local_skipped
    assert "long" in rep.global_results["grid-topology"].message


def test_grid_topology_needs_full_lattice(stdlib):
    cnn = stdlib.language("cnn")
    g = cnn_grid(cnn, -np.ones((2, 2)))
    for name in [n for n in g.nodes if n.endswith("_1_1")]:
        del g.nodes[name]
    for name in [e for e, v in g.edges.items() if "_1_1" in (v.src[-4:], v.dst[-4:])]:
        del g.edges[name]
    assert not validate(g, cnn).global_results["grid-topology"].ok


def test_groups_respected(stdlib):
    ic = stdlib.language("intercon-obc")
    edges = [(0, 1, "Cpl_l", 1.0), (2, 3, "Cpl_l", 2.0), (1, 2, "Cpl_g", 10.0), (0, 3, "Cpl_g", 5.5)]
    g = intercon_network(ic, [0, 0, 1, 1], edges)
    rep = validate(g, ic)
    assert rep.ok and rep.global_results["groups-respected"].details["cost"] == 18.5
    bad = intercon_network(ic, [0, 0, 1, 1], edges[:2] + [(1, 2, "Cpl_l", 1.0)])
    res = validate(bad, ic).global_results["groups-respected"]
    assert not res.ok and "c_1_2" in res.message


def test_cnn_oracle_examples():
    white = -np.ones((5, 5))
    assert (cnn_edge_oracle(white) == white).all()
    one = white.copy()
    one[2, 2] = 1
    assert (cnn_edge_oracle(one) == one).all()
    img = -np.ones((10, 10))
    img[2:8, 2:8] = 1
    out = cnn_edge_oracle(img)
    ring = img.copy()
    ring[3:7, 3:7] = -1
    assert (out == ring).all()


def test_cnn_ideal_run_matches_oracle_on_test_image(stdlib):
    cnn = stdlib.language("cnn")
    img = parse_image(manifest("cnn-edge")["test_image"])
    traj = simulate(cnn_grid(cnn, img), cnn, SimConfig(t_end=20.0, samples=2))
    got = np.array([[np.sign(traj[f"V_{i}_{j}"][-1]) for j in range(16)] for i in range(16)])
    assert (got[1:-1, 1:-1] == cnn_edge_oracle(img)[1:-1, 1:-1]).all()


def test_phase_classification():
    d = 0.01 * math.pi
    assert classify_phase(0.0, d) == 0 and classify_phase(2 * math.pi - 0.01, d) == 0
    assert classify_phase(-math.pi, d) == 1 and classify_phase(3 * math.pi + 0.02, d) == 1
    assert classify_phase(math.pi / 2, d) == UNKNOWN


def test_cut_oracle():
    assert max_cut(4, [(0, 1), (1, 2), (2, 3)]) == 3
    assert max_cut(4, [(a, b) for a in range(4) for b in range(a + 1, 4)]) == 4
    assert max_cut(4, []) == 0
    assert cut_value([(0, 1)], [0, 1]) == 1
    assert len(connected_graphs(4)) == 38
    a = analyze_phases([0.0, math.pi, 0.0, math.pi], 4, [(0, 1), (1, 2), (2, 3)], 0.01)
    assert a.sync and a.solved and a.cut == 3
    a = analyze_phases([0.0, 1.0, 0.0, math.pi], 4, [], 0.01)
    assert not a.sync and not a.solved


def test_maxcut_examples(stdlib):
    obc = stdlib.language("obc")
    path = maxcut_solve(obc, [(0, 1), (1, 2), (2, 3)], seed=0)
    assert path.solved and path.cut == 3
    k4 = [(a, b) for a in range(4) for b in range(a + 1, 4)]
    solved = [maxcut_solve(obc, k4, seed=s) for s in range(5)]
    assert any(a.solved for a in solved)
    assert all(a.partition.count(0) == 2 for a in solved if a.solved)
    empty = maxcut_solve(obc, [], seed=3)
    assert empty.solved == empty.sync


def test_two_oscillators_lock(stdlib):
    obc = stdlib.language("obc")
    d = 0.01 * math.pi
    for seed in range(5):
        for k in (1.0, -1.0):
            g = obc_network(obc, 2, [(0, 1)], k=k, seed=seed)
            tr = simulate(g, obc, SimConfig(t_end=1e-7, samples=2))
            diff = abs(math.remainder(tr["Osc_0"][-1] - tr["Osc_1"][-1], 2 * math.pi))
            assert min(diff, abs(diff - math.pi)) <= d
            if k > 0:
                assert diff <= d  # attractive coupling: in phase


def test_initial_phases_are_seeded():
    a, b = initial_phases(4, 1), initial_phases(4, 1)
    assert (a == b).all() and ((0 <= a) & (a < 2 * math.pi)).all()
    assert not (a == initial_phases(4, 2)).all()


def test_offset_language_recalibration(stdlib):
    reg = stdlib.copy()
    shipped = offset_language(reg, "ofs-obc", manifest("obc-maxcut")["offset_s1"])
    assert shipped.name == "ofs-obc"
    other = offset_language(reg, "ofs-obc", 0.07)
    assert other.edge_types["Cpl_ofs"].attrs["offset"].mm == (0.0, 0.07)
    assert other.is_ancestor_language("obc")


def test_maxcut_instances_are_connected_and_reproducible():
    a = maxcut_instances(50, 7)
    assert a == maxcut_instances(50, 7)
    pool = set(connected_graphs(4))
    assert all(g in pool for g in a)


def test_detect_pulses():
    t = np.linspace(0, 10, 1001)
    v = np.exp(-(t - 2) ** 2 * 8) + 0.4 * np.exp(-(t - 7) ** 2 * 8)
    ps = detect_pulses(t, v)
    assert len(ps) == 2 and abs(ps[0].peak_time - 2) < 0.02 and abs(ps[1].peak - 0.4) < 1e-3
    assert detect_pulses(t, -v) == []


def test_line_generator_shapes(stdlib):
    tln = stdlib.language("tln")
    g = linear_tline(tln, 7)
    assert [n for n in g.nodes if n != "InpI_0"] == ["IN_V", "I_1", "V_1", "I_2", "V_2", "I_3", "OUT_V"]
    assert g.nodes["IN_V"].attrs["g"] == 1.0 and g.nodes["V_1"].attrs["g"] == 0.0
    with pytest.raises(ValueError):
        linear_tline(tln, 4)
    single = linear_tline(tln, 1)
    assert validate(single, tln).ok
