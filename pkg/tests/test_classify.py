import math

import numpy as np
import pytest

from bnetlab import classify, oracles, paths
from bnetlab.classify import IncomingType, Mesh, SiteKind, Wedge
from bnetlab.lattice import Arrow, LatticeConfig, field_from_spec, sample_arrow_field
from bnetlab.paths import DualLatticePath, LatticePath

# frozen values of the exhaustive enumeration oracle
EXACT_COUNT_EPS0_5x5 = 0.9140625
EXACT_COUNT_EPS05_5x4 = 1.7138671875


def test_census_fixture(census_field):
    rows = {r.site: r for r in classify.census(census_field)}
    assert len(rows) == 12
    expect = {
        (-1, 1): (SiteKind.MEETING, 2, 1, 2, 1),
        (0, 2): (SiteKind.SEPARATION, 1, 2, 1, 2),
        (1, 3): (SiteKind.MEETING, 2, 1, 2, 1),
        (-1, 3): (SiteKind.PLAIN, 1, 1, 1, 1),
        (1, 5): (SiteKind.PLAIN, 0, 1, 1, 1),
    }
    for site, (kind, mi, mo, dmi, dmo) in expect.items():
        r = rows[site]
        assert (r.kind, r.m_in, r.m_out, r.dual_m_in, r.dual_m_out) == (kind, mi, mo, dmi, dmo)
    assert {s for s, r in rows.items() if r.is_crossing} == {(0, 2)}


def test_census_csv(census_field):
    text = classify.census_to_csv(classify.census(census_field))
    lines = text.splitlines()
    assert lines[0] == "x,t,kind,m_in,m_out,dual_m_in,dual_m_out"
    assert "0,2,Separation,1,2,1,2" in lines


def test_epsilon_zero_has_no_separation():
    f = sample_arrow_field(LatticeConfig(0.0, -20, 20, 0, 20, seed=1))
    assert not any(r.is_separation for r in classify.census(f))


def test_separation_equals_crossing_on_random_fields():
    for seed in range(40):
        f = sample_arrow_field(LatticeConfig(seed / 40, -12, 12, 0, 12, seed=seed))
        recs = classify.census(f)
        assert {r.site for r in recs if r.is_separation} == {r.site for r in recs if r.is_crossing}
        assert {r.kind.value for r in recs} <= {"Plain", "Meeting", "Separation"}
        for r in recs:
            if r.is_meeting:
                assert r.m_in == 2


def test_reachable_one_step():
    f = sample_arrow_field(LatticeConfig(1.0, -6, 6, 0, 4, seed=0))
    rs = classify.reachable_set(f, 0)
    interior = rs.interior()
    for k in range(1, 5):
        row = rs.occupied[k] | ~interior[k]
        par = ((np.arange(13) - 6 + k) % 2) == 0
        assert np.all(row[par])
    g = sample_arrow_field(LatticeConfig(0.3, -6, 6, 0, 1, seed=5))
    one = classify.reachable_set(g, 0).positions(1)
    expect = sorted({int(x) + 1 for x in g.sites(0) if g.arrows(int(x), 0) & Arrow.RIGHT}
                    | {int(x) - 1 for x in g.sites(0) if g.arrows(int(x), 0) & Arrow.LEFT})
    expect = [x for x in expect if -6 <= x <= 6]
    assert list(one) == expect


def test_reachable_count_nonincreasing_without_branching():
    f = sample_arrow_field(LatticeConfig(0.0, -30, 30, 0, 40, seed=2))
    rs = classify.reachable_set(f, 0)
    counts = [rs.count(t) for t in range(0, 41)]
    assert all(b <= a for a, b in zip(counts, counts[1:]))


def test_reachable_matches_enumeration():
    for seed in range(10):
        f = sample_arrow_field(LatticeConfig(0.4, -4, 4, 0, 6, seed=seed))
        assert np.array_equal(classify.reachable_set(f, 0).occupied,
                              oracles.reachable_by_enumeration(f, 0))


def test_relevant_points():
    f = sample_arrow_field(LatticeConfig(0.0, -10, 10, 0, 10, seed=3))
    assert classify.relevant_separation_points(f, 0, 10) == []
    g = sample_arrow_field(LatticeConfig(0.5, -10, 10, 0, 10, seed=3))
    # with u = t + 1 no integer time lies strictly between, so every reachable
    # Both site in the row qualifies
    rs = classify.reachable_set(g, 0)
    got = sorted(classify.relevant_separation_points(g, 0, 6))
    row5 = [(x, 5) for x in rs.positions(5) if g.arrows(int(x), 5) == Arrow.BOTH
            and -10 < x < 10]
    assert set(row5) <= set(got)


def test_relevant_points_fixture(census_field):
    assert classify.relevant_separation_points(census_field, 0, 5) == [(0, 2)]
    # by u = 6 the extremal paths from (0, 2) have left the window
    assert classify.relevant_separation_points(census_field, 0, 6) == []
    assert classify.relevant_separation_points(census_field, 0, 6, include_undetermined=True) == [(0, 2)]
    assert classify.relevant_separation_points(census_field, 3, 6) == []


def test_relevant_density_edge_cases():
    cfg = LatticeConfig(0.1, 0, 2, 0, 1, seed=0)
    empty = classify.relevant_density_estimate(cfg, 0, 1, 0, 1, reps=0)
    assert empty.error and empty.n == 0
    zero = classify.relevant_density_estimate(cfg, 0.5, 0.5, 0, 1, reps=3)
    assert zero.estimate == 0.0
    small = classify.relevant_density_estimate(cfg, 0, 1, 0, 1, reps=4)
    assert small.reference == pytest.approx(11.88641975253948)
    assert small.estimate > 0


def test_point_density_small_run():
    rep = classify.point_density_estimate(0.2, reps=4)
    assert rep.reference == pytest.approx(2.0502545416600)
    assert 1.0 < rep.estimate < 2.5


def test_window_count_oracle_frozen_and_mc():
    cfg0 = LatticeConfig(0.0, 0, 4, 0, 4, seed=1)
    assert oracles.exact_window_count(cfg0) == pytest.approx(EXACT_COUNT_EPS0_5x5, abs=1e-12)
    mc = classify.window_density_estimate(cfg0, 2000)
    assert abs(mc.estimate - EXACT_COUNT_EPS0_5x5) <= 4 * mc.stderr
    cfg1 = LatticeConfig(0.5, 0, 4, 0, 3, seed=2)
    assert oracles.exact_window_count(cfg1) == pytest.approx(EXACT_COUNT_EPS05_5x4, abs=1e-12)
    mc = classify.window_density_estimate(cfg1, 2000)
    assert abs(mc.estimate - EXACT_COUNT_EPS05_5x4) <= 4 * mc.stderr


@pytest.fixture
def closed_wedge():
    # r_hat and l_hat from (-1, 6) and (1, 6) meeting at (0, 3)
    return Wedge(DualLatticePath(6, [-1, -2, -1, 0]), DualLatticePath(6, [1, 2, 1, 0]))


def test_wedge_basic(closed_wedge):
    assert closed_wedge.bottom_time == 3
    outside = LatticePath(0, [-6, -5, -6, -5, -6, -5, -6])
    assert not classify.wedge_entered_from_outside(outside, closed_wedge)
    # starts inside: never outside after its start
    assert not classify.wedge_entered_from_outside(LatticePath(4, [0, 1, 0]), closed_wedge)


def test_wedge_positive_control(closed_wedge):
    # (1, 3) -> (0, 4) crosses l_hat's first segment and lands inside
    crossing = LatticePath(3, [1, 0, 1])
    assert classify.wedge_entered_from_outside(crossing, closed_wedge)
    # the same path is rejected when it only grazes the right boundary
    grazing = LatticePath(3, [3, 2, 3])
    assert not classify.wedge_entered_from_outside(grazing, closed_wedge)


def test_mesh_at_and_entering():
    f = field_from_spec(LatticeConfig(0.0, -4, 4, 0, 5),
                        {0: {0: "B"}, 1: {-1: "R", 1: "L"}})
    m = classify.mesh_at(f, (0, 0))
    assert m is not None and m.top_time == 2
    assert list(m.r.positions[:3]) == [0, -1, 0]
    assert list(m.l.positions[:3]) == [0, 1, 0]
    assert classify.mesh_entered(LatticePath(0, [-4, -3, -4]), m) is False
    # the face centre (0, 1) is a dual point, so no lattice path is strictly inside this
    # mesh; use a taller one
    g = field_from_spec(LatticeConfig(0.0, -6, 6, 0, 7),
                        {0: {0: "B"}, 1: {-1: "L", 1: "R"}, 2: {-2: "R", 2: "L"},
                         3: {-1: "R", 1: "L"}})
    mm = classify.mesh_at(g, (0, 0))
    assert mm.top_time == 4
    # (2, 0) -> (1, 1) on the boundary -> (0, 2) strictly inside
    intruder = LatticePath(0, [2, 1, 0])
    assert classify.mesh_entered(intruder, mm)
    # touching the boundary and leaving again is not an entry
    assert not classify.mesh_entered(LatticePath(0, [2, 1, 2]), mm)
    assert not classify.mesh_entered(paths.leftmost_path(g, (4, 0)), mm)


def test_t_mesh_epsilon_zero_fixture():
    f = field_from_spec(LatticeConfig(0.0, -3, 3, 0, 3),
                        {0: {-2: "R", 0: "L"}, 1: {-1: "R", 1: "L"}})
    comps = classify.t_mesh_components(f, 0)
    bounded = [c for c in comps if c.bounded]
    # two coalescences: at (-1, 1) and at (0, 2)
    assert len(bounded) == 2
    assert all(c.boundary_ok for c in bounded)
    sizes = sorted(len(c.faces) for c in bounded)
    assert sizes == [1, 2]


def test_t_mesh_boundaries_are_net_paths():
    seen = 0
    for seed in range(30):
        f = sample_arrow_field(LatticeConfig(0.3, -8, 8, 0, 10, seed=seed))
        for c in classify.t_mesh_components(f, 0):
            if c.bounded:
                assert paths.is_net_path(f, c.left_boundary)
                assert paths.is_net_path(f, c.right_boundary)
                assert c.boundary_ok
                seen += 1
    assert seen > 20


def test_t_mesh_full_slice_at_start():
    f = sample_arrow_field(LatticeConfig(0.3, -8, 8, 0, 10, seed=1))
    rs = classify.reachable_set(f, 4)
    assert rs.count(4) == len(f.sites(4))
    flat = sample_arrow_field(LatticeConfig(0.3, -8, 8, 0, 1, seed=1))
    assert all(c.faces[:, 1].min() == 0 for c in classify.t_mesh_components(flat, 0))


def test_incoming_signature(census_field):
    f = census_field
    assert classify.incoming_signature(f, (1, 5)) == IncomingType.C_O
    assert classify.incoming_signature(f, (0, 2)) == IncomingType.C_S
    assert classify.incoming_signature(f, (-1, 1)) == IncomingType.C_M
    assert classify.incoming_signature(f, (-1, 3)) == IncomingType.C_P
    assert classify.incoming_signature(f, (0, 0)) == IncomingType.C_O
