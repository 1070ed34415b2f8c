from bnetlab import invariants
from bnetlab.lattice import LatticeConfig, sample_arrow_field


def test_small_suite_is_clean():
    res = invariants.run_suite(cases=24, seed=11)
    assert res.ok, res.failures
    assert res.epsilons == (0.0, 0.1, 0.5, 1.0)


def test_each_check_on_fixed_field(census_field, four_slice_field):
    for f in (census_field, four_slice_field):
        for name in invariants.CHECKS:
            assert invariants._run_check(name, f, 0) == [], name


def test_random_window_shape():
    import numpy as np
    rng = np.random.default_rng(0)
    for _ in range(200):
        x_lo, x_hi, t_lo, t_hi = invariants.random_window(rng)
        assert (x_hi - x_lo) % 2 == 0 and x_hi > x_lo
        assert 1 <= t_hi - t_lo <= 10


def test_shrinker_reduces_window(monkeypatch):
    # a planted check failing whenever the window holds a Both site
    def planted(field, rng):
        c = field.config
        hits = [(x, t) for t in range(c.t_lo, c.t_hi + 1) for x in field.sites(t)
                if field.arrows(int(x), t) == 3]
        return [f"both at {hits[0]}"] if hits else []

    monkeypatch.setitem(invariants.CHECKS, "planted", planted)
    f = sample_arrow_field(LatticeConfig(0.3, -6, 6, 0, 8, seed=4))
    assert planted(f, None)
    small, msgs = invariants.shrink("planted", f, 0)
    c = small.config
    assert msgs
    assert (c.x_hi - c.x_lo) * (c.t_hi - c.t_lo + 1) < 13 * 9
    res = invariants.run_suite(cases=4, epsilons=(1.0,), checks=["planted"])
    assert not res.ok and res.failures[0].check == "planted"
