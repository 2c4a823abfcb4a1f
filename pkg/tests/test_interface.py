from __future__ import annotations

import csv

import numpy as np
import pytest

from freessep.interface import (
    ArrowStream,
    KillingClocks,
    OrderViolation,
    centered_evolve,
    centered_events,
    clock_events,
    coupled_delta_sandwich,
    coupled_rate_ordering,
    evolve_uncentered,
    evolve_with_vertex_path,
    harris_evolve,
    height_identity_check,
    path_events,
    run_coupled,
    standard_paths,
)
from freessep.lattice import (
    Interface,
    Vertex,
    VertexPath,
    cone_join,
    ParticleConfig,
    lattice_sum_right,
    to_interface,
    vertex_coords,
    to_particles,
    translate,
    vertex,
)

CONE = Interface.cone(0, 0)


def reference_evolve(xi: Interface, seed: int, s: float, t: float, events=(), lo=-80, hi=80) -> Interface:
    """Naive evolution: every arrow on a fixed wide window, boundary events first on ties."""
    arrows = ArrowStream(seed).arrows(lo, hi, s, t)
    items = [(e[0], 0, e) for e in sorted(events)] + [(a[0], 1, a) for a in arrows]
    items.sort(key=lambda z: (z[0], z[1]))
    for _, typ, e in items:
        if typ == 0:
            _, _, kind, a, b = e
            xi = cone_join(xi, (a, b)) if kind == 0 else cone_join(translate(xi, (a, b)), (0, 0))
            continue
        _, x, d = e
        if xi(x - 1) == xi(x + 1):
            assert lo < xi.L and xi.R < hi, "reference window too small"
            lo_, hi_ = min(xi.L, x) - 1, max(xi.R, x) + 1
            h = xi.on(lo_, hi_)
            h[x - lo_] = h[x - 1 - lo_] + (1 if d == 0 else -1)
            xi = Interface.from_heights(lo_, h)
    return xi


def local_min() -> Interface:
    return Interface.from_heights(-1, [1, 0, 1])


class TestArrows:
    def test_query_order_independent(self):
        a = ArrowStream(7)
        full = a.arrows(-5, 5, 0.0, 3.0)
        part = a.arrows(-5, 0, 0.0, 3.0) + a.arrows(1, 5, 0.0, 3.0)
        assert sorted(part) == full
        split = a.arrows(-5, 5, 0.0, 1.3) + a.arrows(-5, 5, 1.3, 3.0)
        assert split == full

    def test_rate(self):
        arr = ArrowStream(3).arrows(0, 99, 0.0, 50.0)
        # 100 sites, two directions, rate 1/2 each, 50 time units
        assert abs(len(arr) - 5000) < 4 * np.sqrt(5000)
        dirs = np.array([a[2] for a in arr])
        assert abs(dirs.mean() - 0.5) < 0.03

    def test_distinct_times(self):
        arr = ArrowStream(1).arrows(-20, 20, 0.0, 20.0)
        times = [a[0] for a in arr]
        assert len(set(times)) == len(times)


class TestUpdateRule:
    def test_up_arrow_at_minimum(self):
        xi = local_min()
        seed = next(s for s in range(500) if _first_arrow(s, 0) == 0)
        t = ArrowStream(seed).arrows(0, 0, 0.0, 5.0)[0][0]
        out = run_coupled([xi], ["x"], seed, 0.0, t).final[0]
        if out(0) == 0:
            pytest.skip("neighbouring arrow fired first")
        assert out(0) == 2

    def test_down_arrow_at_minimum_is_noop(self):
        xi = local_min()
        seed = next(s for s in range(500) if _first_arrow(s, 0) == 1 and _quiet_neighbours(s))
        t = ArrowStream(seed).arrows(0, 0, 0.0, 5.0)[0][0]
        out = run_coupled([xi], ["x"], seed, 0.0, t).final[0]
        assert out == xi


def _first_arrow(seed: int, x: int) -> int:
    arr = ArrowStream(seed).arrows(x, x, 0.0, 5.0)
    return arr[0][2] if arr else -1


def _quiet_neighbours(seed: int) -> bool:
    arr = ArrowStream(seed).arrows(-2, 2, 0.0, 5.0)
    return bool(arr) and arr[0][1] == 0


class TestHarris:
    @pytest.mark.parametrize("seed", range(6))
    def test_matches_reference(self, backend, seed):
        xi = cone_join(CONE, (1, 3))
        assert harris_evolve(xi, seed, 0.0, 8.0, backend=backend) == reference_evolve(xi, seed, 0.0, 8.0)

    def test_vertex_conserved(self):
        xi = cone_join(CONE, (-2, 4))
        b = run_coupled([xi], ["x"], 4, 0.0, 20.0, record=True, check_vertex=True)
        assert b.vertex_violations == 0
        assert all(vertex(s) == vertex(xi) for _, _, s in b.iter_states(0))

    def test_time_split(self):
        xi = cone_join(CONE, (0, 4))
        mid = harris_evolve(xi, 9, 0.0, 2.5)
        assert harris_evolve(mid, 9, 2.5, 6.0) == harris_evolve(xi, 9, 0.0, 6.0)

    @pytest.mark.parametrize("seed", range(5))
    def test_attractive(self, seed):
        lo = cone_join(CONE, (1, 1))
        hi = cone_join(lo, (-1, 3))
        b = run_coupled([lo, hi], ["lo", "hi"], seed, 0.0, 30.0, pairs=[(0, 1)])
        assert b.violations == 0
        xs = np.arange(-40, 41)
        assert np.all(b.final[0](xs) <= b.final[1](xs))

    def test_event_log_csv(self, tmp_path):
        b = run_coupled([CONE], ["x"], 2, 0.0, 5.0, record=True)
        p = tmp_path / "log.csv"
        b.to_csv(p)
        rows = list(csv.reader(p.open()))
        assert rows[0][:4] == ["time", "site", "kind", "member"]


class TestVertexPaths:
    def test_constant_path_is_harris(self):
        z = VertexPath(Vertex(0, 0))
        assert evolve_with_vertex_path(CONE, z, 3, 10.0) == harris_evolve(CONE, 3, 0.0, 10.0)

    def test_zero_rate_path_is_harris(self):
        sp = standard_paths(CONE, KillingClocks(3, 0.0), 1.0, 10.0)
        assert sp.R.n_events == 0
        assert evolve_with_vertex_path(CONE, sp.R, 3, 10.0) == harris_evolve(CONE, 3, 0.0, 10.0)

    def test_single_event(self):
        z = VertexPath(Vertex(0, 0), (0.0,), (Vertex(-1, 1),))
        out = run_coupled([CONE], ["x"], 0, 0.0, 0.0, events=path_events(z, 0, 1.0)).final[0]
        assert out == cone_join(CONE, (-1, 1))

    @pytest.mark.parametrize("seed", range(6))
    def test_path_evolution_matches_reference(self, backend, seed):
        sp = standard_paths(CONE, KillingClocks(seed, 0.5), 1.0, 10.0)
        for z in (sp.R, sp.z_minus, sp.z_plus):
            ev = path_events(z, 0, 10.0)
            got = run_coupled([CONE], ["x"], seed, 0.0, 10.0, events=ev, backend=backend).final[0]
            assert got == reference_evolve(CONE, seed, 0.0, 10.0, ev)

    def test_final_vertex_is_path_end(self):
        sp = standard_paths(CONE, KillingClocks(2, 0.5), 1.0, 10.0)
        out = evolve_with_vertex_path(CONE, sp.R, 2, 10.0)
        assert vertex(out) == sp.R.at(10.0)


class TestStandardPaths:
    def test_empty_clocks(self):
        sp = standard_paths(CONE, KillingClocks(0, 0.0), 1.0, 5.0)
        assert sp.O.n_events == sp.R.n_events == sp.z_minus.n_events == sp.z_plus.n_events == 0

    def test_one_birth(self):
        # find a seed with exactly one clock event in [0, 2), a birth in (0, 1)
        for seed in range(2000):
            c = KillingClocks(seed, 0.2)
            t, d = clock_events(c, 2.0)
            if t.size == 1 and d[0] == 1 and t[0] < 1.0:
                break
        sp = standard_paths(CONE, c, 1.0, 1.5)
        assert sp.R.times == (t[0],)
        assert sp.z_minus.times == (1.0,)
        assert sp.z_plus.times == (0.0,)
        assert sp.R.vertices[0] == Vertex(1, 1)

    @pytest.mark.parametrize("seed", range(10))
    def test_cone_order(self, seed):
        sp = standard_paths(CONE, KillingClocks(seed, 0.7), 0.5, 8.0)
        for t in np.arange(0.0, 8.0, 0.125):
            o, zm, r, zp = (p.at(t) for p in (sp.O, sp.z_minus, sp.R, sp.z_plus))
            assert o.leq(zm) and zm.leq(r) and r.leq(zp)


class TestSandwich:
    def test_zero_rate_members_identical(self):
        b = coupled_delta_sandwich(CONE, 0.0, 1.0, 10.0, seed=1)
        assert b.final[0] == b.final[1] == b.final[2]

    @pytest.mark.parametrize("seed", range(10))
    def test_no_violations(self, seed):
        b = coupled_delta_sandwich(CONE, 0.5, 1.0, 10.0, seed=seed)
        assert b.violations == 0

    def test_injected_fault_fires(self):
        fired = 0
        for seed in range(10):
            try:
                coupled_delta_sandwich(CONE, 0.5, 1.0, 10.0, seed=seed, inject_fault=True)
            except OrderViolation:
                fired += 1
        assert fired > 0

    def test_large_delta_ignores_killings(self):
        b = coupled_delta_sandwich(CONE, 0.5, 100.0, 10.0, seed=3)
        assert b.meta["paths"].z_minus.n_events == 0
        assert b.final[0] == harris_evolve(CONE, b.seed, 0.0, 10.0)

    def test_members_match_reference(self):
        b = coupled_delta_sandwich(CONE, 0.5, 1.0, 10.0, seed=4)
        paths = b.meta["paths"]
        for k, z in enumerate((paths.z_minus, paths.R, paths.z_plus)):
            assert b.final[k] == reference_evolve(CONE, b.seed, 0.0, 10.0, path_events(z, 0, 10.0))


class TestCentered:
    def test_no_events_keeps_vertex(self):
        tr = centered_evolve(CONE, 0.0, 5.0, seed=2, record=True)
        assert vertex(tr.final) == Vertex(0, 0)

    def test_single_death(self):
        out = run_coupled([CONE], ["x"], 0, 0.0, 0.0, events=[(0.0, 0, 1, 1, 1)]).final[0]
        expected = cone_join(translate(CONE, (1, 1)), (0, 0))
        assert out == expected
        xs = np.arange(-5, 6)
        assert np.array_equal(out(xs), np.maximum(np.abs(xs - 1) - 1, np.abs(xs)))

    @pytest.mark.parametrize("seed", range(5))
    def test_vertex_stays_at_origin(self, seed):
        tr = centered_evolve(CONE, 0.5, 30.0, seed=seed, record=True)
        assert tr.bundle.vertex_violations == 0
        assert all(vertex(s) == Vertex(0, 0) for _, _, s in tr.bundle.iter_states(0))

    def test_wrong_vertex(self):
        with pytest.raises(ValueError):
            centered_evolve(cone_join(CONE, (1, 1)), 0.5, 1.0, seed=0)

    def test_matches_reference(self):
        clocks = KillingClocks(6, 0.5)
        ev = centered_events(clocks, 15.0, 0)
        tr = centered_evolve(CONE, 0.5, 15.0, seed=6)
        assert tr.final == reference_evolve(CONE, tr.bundle.seed, 0.0, 15.0, ev)


class TestHeightIdentity:
    def test_initial(self):
        xi = to_interface(ParticleConfig.from_occupied(0, extra=[2, 3], removed=[-1, -3]), 0)
        assert vertex_coords(xi) == (0, 0)
        assert xi(0) == 2 * lattice_sum_right(xi, 0)

    @pytest.mark.parametrize("seed", range(5))
    def test_runs(self, seed):
        run = evolve_uncentered(CONE, 0.5, 20.0, seed=seed, record=True)
        assert height_identity_check(run)

    def test_after_one_death(self):
        ev = [(0.0, 0, 0, -1, 1)]
        b = run_coupled([CONE], ["x"], 0, 0.0, 0.0, events=ev)
        xi = b.final[0]
        assert xi(0) == 2 * 1 + 2 * lattice_sum_right(xi, 0)


class TestRateOrdering:
    def test_equal_rates_identical(self):
        b = coupled_rate_ordering(CONE, 0.5, 0.5, 10.0, seed=1)
        assert b.final[0] == b.final[1]

    @pytest.mark.parametrize("seed", range(10))
    def test_ordered(self, seed):
        b = coupled_rate_ordering(CONE, 1.0, 0.5, 10.0, seed=seed)
        assert b.violations == 0

    def test_zero_lower_rate_dominates(self):
        b = coupled_rate_ordering(CONE, 1.0, 0.0, 10.0, seed=2)
        assert b.final[1] == harris_evolve(CONE, b.seed, 0.0, 10.0)

    def test_rejects_wrong_order(self):
        with pytest.raises(ValueError):
            coupled_rate_ordering(CONE, 0.5, 1.0, 1.0, seed=0)


def test_flips_are_particle_moves():
    run = evolve_uncentered(CONE, 0.5, 20.0, seed=8, record=True)
    prev = to_particles(CONE)
    for _, kind, xi in run.bundle.iter_states(0):
        eta = to_particles(xi)
        if kind in (0, 1):
            diff = np.flatnonzero(eta.window(-60, 60) != prev.window(-60, 60))
            assert diff.size in (0, 2) and (diff.size == 0 or diff[1] == diff[0] + 1)
        prev = eta
