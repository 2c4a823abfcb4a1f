"""Harris construction for interfaces, vertex-path evolutions and their couplings.

Up- and down-arrows at rate 1/2 per site are materialised per (site, unit
time cell) from a counter-based generator, so every coupled member sees the
same arrows no matter which sites it inspects or when. Birth and death
clocks are independent rate ``J`` Poisson streams with the same contract.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _kernels
from ._kernels import _fallback
from ._rng import MASK64, ROLE_CLOCK_A, ROLE_CLOCK_B, ROLE_THIN_A, ROLE_THIN_B, poisson_times, uniform
from .lattice import (
    Interface,
    Vertex,
    VertexPath,
    cone_join,
    lattice_sum_right,
    to_particles,
    translate,
    vertex,
    vertex_coords,
)

KIND_UP, KIND_DOWN, KIND_JOIN, KIND_SHIFT_JOIN = 0, 1, 2, 3
KIND_NAMES = {KIND_UP: "up", KIND_DOWN: "down", KIND_JOIN: "join", KIND_SHIFT_JOIN: "shift_join"}


class OrderViolation(AssertionError):
    """A coupled pair lost its pointwise order; the theory forbids this."""


@dataclass(frozen=True)
class ArrowStream:
    """Poisson arrows of rate 1/2 per site and direction, keyed by ``seed``."""

    seed: int

    def arrows(self, lo: int, hi: int, s: float, t: float) -> list[tuple[float, int, int]]:
        """Arrows ``(time, site, dir)`` with time in ``(s, t]`` at sites ``[lo, hi]``.

        ``dir`` is 0 for an up-arrow and 1 for a down-arrow. Ties sort by site,
        then direction.
        """
        out: list[tuple[float, int, int]] = []
        for cell in range(int(math.floor(s)), int(math.ceil(t))):
            out.extend(a for a in _fallback.cell_arrows(self.seed, lo, hi, cell, s) if a[0] <= t)
        out.sort()
        return out


@dataclass(frozen=True)
class KillingClocks:
    """Birth (A) and death (B) Poisson clocks of rate ``J``.

    Events are drawn at rate ``base_J >= J`` and each is kept with
    probability ``J / base_J``; clocks with equal ``seed`` and ``base_J`` are
    therefore nested, which is the thinning coupling for rate comparison.
    """

    seed: int
    J: float
    replica: int = 0
    base_J: float | None = None

    def _rate(self) -> float:
        base = self.J if self.base_J is None else self.base_J
        if self.J < 0 or base < self.J:
            raise ValueError("need 0 <= J <= base_J")
        return base

    def _times(self, role: int, thin_role: int, horizon: float) -> np.ndarray:
        base = self._rate()
        if self.J == 0:
            return np.zeros(0)
        raw = poisson_times(self.seed, role, self.replica, base, horizon)
        if base == self.J:
            return np.asarray(raw, dtype=np.float64)
        p = self.J / base
        keep = [t for k, t in enumerate(raw) if uniform(self.seed, thin_role, self.replica, 0, k) < p]
        return np.asarray(keep, dtype=np.float64)

    def births(self, horizon: float) -> np.ndarray:
        return self._times(ROLE_CLOCK_A, ROLE_THIN_A, horizon)

    def deaths(self, horizon: float) -> np.ndarray:
        return self._times(ROLE_CLOCK_B, ROLE_THIN_B, horizon)

    def thinned(self, J_prime: float) -> "KillingClocks":
        return KillingClocks(self.seed, J_prime, self.replica, self._rate())


def clock_events(clocks: KillingClocks, horizon: float) -> tuple[np.ndarray, np.ndarray]:
    """Merged clock times and vertex increments ``(+1, 1)`` for births, ``(-1, 1)`` for deaths."""
    a = clocks.births(horizon)
    b = clocks.deaths(horizon)
    times = np.concatenate([a, b])
    d1 = np.concatenate([np.ones(a.size, dtype=np.int64), -np.ones(b.size, dtype=np.int64)])
    order = np.argsort(times, kind="stable")
    return times[order], d1[order]


def _path_from_jumps(v0: Vertex, times: np.ndarray, d1: np.ndarray) -> VertexPath:
    verts = []
    v = v0
    for s in d1:
        v = Vertex(v.v1 + int(s), v.v2 + 1)
        verts.append(v)
    return VertexPath(v0, tuple(float(t) for t in times), tuple(verts))


@dataclass(frozen=True)
class StandardPaths:
    O: VertexPath
    R: VertexPath
    z_minus: VertexPath
    z_plus: VertexPath


def standard_paths(xi: Interface, clocks: KillingClocks, delta: float, T: float) -> StandardPaths:
    """The constant path, the clock path and its two delta-discretisations on ``[0, T]``.

    ``z_minus`` holds ``R_{n delta}`` on ``[n delta, (n+1) delta)`` and
    ``z_plus`` holds ``R_{(n+1) delta}`` there, so it already jumps at time 0.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    v0 = vertex(xi)
    n_max = int(math.floor(T / delta + 1e-12))
    horizon = (n_max + 1) * delta
    times, d1 = clock_events(clocks, horizon)
    within = times <= T
    R = _path_from_jumps(v0, times[within], d1[within])
    full = _path_from_jumps(v0, times, d1)
    zm_t, zm_v, zp_t, zp_v = [], [], [], []
    prev_m = prev_p = v0
    for n in range(n_max + 1):
        tn = n * delta
        if n >= 1:
            v = full.at(tn)
            if v != prev_m:
                zm_t.append(tn)
                zm_v.append(v)
                prev_m = v
        v = full.at((n + 1) * delta)
        if v != prev_p:
            zp_t.append(tn)
            zp_v.append(v)
            prev_p = v
    return StandardPaths(
        O=VertexPath(v0),
        R=R,
        z_minus=VertexPath(v0, tuple(zm_t), tuple(zm_v)),
        z_plus=VertexPath(v0, tuple(zp_t), tuple(zp_v)),
    )


@dataclass
class CoupledBundle:
    """Members evolved on one arrow field, with final states and optional samples."""

    labels: list[str]
    initial: list[Interface]
    final: list[Interface]
    seed: int
    s: float
    t: float
    sample_times: np.ndarray
    samples: list[list[Interface]]
    pairs: list[tuple[int, int]]
    violations: int
    first_violation: float
    vertex_violations: int
    n_flips: int
    n_arrows: int
    log: dict[str, np.ndarray] | None = field(default=None, repr=False)
    meta: dict = field(default_factory=dict)

    def member(self, label: str) -> Interface:
        return self.final[self.labels.index(label)]

    def violation_report(self) -> dict:
        return {
            "violations": self.violations,
            "first_violation_time": None if self.violations == 0 else self.first_violation,
            "pairs": [(self.labels[i], self.labels[j]) for i, j in self.pairs],
        }

    def iter_states(self, member: int):
        """Yield ``(time, kind, interface)`` after each logged event of ``member``."""
        if self.log is None:
            raise ValueError("bundle was run without an event log")
        xi = self.initial[member]
        yield self.s, -1, xi
        lg = self.log
        for k in np.flatnonzero(lg["member"] == member):
            kind = int(lg["kind"][k])
            a, b = int(lg["a"][k]), int(lg["b"][k])
            if kind in (KIND_UP, KIND_DOWN):
                lo, hi = min(xi.L, a) - 1, max(xi.R, a) + 1
                h = xi.on(lo, hi)
                h[a - lo] = b
                xi = Interface.from_heights(lo, h, check=False)
            elif kind == KIND_JOIN:
                xi = cone_join(xi, (a, b))
            else:
                xi = cone_join(translate(xi, (a, b)), (0, 0))
            yield float(lg["time"][k]), kind, xi

    def to_csv(self, path) -> None:
        """Event log with columns ``time, site, kind, member`` plus the raw parameters."""
        if self.log is None:
            raise ValueError("bundle was run without an event log")
        lg = self.log
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["time", "site", "kind", "member", "a", "b", "seed"])
            for k in range(lg["time"].size):
                kind = int(lg["kind"][k])
                site = int(lg["a"][k]) if kind in (KIND_UP, KIND_DOWN) else ""
                w.writerow(
                    [
                        repr(float(lg["time"][k])),
                        site,
                        KIND_NAMES[kind],
                        self.labels[int(lg["member"][k])],
                        int(lg["a"][k]),
                        int(lg["b"][k]),
                        self.seed,
                    ]
                )


def run_coupled(
    initial: Sequence[Interface],
    labels: Sequence[str],
    seed: int,
    s: float,
    t: float,
    events: Sequence[tuple[float, int, int, int, int]] = (),
    pairs: Sequence[tuple[int, int]] = (),
    sample_times: Sequence[float] = (),
    record: bool = False,
    check_vertex: bool = False,
    backend: str | None = None,
    max_events: int = 100_000_000,
) -> CoupledBundle:
    """Evolve several interfaces on the arrows of ``seed`` over ``(s, t]``.

    ``events`` are ``(time, member, kind, a, b)`` with kind 0 meaning
    ``max{xi, V_(a,b)}`` and kind 1 meaning ``max{translate(xi, (a, b)), V_o}``.
    """
    if t < s:
        raise ValueError("need s <= t")
    ev = sorted(events, key=lambda e: (e[0], e[1]))
    ev_t = np.array([e[0] for e in ev], dtype=np.float64)
    cols = [np.array([e[i] for e in ev], dtype=np.int64) for i in range(1, 5)]
    mod = _kernels.active if backend is None else _kernels.get_backend(backend)
    smp = np.asarray(sorted(sample_times), dtype=np.float64)
    res = mod.interface_run(
        [xi.start for xi in initial],
        [np.asarray(xi.heights, dtype=np.int64) for xi in initial],
        int(seed) & MASK64,
        float(s),
        float(t),
        ev_t,
        *cols,
        np.asarray(list(pairs), dtype=np.int64).reshape(-1, 2),
        smp,
        log_events=record,
        check_vertex=check_vertex,
        max_events=max_events,
    )
    final = [Interface.from_heights(st, h, check=False) for st, h in zip(res["starts"], res["heights"])]
    samples = [[Interface.from_heights(st, h, check=False) for st, h in snap] for snap in res["samples"]]
    return CoupledBundle(
        labels=list(labels),
        initial=list(initial),
        final=final,
        seed=seed,
        s=s,
        t=t,
        sample_times=smp,
        samples=samples,
        pairs=[tuple(p) for p in pairs],
        violations=res["violations"],
        first_violation=res["first_violation"],
        vertex_violations=res["vertex_violations"],
        n_flips=res["n_flips"],
        n_arrows=res["n_arrows"],
        log=res["log"],
    )


def harris_evolve(xi: Interface, omega: ArrowStream | int, s: float, t: float, backend: str | None = None) -> Interface:
    """Apply the arrows of ``omega`` in ``(s, t]`` in time order."""
    seed = omega.seed if isinstance(omega, ArrowStream) else int(omega)
    return run_coupled([xi], ["xi"], seed, s, t, backend=backend).final[0]


def path_events(z: VertexPath, member: int, T: float) -> list[tuple[float, int, int, int, int]]:
    return [(tm, member, 0, v.v1, v.v2) for tm, v in zip(z.times, z.vertices) if tm <= T]


def evolve_with_vertex_path(
    xi: Interface,
    z: VertexPath,
    omega: ArrowStream | int,
    T: float,
    backend: str | None = None,
) -> Interface:
    """Harris dynamics between the jumps of ``z`` and a cone join at each jump."""
    seed = omega.seed if isinstance(omega, ArrowStream) else int(omega)
    return run_coupled([xi], ["xi"], seed, 0.0, T, events=path_events(z, 0, T), backend=backend).final[0]


def coupled_delta_sandwich(
    xi: Interface,
    J: float,
    delta: float,
    T: float,
    seed: int,
    replica: int = 0,
    sample_times: Sequence[float] = (),
    record: bool = False,
    strict: bool = True,
    inject_fault: bool = False,
    backend: str | None = None,
) -> CoupledBundle:
    """Lower delta process, true process and upper delta process on shared randomness.

    The order ``delta- <= true <= delta+`` is checked after every event.
    ``inject_fault`` swaps the two delta paths so the check must fire.
    """
    clocks = KillingClocks(seed, J, replica)
    paths = standard_paths(xi, clocks, delta, T)
    lower, upper = (paths.z_plus, paths.z_minus) if inject_fault else (paths.z_minus, paths.z_plus)
    events = path_events(lower, 0, T) + path_events(paths.R, 1, T) + path_events(upper, 2, T)
    bundle = run_coupled(
        [xi, xi, xi],
        ["delta_minus", "true", "delta_plus"],
        _arrow_seed(seed, replica),
        0.0,
        T,
        events=events,
        pairs=[(0, 1), (1, 2)],
        sample_times=sample_times,
        record=record,
        backend=backend,
    )
    bundle.meta.update({"J": J, "delta": delta, "replica": replica, "paths": paths, "clocks": clocks})
    if strict and bundle.violations:
        raise OrderViolation(f"sandwich broken {bundle.violations} times, first at t={bundle.first_violation}")
    return bundle


def _arrow_seed(seed: int, replica: int) -> int:
    """Arrow field seed for a replica; replica 0 uses ``seed`` itself."""
    if replica == 0:
        return int(seed) & MASK64
    return (int(seed) * 0x100000001B3 + replica * 0x9E3779B97F4A7C15) & MASK64


def centered_events(clocks: KillingClocks, T: float, member: int) -> list[tuple[float, int, int, int, int]]:
    """Recentering events: a birth shifts by ``(-1, 1)``, a death by ``(1, 1)``, then joins ``V_o``."""
    times, d1 = clock_events(clocks, T)
    return [(float(tm), member, 1, -int(s), 1) for tm, s in zip(times, d1)]


@dataclass
class CenteredTrajectory:
    bundle: CoupledBundle
    J: float
    births: np.ndarray
    deaths: np.ndarray

    @property
    def final(self) -> Interface:
        return self.bundle.final[0]

    @property
    def samples(self) -> list[Interface]:
        return [s[0] for s in self.bundle.samples]


def centered_evolve(
    xi: Interface,
    J: float,
    T: float,
    seed: int,
    replica: int = 0,
    sample_times: Sequence[float] = (),
    record: bool = False,
    backend: str | None = None,
) -> CenteredTrajectory:
    """The interface seen from its vertex, which stays at the origin."""
    if vertex_coords(xi) != (0, 0):
        raise ValueError(f"centered evolution needs vertex (0, 0), got {vertex_coords(xi)}")
    clocks = KillingClocks(seed, J, replica)
    b = run_coupled(
        [xi],
        ["centered"],
        _arrow_seed(seed, replica),
        0.0,
        T,
        events=centered_events(clocks, T, 0),
        sample_times=sample_times,
        record=record,
        check_vertex=True,
        backend=backend,
    )
    return CenteredTrajectory(b, J, clocks.births(T), clocks.deaths(T))


def coupled_rate_ordering(
    xi: Interface,
    J: float,
    J_prime: float,
    T: float,
    seed: int,
    replica: int = 0,
    sample_times: Sequence[float] = (),
    strict: bool = True,
    backend: str | None = None,
) -> CoupledBundle:
    """Centered processes at rates ``J >= J'`` with nested clocks; the ``J`` one stays below."""
    if J_prime > J:
        raise ValueError("need J' <= J")
    if vertex_coords(xi) != (0, 0):
        raise ValueError("rate-ordering coupling starts from vertex (0, 0)")
    hi = KillingClocks(seed, J, replica)
    lo = hi.thinned(J_prime)
    events = centered_events(hi, T, 0) + centered_events(lo, T, 1)
    bundle = run_coupled(
        [xi, xi],
        [f"J={J}", f"J'={J_prime}"],
        _arrow_seed(seed, replica),
        0.0,
        T,
        events=events,
        pairs=[(0, 1)],
        sample_times=sample_times,
        backend=backend,
    )
    bundle.meta.update({"J": J, "J_prime": J_prime, "replica": replica})
    if strict and bundle.violations:
        raise OrderViolation(f"rate ordering broken {bundle.violations} times")
    return bundle


@dataclass
class UncenteredRun:
    bundle: CoupledBundle
    births: np.ndarray
    deaths: np.ndarray

    @property
    def final(self) -> Interface:
        return self.bundle.final[0]


def evolve_uncentered(
    xi: Interface,
    J: float,
    T: float,
    seed: int,
    replica: int = 0,
    sample_times: Sequence[float] = (),
    record: bool = False,
    backend: str | None = None,
) -> UncenteredRun:
    """The interface driven by the clock path ``R``: a cone join at each birth or death."""
    clocks = KillingClocks(seed, J, replica)
    times, d1 = clock_events(clocks, T)
    R = _path_from_jumps(vertex(xi), times, d1)
    b = run_coupled(
        [xi],
        ["uncentered"],
        _arrow_seed(seed, replica),
        0.0,
        T,
        events=path_events(R, 0, T),
        sample_times=sample_times,
        record=record,
        check_vertex=True,
        backend=backend,
    )
    return UncenteredRun(b, clocks.births(T), clocks.deaths(T))


def height_identity_check(run: UncenteredRun) -> bool:
    """``xi_t(0) = 2 B_t + 2 #{particles of D(xi_t) at sites >= 0}`` after every event."""
    if run.bundle.log is None:
        raise ValueError("run must be recorded")
    if vertex_coords(run.bundle.initial[0]) != (0, 0):
        raise ValueError("identity applies to interfaces with vertex (0, 0)")
    deaths = np.sort(run.deaths)
    for t, _, xi in run.bundle.iter_states(0):
        b_t = int(np.searchsorted(deaths, t, side="right"))
        if xi(0) != 2 * b_t + 2 * lattice_sum_right(xi, 0):
            return False
    return True


def interface_width(xi: Interface) -> int:
    """``R - L + 1`` of ``D(xi)``."""
    eta = to_particles(xi)
    return eta.R - eta.L + 1
