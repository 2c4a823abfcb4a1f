"""Micro/macro experiments: sampling, block averages, good sets and hydrodynamic statistics."""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from ._rng import MASK64, ROLE_SAMPLER, uniform
from .harness import rescaled_harness
from .interface import coupled_delta_sandwich, evolve_uncentered
from .lattice import Interface, ParticleConfig, boundaries, to_particles, vertex_coords
from .macro import (
    MacroDensity,
    MacroInterface,
    barrier_limit,
    delta_evolve,
    delta_interface_evolve,
    density_sup_distance,
    interface_to_density,
    mass_right,
    stationary_profile,
    sup_distance,
)
from .particle import estimate_invariant_width


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    """Parameters for every experiment; unknown keys in a config file are rejected."""

    name: str = "hydro"
    j: float = 1.0
    delta: float = 0.01
    eps: list[float] = field(default_factory=lambda: [1 / 50, 1 / 100, 1 / 200])
    T: float = 1.0
    t: float = 0.5
    sample_times: list[float] = field(default_factory=list)
    h: float = 1e-3
    tol: float = 1e-6
    replicas: int = 20
    T_burn: float = 1e4
    T_avg: float = 1e5
    n_batches: int = 50
    J_list: list[float] = field(default_factory=lambda: [0.25, 0.5, 1.0])
    delta0: float = 0.05
    n_levels: int = 3
    sandwich_delta: float = 0.025
    alpha: float = 0.1
    beta: float = 0.5
    seed: int = 0
    out: str = "out"
    workers: int = 1

    def __post_init__(self) -> None:
        self.eps = sorted((float(e) for e in self.eps), reverse=True)
        self.validate()

    def validate(self) -> None:
        positive = ("delta", "T", "h", "tol", "T_burn", "T_avg", "delta0", "sandwich_delta")
        for name in positive:
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        if self.j < 0:
            raise ConfigError("j must be nonnegative")
        if self.t < 0:
            raise ConfigError("t must be nonnegative")
        if not self.eps or any(e <= 0 for e in self.eps):
            raise ConfigError("eps list must be nonempty and positive")
        if self.replicas < 1 or self.n_batches < 2 or self.n_levels < 2 or self.workers < 1:
            raise ConfigError("replicas, workers >= 1 and n_batches, n_levels >= 2 required")
        if any(J <= 0 for J in self.J_list):
            raise ConfigError("J_list entries must be positive")
        if not 0 < self.alpha < self.beta < 1:
            raise ConfigError("need 0 < alpha < beta < 1")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        return cls(**d)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc

    def to_dict(self) -> dict:
        return asdict(self)


# ---------------------------------------------------------------------------
# micro from macro
# ---------------------------------------------------------------------------


def _density_edges(rho: MacroDensity, tol: float = 1e-12) -> tuple[float, float]:
    """Left edge of ``{rho < 1}`` and right edge of ``{rho > 0}`` for the window representation."""
    xs, ys = rho.xs, rho.ys
    if rho.is_heaviside:
        return rho.left, rho.left
    full = ys >= 1.0 - tol
    k = int(np.argmin(full)) if not full.all() else xs.size - 1
    l = float(xs[max(k - 1, 0)]) if k > 0 else float(xs[0])
    empty = ys <= tol
    m = int(np.argmin(empty[::-1])) if not empty.all() else xs.size - 1
    r = float(xs[xs.size - m]) if m > 0 else float(xs[-1])
    return l, r


def sample_micro_from_macro(rho: MacroDensity, eps: float, mode: str = "deterministic", seed: int = 0) -> ParticleConfig:
    """Particle configuration at scale ``eps`` approximating ``rho``.

    Deterministic mode puts ``round(F(eps x) / eps)`` particles on the sites
    ``>= x``; bernoulli mode occupies ``x`` with probability ``rho(eps x)``
    inside the window, all sites to its left and none to its right.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    lo = int(math.floor(rho.left / eps)) - 1
    hi = int(math.ceil(rho.right / eps)) + 1
    x = np.arange(lo, hi + 2)
    if mode == "deterministic":
        n = np.floor(np.asarray(mass_right(rho, eps * x)) / eps + 0.5).astype(np.int64)
        bits = (n[:-1] - n[1:]).astype(np.uint8)
        return ParticleConfig.from_bits(lo, bits)
    if mode == "bernoulli":
        p = np.asarray(rho(eps * x[:-1]))
        u = np.array([uniform(int(seed) & MASK64, ROLE_SAMPLER, int(v) & MASK64, 0, 0) for v in x[:-1]])
        return ParticleConfig.from_bits(lo, (u < p).astype(np.uint8))
    raise ValueError(f"unknown mode {mode!r}")


def interface_from_macro(phi: MacroInterface, eps: float) -> Interface:
    """Lattice interface with ``xi(x) = x + c + 2 n(x)`` where ``n(x) = round((phi(eps x)/eps - x - c) / 2)``.

    The tail height ``c`` is the integer nearest ``phi.c / eps``.
    """
    c = int(round(phi.c / eps))
    lo = int(math.floor(min(phi.xs[0], 0.0) / eps)) - 1
    hi = int(math.ceil(max(phi.xs[-1], 0.0) / eps)) + 1
    x = np.arange(lo, hi + 1)
    g = (np.asarray(phi(eps * x.astype(np.float64))) / eps - x - c) / 2.0
    n = np.floor(g + 0.5).astype(np.int64)
    return Interface.from_heights(lo, x + c + 2 * n)


def block_average(eta: ParticleConfig, ell: int, lo: int | None = None, hi: int | None = None):
    """Block starts and averages over the partition into ``[k ell, (k+1) ell - 1]``.

    By default the blocks cover the window of ``eta`` plus one block on each side.
    """
    if ell < 1:
        raise ValueError("ell must be at least 1")
    L, R = boundaries(eta)
    lo = L if lo is None else lo
    hi = R if hi is None else hi
    k0 = lo // ell - 1
    k1 = hi // ell + 1
    starts = np.arange(k0, k1 + 1) * ell
    sites = starts[:, None] + np.arange(ell)[None, :]
    occ = np.asarray(eta.occupation(sites.ravel())).reshape(sites.shape)
    return starts, occ.mean(axis=1)


def block_average_macro(rho: MacroDensity, eps: float, ell: int, starts: np.ndarray) -> np.ndarray:
    a = eps * starts.astype(np.float64)
    b = eps * (starts + ell).astype(np.float64)
    return (np.asarray(mass_right(rho, a)) - np.asarray(mass_right(rho, b))) / (eps * ell)


@dataclass
class GoodSetResult:
    ok: bool
    boundary_error: float
    worst_block: int | None
    worst_block_error: float
    threshold: float
    ell: int

    def __iter__(self):
        return iter((self.ok, self.worst_block, self.boundary_error))


def good_set_check(eta: ParticleConfig, rho: MacroDensity, eps: float, alpha: float, beta: float) -> GoodSetResult:
    """Edge clause and block clause with ``ell = floor(eps^-beta)``; the edge blocks are excluded."""
    if not 0 < alpha < beta < 1:
        raise ValueError("need 0 < alpha < beta < 1")
    ell = int(math.floor(eps**-beta))
    thr = eps**alpha
    l_rho, r_rho = _density_edges(rho)
    L, R = boundaries(eta)
    edge = abs(eps * L - l_rho) + abs(eps * R - r_rho)
    lo = min(L, int(math.floor(l_rho / eps)))
    hi = max(R, int(math.ceil(r_rho / eps)))
    starts, a_eta = block_average(eta, ell, lo, hi)
    a_rho = block_average_macro(rho, eps, ell, starts)
    kb = starts // ell

    def span(p: float, q: float) -> tuple[int, int]:
        return min(int(p) // ell, int(q) // ell), max(int(p) // ell, int(q) // ell)

    kl = span(L, math.floor(l_rho / eps))
    kr = span(R, math.floor(r_rho / eps))
    excluded = ((kb >= kl[0]) & (kb <= kl[1])) | ((kb >= kr[0]) & (kb <= kr[1]))
    err = np.abs(a_eta - a_rho)
    err[excluded] = 0.0
    k = int(np.argmax(err))
    worst = float(err[k])
    return GoodSetResult(edge <= thr and worst <= thr, edge, int(starts[k]) if worst > 0 else None, worst, thr, ell)


# ---------------------------------------------------------------------------
# hydrodynamic statistics
# ---------------------------------------------------------------------------


def _s_points(eta: ParticleConfig, rho: MacroDensity, eps: float):
    L, R = boundaries(eta)
    x_lo = min(L, int(math.floor(rho.left / eps))) - 2
    x_hi = max(R, int(math.ceil(rho.right / eps))) + 2
    x = np.arange(x_lo, x_hi + 1)
    occ = np.asarray(eta.occupation(x)).astype(np.float64)
    return x, occ


def hydro_statistic_density(eta: ParticleConfig, rho: MacroDensity, eps: float) -> float:
    """``sup_{a <= b} |eps sum_{eps x in [a, b]} eta(x) - int_a^b rho|``.

    Equals ``max S - min S`` with ``S(r) = eps sum_{eps x <= r} eta(x) - int^r rho``.
    ``S`` decreases between atoms, so its extremes are the one-sided limits
    at the atoms and the values at the breakpoints of ``rho``.
    """
    x, occ = _s_points(eta, rho, eps)
    r0 = eps * float(x[0])
    pos = eps * x.astype(np.float64)
    F0 = mass_right(rho, r0)
    integ = F0 - np.asarray(mass_right(rho, pos))
    after = eps * np.cumsum(occ) - integ
    before = after - eps * occ
    bp = rho.xs[(rho.xs > r0) & (rho.xs < pos[-1])]
    k = np.searchsorted(pos, bp, side="right")
    cnt = np.concatenate([[0.0], eps * np.cumsum(occ)])[k]
    at_bp = cnt - (F0 - np.asarray(mass_right(rho, bp)))
    vals = np.concatenate([[0.0], after, before, at_bp])
    return float(vals.max() - vals.min())


def hydro_statistic_density_bruteforce(eta: ParticleConfig, rho: MacroDensity, eps: float) -> float:
    """Two-index sup over candidate interval ends; quadratic, for checking."""
    x, occ = _s_points(eta, rho, eps)
    pos = eps * x.astype(np.float64)
    cands = np.unique(np.concatenate([pos, rho.xs]))
    best = 0.0
    for i, a in enumerate(cands):
        for b in cands[i:]:
            for inc_a in (True, False):
                for inc_b in (True, False):
                    sel = ((pos > a) | (inc_a & (pos == a))) & ((pos < b) | (inc_b & (pos == b)))
                    m = eps * occ[sel].sum()
                    integ = mass_right(rho, a) - mass_right(rho, b)
                    best = max(best, abs(m - integ))
    return best


def hydro_statistic_interface(xi: Interface, phi: MacroInterface, eps: float) -> float:
    """``sup_x |eps xi(x) - phi(eps x)|`` over the union of both windows plus the two tails."""
    v1 = vertex_coords(xi)[0]
    lo = min(xi.L, v1, 0, int(math.floor(phi.xs[0] / eps))) - 1
    hi = max(xi.R, v1, 0, int(math.ceil(phi.xs[-1] / eps))) + 1
    x = np.arange(lo, hi + 1)
    d = np.abs(eps * np.asarray(xi(x), dtype=np.float64) - np.asarray(phi(eps * x.astype(np.float64))))
    # beyond the windows both sides are cones with unit slopes, so the differences are constant
    return float(d.max())


# ---------------------------------------------------------------------------
# experiments
# ---------------------------------------------------------------------------


def _meta(cfg: ExperimentConfig) -> dict:
    # no wall-clock fields, so a report is a pure function of (config, seed)
    return {"version": __version__, "seed": cfg.seed, "config": cfg.to_dict()}


@dataclass
class HydroReport:
    eps: list[float]
    density_stats: list[list[float]]
    interface_stats: list[list[float]]
    good_set: list[list[bool]]
    sandwich_violations: list[int]
    harness_stats: list[float]
    barrier_gaps: list[float]
    barrier_gap_bounds: list[float]
    nesting_defect: float
    seeds: list[int]
    harness_stats_exact: list[float] | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        for row in self.density_stats + self.interface_stats:
            if any(v < 0 for v in row):
                raise ValueError("discrepancies must be nonnegative")

    @property
    def density_medians(self) -> list[float]:
        return [float(np.median(r)) for r in self.density_stats]

    @property
    def interface_medians(self) -> list[float]:
        return [float(np.median(r)) for r in self.interface_stats]

    @staticmethod
    def _decreasing(v: Sequence[float]) -> bool:
        return all(b < a for a, b in zip(v, v[1:]))

    @property
    def density_monotone(self) -> bool:
        return self._decreasing(self.density_medians)

    @property
    def interface_monotone(self) -> bool:
        return self._decreasing(self.interface_medians)

    @property
    def harness_monotone(self) -> bool:
        return self._decreasing(self.harness_stats)

    @property
    def harness_exact_monotone(self) -> bool | None:
        if self.harness_stats_exact is None:
            return None
        return self._decreasing(self.harness_stats_exact)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.update(
            density_medians=self.density_medians,
            interface_medians=self.interface_medians,
            density_monotone=self.density_monotone,
            interface_monotone=self.interface_monotone,
            harness_monotone=self.harness_monotone,
            harness_exact_monotone=self.harness_exact_monotone,
        )
        return d


def replica_seed(seed: int, k: int) -> int:
    """Independent seed for the ``k``-th replica of an experiment."""
    return (int(seed) * 1000003 + 7919 * (k + 1)) & MASK64


def _hydro_one(args) -> tuple[float, float, bool, int]:
    eps, j, t, seed, phi0, phi_t, rho_t, sandwich_delta, alpha, beta = args
    xi0 = interface_from_macro(phi0, eps)
    J = eps * j
    T = t / (eps * eps)
    run = evolve_uncentered(xi0, J, T, seed)
    xi = run.final
    eta = to_particles(xi)
    s_int = hydro_statistic_interface(xi, phi_t, eps)
    s_den = hydro_statistic_density(eta, rho_t, eps)
    good = good_set_check(eta, rho_t, eps, alpha, beta).ok
    viol = 0
    if J > 0:
        b = coupled_delta_sandwich(xi0, J, sandwich_delta / (eps * eps), T, seed, strict=False)
        viol = b.violations
    return s_den, s_int, good, viol


def _map(fn, jobs, workers: int):
    if workers <= 1:
        return [fn(a) for a in jobs]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, jobs))


def macro_target(phi0: MacroInterface, j: float, t: float, delta0: float, n_levels: int):
    """Barrier midpoint estimate of ``phi_t`` and its density, plus the gap certificate."""
    if t == 0:
        return phi0, interface_to_density(phi0), None
    lim = barrier_limit(phi0, j, t, min(delta0, t), n_levels)
    return lim.estimate, interface_to_density(lim.estimate), lim


def stationary_target(j: float, t: float, h: float = 1e-3) -> MacroInterface:
    """``phi_bar + 2 j t``, the exact evolution of the stationary profile."""
    phi = stationary_profile(j, h)[1]
    return MacroInterface(phi.h, phi.xs, phi.ys + 2.0 * j * t, phi.c + 2.0 * j * t)


def run_hydro_experiment(cfg: ExperimentConfig, phi0: MacroInterface | None = None) -> HydroReport:
    """Micro interfaces from ``phi0`` run to ``t / eps^2`` at ``J = eps j``, compared with the barrier estimate.

    Without ``phi0`` the stationary profile is used, and the harness is also
    compared with its exact evolution.
    """
    exact = None
    if phi0 is None:
        if cfg.j > 0:
            phi0 = stationary_profile(cfg.j, cfg.h)[1]
            exact = stationary_target(cfg.j, cfg.t, cfg.h)
        else:
            phi0 = MacroInterface.cone(0.0, cfg.h)
    phi_t, rho_t, lim = macro_target(phi0, cfg.j, cfg.t, cfg.delta0, cfg.n_levels)
    seeds = [replica_seed(cfg.seed, k) for k in range(cfg.replicas)]
    dens, ints, goods, viols, harn, harn_exact = [], [], [], [], [], []
    for eps in cfg.eps:
        jobs = [(eps, cfg.j, cfg.t, s, phi0, phi_t, rho_t, cfg.sandwich_delta, cfg.alpha, cfg.beta) for s in seeds]
        res = _map(_hydro_one, jobs, cfg.workers)
        dens.append([r[0] for r in res])
        ints.append([r[1] for r in res])
        goods.append([bool(r[2]) for r in res])
        viols.append(int(sum(r[3] for r in res)))
        K = rescaled_harness(phi0, cfg.j, eps, cfg.t)
        harn.append(sup_distance(K, phi_t))
        if exact is not None:
            harn_exact.append(sup_distance(K, exact))
    gaps = lim.gaps if lim else []
    bounds = lim.gap_bounds if lim else []
    defect = lim.nesting_defect if lim else 0.0
    return HydroReport(
        list(cfg.eps),
        dens,
        ints,
        goods,
        viols,
        harn,
        gaps,
        bounds,
        defect,
        seeds,
        harn_exact if exact is not None else None,
        _meta(cfg),
    )


def run_harness_hydro_experiment(cfg: ExperimentConfig, phi0: MacroInterface | None = None) -> dict:
    """Sup distance between the rescaled harness and the barrier estimate across the eps sweep."""
    exact = None
    if phi0 is None:
        phi0 = stationary_profile(cfg.j, cfg.h)[1]
        exact = stationary_target(cfg.j, cfg.t, cfg.h)
    phi_t, _, lim = macro_target(phi0, cfg.j, cfg.t, cfg.delta0, cfg.n_levels)
    profiles = [rescaled_harness(phi0, cfg.j, e, cfg.t) for e in cfg.eps]
    stats = [sup_distance(K, phi_t) for K in profiles]
    stats_exact = [sup_distance(K, exact) for K in profiles] if exact is not None else None
    return {
        "eps": list(cfg.eps),
        "harness_stats": stats,
        "monotone": HydroReport._decreasing(stats),
        "harness_stats_exact": stats_exact,
        "monotone_exact": HydroReport._decreasing(stats_exact) if stats_exact else None,
        "barrier_gap": lim.certified_gap if lim else 0.0,
        **_meta(cfg),
    }


def run_invariant_experiment(cfg: ExperimentConfig, z: float = 1.96) -> dict:
    """Time-averaged width of the centered process against ``1/(2J)`` for each ``J``."""
    rows = []
    for k, J in enumerate(cfg.J_list):
        est = estimate_invariant_width(J, cfg.T_burn / J, cfg.T_avg / J, replica_seed(cfg.seed, k), cfg.n_batches)
        target = 1.0 / (2.0 * J)
        rows.append(
            {
                "J": J,
                "estimate": est.estimate,
                "stderr": est.stderr,
                "target": target,
                "ci": [est.estimate - z * est.stderr, est.estimate + z * est.stderr],
                "covers": abs(est.estimate - target) <= z * est.stderr,
                "rel_error": abs(est.estimate - target) / target,
            }
        )
    return {"rows": rows, **_meta(cfg)}


def run_stationary_experiment(cfg: ExperimentConfig) -> dict:
    """Delta evolutions started at the stationary profile, compared with it at time ``T``."""
    rho_bar, phi_bar = stationary_profile(cfg.j, cfg.h)
    den = delta_evolve(rho_bar, cfg.j, cfg.delta, cfg.T, "-")
    lo = delta_interface_evolve(phi_bar, cfg.j, cfg.delta, cfg.T, "-")
    up = delta_interface_evolve(phi_bar, cfg.j, cfg.delta, cfg.T, "+")
    moved = MacroInterface(phi_bar.h, phi_bar.xs, phi_bar.ys + 2.0 * cfg.j * cfg.T, phi_bar.c + 2.0 * cfg.j * cfg.T)
    return {
        "density_distance": density_sup_distance(den.profiles[-1], rho_bar),
        "interface_distance_lower": sup_distance(lo.profiles[-1], moved),
        "interface_distance_upper": sup_distance(up.profiles[-1], moved),
        "barrier_gap": sup_distance(lo.profiles[-1], up.profiles[-1]),
        **_meta(cfg),
    }
