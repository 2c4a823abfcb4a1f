"""Macroscopic delta evolutions for densities and interfaces.

Profiles are continuous piecewise-linear functions on sorted breakpoints.
Grid nodes sit at integer multiples of ``h``; cut points and cone crossings
are inserted exactly, never snapped to the grid. Heat steps convolve the
piecewise-linear profile with the Gaussian kernel in closed form, so the
only numerical error is linear interpolation between output nodes.

Normalisation: ``phi' = 1 - 2 rho`` and an interface with tails ``|r| + c``
satisfies ``phi(0) = c + 2 F(0; rho)``. One delta period raises the cone by
``2 j delta``, which is exactly the removal of mass ``j delta`` on the
density side.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import ndtr, ndtri

_SQRT2PI = math.sqrt(2.0 * math.pi)

DEFAULT_H = 1e-3
DEFAULT_TAIL_TOL = 1e-10


class QuantileError(ValueError):
    """The requested mass is not available inside the represented window."""


class DeltaTooLarge(ValueError):
    """A mass removal found no positive right quantile; shrink delta for this j."""


class LipschitzError(ValueError):
    pass


class BarrierOrderError(AssertionError):
    pass


def _npdf(z: np.ndarray) -> np.ndarray:
    return np.exp(-0.5 * z * z) / _SQRT2PI


def _phi_diff(zp: np.ndarray, zq: np.ndarray) -> np.ndarray:
    """``Phi(zq) - Phi(zp)`` without cancellation in the upper tail."""
    upper = zp > 0
    return np.where(upper, ndtr(-zp) - ndtr(-zq), ndtr(zq) - ndtr(zp))


def _conv_pl(r: np.ndarray, xs: np.ndarray, ys: np.ndarray, sigma: float, block: int = 256) -> np.ndarray:
    """Gaussian convolution of the piecewise-linear ``(xs, ys)`` restricted to ``[xs[0], xs[-1]]``."""
    out = np.zeros(r.size)
    if xs.size < 2:
        return out
    p, q = xs[:-1], xs[1:]
    yp = ys[:-1]
    width = q - p
    beta = np.divide(ys[1:] - yp, width, out=np.zeros_like(width), where=width > 0)
    keep = width > 0
    p, q, yp, beta = p[keep], q[keep], yp[keep], beta[keep]
    for s in range(0, r.size, block):
        rr = r[s : s + block, None]
        zp = (p[None, :] - rr) / sigma
        zq = (q[None, :] - rr) / sigma
        coef = yp[None, :] + beta[None, :] * (rr - p[None, :])
        term = coef * _phi_diff(zp, zq) + (beta * sigma)[None, :] * (_npdf(zp) - _npdf(zq))
        out[s : s + block] = term.sum(axis=1)
    return out


def _grid(lo: float, hi: float, h: float) -> np.ndarray:
    k0 = math.floor(lo / h)
    k1 = math.ceil(hi / h)
    return np.arange(k0, k1 + 1, dtype=np.float64) * h


def _tail_z(tail_tol: float) -> float:
    return float(-ndtri(tail_tol))


# ---------------------------------------------------------------------------
# densities
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class MacroDensity:
    """Density equal to 1 left of ``xs[0]``, 0 right of ``xs[-1]``, linear in between.

    Jumps are allowed at the two window ends. ``kind`` is ``"R"`` for exact
    finite boundaries and ``"U"`` after a heat step, whose tails are cut at
    ``tail_tol``.
    """

    h: float
    xs: np.ndarray
    ys: np.ndarray
    kind: str = "R"

    def __post_init__(self) -> None:
        if self.xs.size == 0 or self.xs.size != self.ys.size:
            raise ValueError("breakpoints and values must be nonempty and aligned")
        if np.any(np.diff(self.xs) < 0):
            raise ValueError("breakpoints must be sorted")

    @classmethod
    def heaviside(cls, h: float = DEFAULT_H) -> "MacroDensity":
        return cls(h, np.array([0.0]), np.array([0.5]))

    @classmethod
    def from_function(cls, f, left: float, right: float, h: float = DEFAULT_H) -> "MacroDensity":
        """Sample ``f`` on the grid inside ``[left, right]`` plus both end points."""
        inner = _grid(left, right, h)
        inner = inner[(inner > left) & (inner < right)]
        xs = np.concatenate([[left], inner, [right]]) if right > left else np.array([left])
        ys = np.clip(np.asarray([f(x) for x in xs], dtype=np.float64), 0.0, 1.0)
        return cls(h, xs, ys)

    @property
    def left(self) -> float:
        return float(self.xs[0])

    @property
    def right(self) -> float:
        return float(self.xs[-1])

    @property
    def is_heaviside(self) -> bool:
        return self.xs.size == 1 or self.right <= self.left

    def __call__(self, r):
        r = np.asarray(r, dtype=np.float64)
        inside = np.interp(r, self.xs, self.ys)
        out = np.where(r < self.left, 1.0, np.where(r > self.right, 0.0, inside))
        return float(out) if out.ndim == 0 else out

    def _cum(self) -> np.ndarray:
        """``C[k] = integral of rho from xs[0] to xs[k]``."""
        seg = 0.5 * (self.ys[1:] + self.ys[:-1]) * np.diff(self.xs)
        return np.concatenate([[0.0], np.cumsum(seg)])

    def _integral_to(self, x: np.ndarray) -> np.ndarray:
        """Integral of the window part from ``left`` to ``x`` (clamped to the window)."""
        xs, ys = self.xs, self.ys
        x = np.clip(np.asarray(x, dtype=np.float64), self.left, self.right)
        if xs.size < 2:
            return np.zeros_like(x)
        C = self._cum()
        k = np.clip(np.searchsorted(xs, x, side="right") - 1, 0, xs.size - 2)
        dx = x - xs[k]
        w = xs[k + 1] - xs[k]
        slope = np.divide(ys[k + 1] - ys[k], w, out=np.zeros_like(w), where=w > 0)
        return C[k] + ys[k] * dx + 0.5 * slope * dx * dx

    @property
    def total_window_mass(self) -> float:
        return float(self._cum()[-1]) if self.xs.size > 1 else 0.0


def mass_right(rho: MacroDensity, r):
    """``F(r) = integral of rho over (r, infinity)``."""
    r = np.asarray(r, dtype=np.float64)
    total = rho.total_window_mass
    out = total - rho._integral_to(r) + np.maximum(rho.left - r, 0.0)
    return float(out) if out.ndim == 0 else out


def antimass_left(rho: MacroDensity, r):
    """``Fhat(r) = integral of (1 - rho) over (-infinity, r)``."""
    r = np.asarray(r, dtype=np.float64)
    rc = np.clip(r, rho.left, rho.right)
    out = (rc - rho.left) - rho._integral_to(rc) + np.maximum(r - rho.right, 0.0)
    return float(out) if out.ndim == 0 else out


def median_defect(rho: MacroDensity) -> float:
    """``F(0) - Fhat(0)``; zero when the origin is the median."""
    return float(mass_right(rho, 0.0) - antimass_left(rho, 0.0))


def _bisect(f, lo: float, hi: float, target: float, increasing: bool) -> float:
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        v = f(mid)
        if (v < target) == increasing:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def macro_quantiles(rho: MacroDensity, delta: float) -> tuple[float, float]:
    """``(l, r)`` with ``Fhat(l) = delta`` and ``F(r) = delta``."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    a, b = rho.left, rho.right
    if delta > mass_right(rho, a) + 1e-15 and a != b:
        raise QuantileError(f"mass {delta} exceeds the window mass {mass_right(rho, a)}")
    if delta > antimass_left(rho, b) + 1e-15 and a != b:
        raise QuantileError(f"antimass {delta} exceeds the window antimass {antimass_left(rho, b)}")
    # F is continuous and decreasing, Fhat continuous and increasing
    lo, hi = a - delta - 1.0, b
    r = _bisect(lambda x: mass_right(rho, x), lo, hi, delta, increasing=False)
    lo, hi = a, b + delta + 1.0
    l = _bisect(lambda x: antimass_left(rho, x), lo, hi, delta, increasing=True)
    return l, r


def gamma_macro(rho: MacroDensity, delta: float) -> MacroDensity:
    """Remove mass ``delta`` at the right edge and antimass ``delta`` at the left edge.

    Returns the step ``h`` when the right quantile is not positive.
    """
    if delta == 0:
        return rho
    if rho.is_heaviside or mass_right(rho, 0.0) <= delta:
        return MacroDensity.heaviside(rho.h)
    l, r = macro_quantiles(rho, delta)
    if r <= 0:
        return MacroDensity.heaviside(rho.h)
    xs, ys = rho.xs, rho.ys
    inner = (xs > l) & (xs < r)
    nx = np.concatenate([[l], xs[inner], [r]])
    ny = np.concatenate([[np.interp(l, xs, ys)], ys[inner], [np.interp(r, xs, ys)]])
    return MacroDensity(rho.h, nx, ny, rho.kind)


def heat_step(rho: MacroDensity, t: float, tail_tol: float = DEFAULT_TAIL_TOL) -> MacroDensity:
    """Exact Gaussian convolution ``G_t rho`` sampled on the grid.

    The step part contributes ``Phi((left - r)/sqrt t)``; the window part is
    convolved segment by segment. The output window reaches ``z sqrt t``
    beyond the input one, where ``Phi(-z) = tail_tol``.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    sigma = math.sqrt(t)
    z = _tail_z(tail_tol)
    r = _grid(rho.left - z * sigma, rho.right + z * sigma, rho.h)
    vals = ndtr((rho.left - r) / sigma) + _conv_pl(r, rho.xs, rho.ys, sigma)
    return MacroDensity(rho.h, r, np.clip(vals, 0.0, 1.0), "U")


def heaviside_heat(r, t: float):
    """``G_t h(r) = Phi(-r / sqrt t)`` for the step ``h = 1{r < 0}``."""
    return ndtr(-np.asarray(r, dtype=np.float64) / math.sqrt(t))


# ---------------------------------------------------------------------------
# interfaces
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class MacroInterface:
    """Continuous profile equal to ``|r| + c`` outside ``[xs[0], xs[-1]]``."""

    h: float
    xs: np.ndarray
    ys: np.ndarray
    c: float

    def __post_init__(self) -> None:
        if self.xs.size == 0 or self.xs.size != self.ys.size:
            raise ValueError("breakpoints and values must be nonempty and aligned")

    @classmethod
    def cone(cls, c: float = 0.0, h: float = DEFAULT_H) -> "MacroInterface":
        return cls(h, np.array([0.0]), np.array([c]), c)

    @classmethod
    def from_function(cls, f, a: float, b: float, c: float, h: float = DEFAULT_H) -> "MacroInterface":
        inner = _grid(a, b, h)
        inner = inner[(inner > a) & (inner < b)]
        pts = [a] + list(inner) + [b]
        if a < 0 < b and 0.0 not in inner:
            pts.append(0.0)
        xs = np.unique(np.asarray(pts, dtype=np.float64))
        return cls(h, xs, np.asarray([f(x) for x in xs], dtype=np.float64), c)

    def __call__(self, r):
        r = np.asarray(r, dtype=np.float64)
        inside = np.interp(r, self.xs, self.ys)
        out = np.where((r < self.xs[0]) | (r > self.xs[-1]), np.abs(r) + self.c, inside)
        return float(out) if out.ndim == 0 else out

    def lipschitz_excess(self) -> float:
        d = np.abs(np.diff(self.ys)) - np.diff(self.xs)
        return float(d.max()) if d.size else 0.0


def _union_points(*fs) -> np.ndarray:
    return np.unique(np.concatenate([f.xs for f in fs]))


def sup_distance(f: MacroInterface, g: MacroInterface) -> float:
    """Exact sup of ``|f - g|`` for piecewise-linear profiles with cone tails."""
    pts = _union_points(f, g)
    d = float(np.max(np.abs(f(pts) - g(pts))))
    return max(d, abs(f.c - g.c))


def min_difference(f: MacroInterface, g: MacroInterface) -> float:
    """Exact inf of ``f - g``; negative when ``f < g`` somewhere."""
    pts = _union_points(f, g)
    return min(float(np.min(f(pts) - g(pts))), f.c - g.c)


def density_sup_distance(a: MacroDensity, b: MacroDensity) -> float:
    """Sup distance between two densities, jumps included."""
    pts = np.unique(np.concatenate([a.xs, b.xs]))
    eps = 1e-12 * max(1.0, float(np.max(np.abs(pts))))
    probe = np.concatenate([pts, pts - eps, pts + eps])
    return float(np.max(np.abs(a(probe) - b(probe))))


def _trim_to_cone(xs: np.ndarray, ys: np.ndarray, c: float, h: float, tol: float = 1e-14) -> MacroInterface:
    above = ys - (np.abs(xs) + c) > tol
    if not np.any(above):
        return MacroInterface(h, np.array([0.0]), np.array([c]), c)
    i0 = max(int(np.argmax(above)) - 1, 0)
    i1 = min(int(above.size - 1 - np.argmax(above[::-1])) + 1, xs.size - 1)
    return MacroInterface(h, xs[i0 : i1 + 1].copy(), ys[i0 : i1 + 1].copy(), c)


def cone_max(phi: MacroInterface, c_new: float) -> MacroInterface:
    """``max{phi, |r| + c_new}`` with crossing points inserted exactly."""
    if c_new < phi.c:
        raise ValueError("the cone may only rise")
    xs, ys = phi.xs, phi.ys
    if 0.0 not in xs and xs[0] < 0 < xs[-1]:
        xs = np.sort(np.append(xs, 0.0))
        ys = phi(xs)
    cone = np.abs(xs) + c_new
    d = ys - cone
    pts = [xs]
    if xs.size > 1:
        s0, s1 = d[:-1], d[1:]
        cross = (s0 * s1 < 0)
        if np.any(cross):
            i = np.flatnonzero(cross)
            lam = s0[i] / (s0[i] - s1[i])
            pts.append(xs[i] + lam * (xs[i + 1] - xs[i]))
    allx = np.unique(np.concatenate(pts))
    vals = np.maximum(phi(allx), np.abs(allx) + c_new)
    return _trim_to_cone(allx, vals, c_new, phi.h)


def interface_heat_step(phi: MacroInterface, t: float, tail_tol: float = DEFAULT_TAIL_TOL) -> MacroInterface:
    """Exact ``G_t phi``: closed form for ``|r| + c`` plus the convolution of the compact rest."""
    if t <= 0:
        raise ValueError("t must be positive")
    sigma = math.sqrt(t)
    z = _tail_z(tail_tol)
    xs = phi.xs
    if xs[0] < 0 < xs[-1] and 0.0 not in xs:
        xs = np.sort(np.append(xs, 0.0))
    g = phi(xs) - (np.abs(xs) + phi.c)
    r = _grid(min(xs[0], 0.0) - z * sigma, max(xs[-1], 0.0) + z * sigma, phi.h)
    u = r / sigma
    base = r * (2.0 * ndtr(u) - 1.0) + 2.0 * sigma * _npdf(u)
    vals = phi.c + base + _conv_pl(r, xs, g, sigma)
    vals = np.maximum(vals, np.abs(r) + phi.c)
    return _trim_to_cone(r, vals, phi.c, phi.h, tol=tail_tol * sigma)


def density_to_interface(rho: MacroDensity, c: float = 0.0) -> MacroInterface:
    """``phi(r) = r + c + 2 F(r)``; equals ``|r| + c`` outside the window, ``phi(0) = c + 2 F(0)``."""
    xs = rho.xs
    if not (xs[0] <= 0.0 <= xs[-1]):
        xs = np.sort(np.concatenate([xs, [0.0]]))
    elif 0.0 not in xs:
        xs = np.sort(np.append(xs, 0.0))
    # refine so the quadratic pieces are resolved at grid scale
    fine = _grid(xs[0], xs[-1], rho.h)
    fine = fine[(fine > xs[0]) & (fine < xs[-1])]
    xs = np.unique(np.concatenate([xs, fine]))
    ys = xs + c + 2.0 * mass_right(rho, xs)
    return MacroInterface(rho.h, xs, ys, c)


def interface_to_density(phi: MacroInterface, lip_tol: float = 1e-9) -> MacroDensity:
    """``rho = (1 - phi') / 2`` by centred differences at the breakpoints."""
    if phi.lipschitz_excess() > lip_tol:
        raise LipschitzError(f"slope exceeds one by {phi.lipschitz_excess():.3g}")
    xs, ys = phi.xs, phi.ys
    if xs.size == 1:
        return MacroDensity(phi.h, np.array([xs[0]]), np.array([0.5]))
    ext_x = np.concatenate([[xs[0] - phi.h], xs, [xs[-1] + phi.h]])
    ext_y = phi(ext_x)
    slope = (ext_y[2:] - ext_y[:-2]) / (ext_x[2:] - ext_x[:-2])
    return MacroDensity(phi.h, xs.copy(), np.clip(0.5 * (1.0 - slope), 0.0, 1.0))


# ---------------------------------------------------------------------------
# delta evolutions
# ---------------------------------------------------------------------------


@dataclass
class DensityTrajectory:
    times: list[float]
    profiles: list[MacroDensity]
    j: float
    delta: float
    sign: str

    def at(self, t: float) -> MacroDensity:
        k = int(np.argmin(np.abs(np.asarray(self.times) - t)))
        if abs(self.times[k] - t) > 1e-9:
            raise KeyError(f"time {t} was not recorded")
        return self.profiles[k]


@dataclass
class InterfaceTrajectory:
    times: list[float]
    profiles: list[MacroInterface]
    j: float
    delta: float
    sign: str

    def at(self, t: float) -> MacroInterface:
        k = int(np.argmin(np.abs(np.asarray(self.times) - t)))
        if abs(self.times[k] - t) > 1e-9:
            raise KeyError(f"time {t} was not recorded")
        return self.profiles[k]


def _n_periods(T: float, delta: float) -> int:
    n = int(round(T / delta))
    if abs(n * delta - T) > 1e-9 * max(1.0, T):
        raise ValueError(f"T={T} is not a multiple of delta={delta}")
    return n


def _check_sign(sign: str) -> None:
    if sign not in ("-", "+"):
        raise ValueError("sign must be '-' or '+'")


def delta_evolve(
    rho0: MacroDensity,
    j: float,
    delta: float,
    T: float,
    sign: str = "-",
    extra_times: Sequence[float] = (),
    strict: bool = True,
    tail_tol: float = DEFAULT_TAIL_TOL,
) -> DensityTrajectory:
    """Heat flow for ``delta`` alternated with ``Gamma^{j delta}``.

    The ``+`` evolution starts from ``Gamma^{j delta} rho0``. With ``strict``
    a removal that finds no positive right quantile raises
    :class:`DeltaTooLarge`; otherwise the evolution continues from the step.
    """
    _check_sign(sign)
    n = _n_periods(T, delta)
    m = j * delta

    def gamma(rho: MacroDensity) -> MacroDensity:
        if m == 0:
            return rho
        if strict and (rho.is_heaviside or mass_right(rho, 0.0) <= m):
            raise DeltaTooLarge(f"no positive quantile for mass {m}: F(0)={mass_right(rho, 0.0):.6g}")
        return gamma_macro(rho, m)

    rho = gamma(rho0) if sign == "+" else rho0
    extra = sorted(float(x) for x in extra_times)
    times, profiles = [0.0], [rho]
    for k in range(n):
        t0 = k * delta
        for te in extra:
            if t0 < te < t0 + delta - 1e-12:
                times.append(te)
                profiles.append(heat_step(rho, te - t0, tail_tol))
        rho = gamma(heat_step(rho, delta, tail_tol))
        times.append((k + 1) * delta)
        profiles.append(rho)
    return DensityTrajectory(times, profiles, j, delta, sign)


def delta_interface_evolve(
    phi0: MacroInterface,
    j: float,
    delta: float,
    T: float,
    sign: str = "-",
    extra_times: Sequence[float] = (),
    cone_rate: float = 2.0,
    tail_tol: float = DEFAULT_TAIL_TOL,
) -> InterfaceTrajectory:
    """Heat flow for ``delta`` alternated with a maximum against the rising cone.

    At ``t = n delta`` the lower barrier joins ``|r| + c0 + cone_rate j n delta``
    and the upper one ``|r| + c0 + cone_rate j (n+1) delta``; the upper one
    also joins its cone at time 0.
    """
    _check_sign(sign)
    n = _n_periods(T, delta)
    c0 = phi0.c
    lead = 1 if sign == "+" else 0
    phi = cone_max(phi0, c0 + cone_rate * j * delta) if lead else phi0
    extra = sorted(float(x) for x in extra_times)
    times, profiles = [0.0], [phi]
    for k in range(n):
        t0 = k * delta
        for te in extra:
            if t0 < te < t0 + delta - 1e-12:
                times.append(te)
                profiles.append(interface_heat_step(phi, te - t0, tail_tol))
        phi = cone_max(interface_heat_step(phi, delta, tail_tol), c0 + cone_rate * j * (k + 1 + lead) * delta)
        times.append((k + 1) * delta)
        profiles.append(phi)
    return InterfaceTrajectory(times, profiles, j, delta, sign)


@dataclass
class BarrierPair:
    lower: InterfaceTrajectory
    upper: InterfaceTrajectory
    gaps: list[float]
    order_defect: float

    @property
    def times(self) -> list[float]:
        return self.lower.times

    @property
    def max_gap(self) -> float:
        return max(self.gaps)


def barrier_pair(phi0: MacroInterface, j: float, delta: float, T: float, cone_rate: float = 2.0) -> BarrierPair:
    lo = delta_interface_evolve(phi0, j, delta, T, "-", cone_rate=cone_rate)
    up = delta_interface_evolve(phi0, j, delta, T, "+", cone_rate=cone_rate)
    gaps = [sup_distance(a, b) for a, b in zip(lo.profiles, up.profiles)]
    defect = max(0.0, -min(min_difference(b, a) for a, b in zip(lo.profiles, up.profiles)))
    return BarrierPair(lo, up, gaps, defect)


@dataclass
class BarrierLimit:
    estimate: MacroInterface
    deltas: list[float]
    lowers: list[MacroInterface]
    uppers: list[MacroInterface]
    gaps: list[float]
    gap_bounds: list[float]
    nesting_defect: float
    meta: dict = field(default_factory=dict)

    @property
    def certified_gap(self) -> float:
        return self.gaps[-1]


def midpoint(a: MacroInterface, b: MacroInterface) -> MacroInterface:
    pts = _union_points(a, b)
    return MacroInterface(a.h, pts, 0.5 * (a(pts) + b(pts)), 0.5 * (a.c + b.c))


def barrier_limit(
    phi0: MacroInterface,
    j: float,
    T: float,
    delta0: float,
    n_levels: int,
    tol: float | None = None,
    cone_rate: float = 2.0,
    strict: bool = True,
) -> BarrierLimit:
    """Nested barriers at ``delta0 2^-n``; the finest midpoint estimates ``phi_T``.

    Checks that lower barriers increase and upper barriers decrease with the
    level and that each upper barrier dominates its lower one. The default
    tolerance is ``h^2``, the order of the quadrature error.
    """
    if tol is None:
        tol = phi0.h * phi0.h
    if n_levels < 2:
        raise ValueError("need at least two levels")
    deltas = [delta0 * 2.0**-n for n in range(n_levels)]
    lowers, uppers, gaps = [], [], []
    for d in deltas:
        lo = delta_interface_evolve(phi0, j, d, T, "-", cone_rate=cone_rate).profiles[-1]
        up = delta_interface_evolve(phi0, j, d, T, "+", cone_rate=cone_rate).profiles[-1]
        lowers.append(lo)
        uppers.append(up)
        gaps.append(sup_distance(lo, up))
    defect = 0.0
    for n in range(n_levels):
        defect = max(defect, -min_difference(uppers[n], lowers[n]))
        if n:
            defect = max(defect, -min_difference(lowers[n], lowers[n - 1]))
            defect = max(defect, -min_difference(uppers[n - 1], uppers[n]))
    if strict and defect > tol:
        raise BarrierOrderError(f"barrier nesting broken by {defect:.3g}")
    bounds = [cone_rate * j * d for d in deltas]
    return BarrierLimit(midpoint(lowers[-1], uppers[-1]), deltas, lowers, uppers, gaps, bounds, defect)


def stationary_profile(j: float, h: float = DEFAULT_H) -> tuple[MacroDensity, MacroInterface]:
    """``rho = 1/2 - 2 j r`` and ``phi = 2 j r^2 + 1/(8 j)`` on ``|r| <= 1/(4 j)``."""
    if j <= 0:
        raise ValueError("j must be positive")
    w = 1.0 / (4.0 * j)
    rho = MacroDensity.from_function(lambda r: 0.5 - 2.0 * j * r, -w, w, h)
    phi = MacroInterface.from_function(lambda r: 2.0 * j * r * r + 1.0 / (8.0 * j), -w, w, 0.0, h)
    return rho, phi


@dataclass
class MonotonicityReport:
    ok: bool
    worst: float
    times: list[float]
    shift: float


def j_monotonicity_check(
    phi0: MacroInterface,
    j: float,
    j_prime: float,
    delta: float,
    T: float,
    shift: float = 1.0,
    tol: float = 1e-6,
    cone_rate: float = 2.0,
) -> MonotonicityReport:
    """``phi^(j)_t - shift j t >= phi^(j')_t - shift j' t`` for the lower barriers.

    ``worst`` is the most negative value of the left side minus the right side
    over all breakpoints and tails at the multiples of ``delta``.
    """
    if j > j_prime:
        raise ValueError("need j <= j'")
    a = delta_interface_evolve(phi0, j, delta, T, "-", cone_rate=cone_rate)
    b = delta_interface_evolve(phi0, j_prime, delta, T, "-", cone_rate=cone_rate)
    worst = math.inf
    for t, fa, fb in zip(a.times, a.profiles, b.profiles):
        worst = min(worst, min_difference(fa, fb) - shift * (j - j_prime) * t)
    return MonotonicityReport(worst >= -tol, worst, a.times, shift)


def lower_cone_check(phi: MacroInterface, j: float, t: float) -> float:
    """Minimum of ``phi(r) - (|r| + j t)``; nonnegative when the bound holds."""
    return min(float(np.min(phi.ys - (np.abs(phi.xs) + j * t))), phi.c - j * t)


def integral_discrepancy(rho_a: MacroDensity, rho_b: MacroDensity, a: float, b: float) -> float:
    """``|int_a^b rho_a - int_a^b rho_b|``."""
    ia = mass_right(rho_a, a) - mass_right(rho_a, b)
    ib = mass_right(rho_b, a) - mass_right(rho_b, b)
    return abs(ia - ib)


def time_regularity_constant(traj: InterfaceTrajectory) -> float:
    """Largest ``sup_r |phi_t - phi_s| / sqrt(t - s)`` over recorded pairs."""
    best = 0.0
    for i in range(len(traj.times)):
        for k in range(i + 1, len(traj.times)):
            dt = traj.times[k] - traj.times[i]
            if dt > 0:
                best = max(best, sup_distance(traj.profiles[k], traj.profiles[i]) / math.sqrt(dt))
    return best
