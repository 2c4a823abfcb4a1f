"""Deterministic harness: discrete averaging against a rising cone.

``K_n = max{Theta K_{n-1}, |x| + c_0 + 2 J n}`` with
``(Theta K)(x) = (K(x-1) + K(x+1)) / 2``. States store a finite window of
real heights and equal ``|x| + c`` outside it; the window always contains the
origin so the tails stay linear under averaging.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace

import numpy as np

from .macro import MacroInterface

TRIM_TOL = 1e-14


class SandwichViolation(AssertionError):
    pass


@dataclass(frozen=True, eq=False)
class HarnessState:
    """Heights ``K(start..start+len-1)``; ``K(x) = |x| + c`` elsewhere."""

    start: int
    K: np.ndarray
    c: float = 0.0
    n: int = 0
    J: float = 0.0

    def __post_init__(self) -> None:
        if self.K.ndim != 1 or self.K.size == 0:
            raise ValueError("heights must be a nonempty 1-d array")
        if not (self.start <= 0 <= self.start + self.K.size - 1):
            raise ValueError("window must contain the origin")
        if not np.all(np.isfinite(self.K)):
            raise ValueError("heights must be finite")

    @classmethod
    def cone(cls, c: float = 0.0, J: float = 0.0) -> "HarnessState":
        return cls(0, np.array([c], dtype=np.float64), c, 0, J)

    @classmethod
    def from_function(cls, f, lo: int, hi: int, c: float = 0.0, J: float = 0.0) -> "HarnessState":
        lo, hi = min(lo, 0), max(hi, 0)
        x = np.arange(lo, hi + 1)
        K = np.asarray([f(int(v)) for v in x], dtype=np.float64)
        return cls(lo, K, c, 0, J)

    @property
    def L(self) -> int:
        return self.start

    @property
    def R(self) -> int:
        return self.start + self.K.size - 1

    @property
    def sites(self) -> np.ndarray:
        return np.arange(self.L, self.R + 1)

    def __call__(self, x):
        scalar = np.ndim(x) == 0
        x = np.atleast_1d(np.asarray(x, dtype=np.int64))
        idx = x - self.start
        inside = (idx >= 0) & (idx < self.K.size)
        out = np.abs(x).astype(np.float64) + self.c
        out[inside] = self.K[idx[inside]]
        return float(out[0]) if scalar else out

    def on(self, lo: int, hi: int) -> np.ndarray:
        return self(np.arange(lo, hi + 1))

    def cone_defect(self) -> float:
        """Most negative value of ``K - (|x| + c)``; zero for a valid state."""
        return min(0.0, float(np.min(self.K - (np.abs(self.sites) + self.c))))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(f"# J={self.J!r} n={self.n} c={self.c!r}\n")
            w = csv.writer(fh)
            w.writerow(["x", "K"])
            for x, k in zip(self.sites, self.K):
                w.writerow([int(x), repr(float(k))])


def _trim(start: int, K: np.ndarray, c: float, tol: float = TRIM_TOL) -> tuple[int, np.ndarray]:
    x = np.arange(start, start + K.size)
    off = np.abs(K - (np.abs(x) + c)) >= tol
    off |= x == 0
    i0 = int(np.argmax(off))
    i1 = int(off.size - 1 - np.argmax(off[::-1]))
    return start + i0, K[i0 : i1 + 1]


def theta_step(K: HarnessState) -> HarnessState:
    """Average the two neighbours; the window grows by one site on each side."""
    lo, hi = K.L - 2, K.R + 2
    v = K.on(lo, hi)
    new = 0.5 * (v[:-2] + v[2:])
    return replace(K, start=lo + 1, K=new)


def _join_cone(K: HarnessState, c_new: float) -> HarnessState:
    cone = np.abs(K.sites) + c_new
    start, vals = _trim(K.start, np.maximum(K.K, cone), c_new)
    return replace(K, start=start, K=vals, c=c_new)


def harness_evolve(K0: HarnessState, J: float, n_steps: int, keep_every: int = 0):
    """``n_steps`` of averaging followed by a maximum with ``|x| + c_0 + 2 J n``.

    Returns the final state, or ``(final, history)`` when ``keep_every`` is
    positive, with the history holding every ``keep_every``-th state.
    """
    if J < 0 or n_steps < 0:
        raise ValueError("J and n_steps must be nonnegative")
    K = replace(K0, J=J)
    c0, n0 = K0.c, K0.n
    hist = [K] if keep_every else None
    for k in range(1, n_steps + 1):
        K = _join_cone(theta_step(K), c0 + 2.0 * J * k)
        K = replace(K, n=n0 + k)
        if keep_every and k % keep_every == 0:
            hist.append(K)
    return (K, hist) if keep_every else K


def traveling_wave(J: float) -> HarnessState:
    """``1/(8J) + 2 J x^2`` for ``|x| <= 1/(4J)`` and ``|x|`` beyond."""
    if J <= 0:
        raise ValueError("J must be positive")
    w = 1.0 / (4.0 * J)
    W = int(math.floor(w)) + 1
    x = np.arange(-W, W + 1)
    xf = x.astype(np.float64)
    K = np.where(np.abs(xf) <= w, 1.0 / (8.0 * J) + 2.0 * J * xf * xf, np.abs(xf))
    return HarnessState(-W, K, 0.0, 0, J)


def sup_distance(a: HarnessState, b: HarnessState) -> float:
    lo, hi = min(a.L, b.L), max(a.R, b.R)
    return max(float(np.max(np.abs(a.on(lo, hi) - b.on(lo, hi)))), abs(a.c - b.c))


def min_difference(a: HarnessState, b: HarnessState) -> float:
    """Infimum of ``a - b`` over the lattice."""
    lo, hi = min(a.L, b.L), max(a.R, b.R)
    return min(float(np.min(a.on(lo, hi) - b.on(lo, hi))), a.c - b.c)


def shifted(K: HarnessState, s: float) -> HarnessState:
    return replace(K, K=K.K + s, c=K.c + s)


def traveling_wave_deviation(J: float, n_steps: int) -> float:
    """``max_n sup_x |K_n - (Kbar + 2 J n)|`` along the evolution from the wave."""
    Kbar = traveling_wave(J)
    K = Kbar
    worst = 0.0
    for n in range(1, n_steps + 1):
        K = harness_evolve(K, J, 1)
        worst = max(worst, sup_distance(K, shifted(Kbar, 2.0 * J * n)))
    return worst


def _check_sign(sign: str) -> None:
    if sign not in ("-", "+"):
        raise ValueError("sign must be '-' or '+'")


def _delta_step(K: HarnessState, J: float, delta_steps: int, ell: int, c0: float, sign: str) -> HarnessState:
    K = theta_step(K)
    if ell % delta_steps == 0:
        lead = delta_steps if sign == "+" else 0
        K = _join_cone(K, c0 + 2.0 * J * (ell + lead))
    return replace(K, n=K.n + 1)


def _delta_init(K0: HarnessState, J: float, delta_steps: int, sign: str) -> HarnessState:
    K = replace(K0, J=J)
    if sign == "+":
        K = _join_cone(K, K0.c + 2.0 * J * delta_steps)
    return K


def delta_harness_evolve(K0: HarnessState, J: float, delta_steps: int, n_steps: int, sign: str = "-") -> HarnessState:
    """Averaging every step, the cone maximum only when the step index is a multiple of ``delta_steps``.

    The lower variant joins ``|x| + c_0 + 2 J ell`` at ``ell = k delta_steps``;
    the upper one first joins ``|x| + c_0 + 2 J delta_steps`` and then
    ``|x| + c_0 + 2 J (ell + delta_steps)``.
    """
    _check_sign(sign)
    if delta_steps < 1:
        raise ValueError("delta_steps must be at least 1")
    K = _delta_init(K0, J, delta_steps, sign)
    for ell in range(1, n_steps + 1):
        K = _delta_step(K, J, delta_steps, ell, K0.c, sign)
    return K


@dataclass
class HarnessSandwich:
    lower: HarnessState
    exact: HarnessState
    upper: HarnessState
    gaps: np.ndarray
    order_defect: float

    @property
    def max_gap(self) -> float:
        return float(self.gaps.max())


def delta_harness_sandwich(
    K0: HarnessState,
    J: float,
    delta_steps: int,
    n_steps: int,
    tol: float = 1e-12,
    strict: bool = True,
) -> HarnessSandwich:
    """Evolve the lower, exact and upper harness together and check ``K^- <= K <= K^+`` at each step."""
    if delta_steps < 1:
        raise ValueError("delta_steps must be at least 1")
    lo = _delta_init(K0, J, delta_steps, "-")
    up = _delta_init(K0, J, delta_steps, "+")
    ex = replace(K0, J=J)
    gaps = np.empty(n_steps + 1)
    defect = 0.0
    for ell in range(n_steps + 1):
        if ell:
            lo = _delta_step(lo, J, delta_steps, ell, K0.c, "-")
            up = _delta_step(up, J, delta_steps, ell, K0.c, "+")
            ex = replace(_join_cone(theta_step(ex), K0.c + 2.0 * J * ell), n=ex.n + 1)
        defect = max(defect, -min_difference(ex, lo), -min_difference(up, ex))
        gaps[ell] = sup_distance(up, lo)
        if strict and defect > tol:
            raise SandwichViolation(f"harness sandwich broken by {defect:.3g} at step {ell}")
    return HarnessSandwich(lo, ex, up, gaps, defect)


def rescaled_harness(
    phi0: MacroInterface,
    j: float,
    eps: float,
    t: float,
    max_steps: int = 100_000_000,
) -> MacroInterface:
    """Start from ``K_0(x) = phi0(eps x) / eps``, run ``[t / eps^2]`` steps at ``J = eps j``, rescale back.

    The result is the linear interpolation of ``eps K(x)`` at ``r = eps x``.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    n = int(math.floor(t / (eps * eps) + 1e-9))
    if n > max_steps:
        raise OverflowError(f"{n} steps exceed the limit {max_steps}")
    lo = int(math.floor(phi0.xs[0] / eps)) - 1
    hi = int(math.ceil(phi0.xs[-1] / eps)) + 1
    x = np.arange(min(lo, 0), max(hi, 0) + 1)
    K0 = HarnessState(int(x[0]), phi0(eps * x.astype(np.float64)) / eps, phi0.c / eps, 0, eps * j)
    K = harness_evolve(K0, eps * j, n)
    xs = eps * K.sites.astype(np.float64)
    return MacroInterface(eps, xs, eps * K.K, eps * K.c)
