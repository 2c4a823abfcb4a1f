"""Integer-lattice particle configurations and interfaces.

A particle configuration is a 0/1 sequence on Z with only finitely many
particles right of the origin and finitely many holes left of it. It is
stored as the window ``[L, R]`` between the leftmost hole and the rightmost
particle; everything left of the window is occupied and everything right of
it is empty. The pure step ``1{x < s}`` has an empty window anchored at ``s``.

An interface is a height function with unit slopes that agrees with a cone
``|x - v1| + v2`` outside a finite window. It is stored on ``[L, R]``; left of
``L`` it descends with slope -1 towards ``L`` and right of ``R`` it rises
with slope +1.

All values are immutable; every operation returns a new canonical object.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np


class ParityError(ValueError):
    """Raised when a vertex or shift would break the ``x + xi(x)`` even rule."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


# ---------------------------------------------------------------------------
# particle configurations
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ParticleConfig:
    """Finite perturbation of a step configuration.

    Use :meth:`from_bits` or :meth:`heaviside` rather than the raw
    constructor; they canonicalise the window so that ``bits[0] == 0`` and
    ``bits[-1] == 1``.
    """

    start: int
    bits: np.ndarray = field(repr=False)

    @classmethod
    def heaviside(cls, s: int = 1) -> "ParticleConfig":
        """The configuration ``1{x < s}``; the default is ``1{x <= 0}``."""
        return cls(int(s), _frozen(np.zeros(0, dtype=np.uint8)))

    @classmethod
    def from_bits(cls, start: int, bits: Iterable[int]) -> "ParticleConfig":
        """Occupations ``bits`` on ``[start, start + len(bits))``; 1 left, 0 right."""
        b = np.asarray(list(bits) if not isinstance(bits, np.ndarray) else bits, dtype=np.uint8)
        if b.size and not np.all((b == 0) | (b == 1)):
            raise ValueError("occupations must be 0 or 1")
        holes = np.flatnonzero(b == 0)
        parts = np.flatnonzero(b == 1)
        if holes.size == 0:
            return cls.heaviside(start + b.size)
        if parts.size == 0 or parts[-1] < holes[0]:
            # a clean step after trimming
            return cls.heaviside(start + int(holes[0]))
        lo, hi = int(holes[0]), int(parts[-1])
        return cls(int(start) + lo, _frozen(b[lo : hi + 1].copy()))

    @classmethod
    def from_occupied(cls, step: int, extra: Sequence[int] = (), removed: Sequence[int] = ()) -> "ParticleConfig":
        """``1{x < step}`` plus particles at ``extra`` minus particles at ``removed``."""
        sites = [step] + list(extra) + list(removed)
        lo, hi = min(sites) - 1, max(sites) + 1
        xs = np.arange(lo, hi + 1)
        b = (xs < step).astype(np.uint8)
        for x in extra:
            b[x - lo] = 1
        for x in removed:
            b[x - lo] = 0
        return cls.from_bits(lo, b)

    @property
    def is_heaviside(self) -> bool:
        return self.bits.size == 0

    @property
    def L(self) -> int:
        return self.start

    @property
    def R(self) -> int:
        return self.start + self.bits.size - 1

    def occupation(self, x: int | np.ndarray) -> np.ndarray | int:
        x = np.asarray(x)
        i = x - self.start
        inside = (i >= 0) & (i < self.bits.size)
        out = np.where(i < 0, 1, 0).astype(np.int64)
        if self.bits.size:
            out = np.where(inside, self.bits[np.clip(i, 0, self.bits.size - 1)], out)
        return int(out) if out.ndim == 0 else out

    def window(self, lo: int, hi: int) -> np.ndarray:
        """Occupations on ``[lo, hi]`` as a uint8 array."""
        return np.asarray(self.occupation(np.arange(lo, hi + 1)), dtype=np.uint8)

    def particles_in_window(self) -> int:
        return int(self.bits.sum())

    def shifted(self, k: int) -> "ParticleConfig":
        """The translate ``theta_k eta(x) = eta(x - k)``."""
        return ParticleConfig(self.start + int(k), self.bits)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ParticleConfig):
            return NotImplemented
        return self.start == other.start and np.array_equal(self.bits, other.bits)

    def __hash__(self) -> int:
        return hash((self.start, self.bits.tobytes()))

    def __repr__(self) -> str:
        return f"ParticleConfig({dumps_particles(self)!r})"


def boundaries(eta: ParticleConfig) -> tuple[int, int]:
    """Leftmost hole and rightmost particle."""
    return eta.L, eta.R


def median(eta: ParticleConfig) -> float:
    """Half-integer balancing particles to its right against holes to its left.

    Starting at ``L - 1/2`` (no holes to the left, every window particle to
    the right) each unit step right lowers the imbalance by one, so the
    median sits at ``L - 1/2 + #particles in the window``.
    """
    return eta.L - 0.5 + eta.particles_in_window()


def lyapunov_psi(eta: ParticleConfig) -> int:
    """Number of (hole, particle) pairs with the hole on the left."""
    b = eta.bits.astype(np.int64)
    holes_left = np.cumsum(1 - b) - (1 - b)
    return int(np.sum(holes_left * b))


def lyapunov_psi2(eta: ParticleConfig) -> int:
    """Number of (hole, hole, particle) triples in increasing position."""
    b = eta.bits.astype(np.int64)
    h = np.cumsum(1 - b) - (1 - b)
    return int(np.sum(b * h * (h - 1) // 2))


def hole_particle_counts(eta: ParticleConfig) -> tuple[int, int]:
    """``(N0, N1)``: holes left of ``R`` and particles right of ``L``."""
    n1 = eta.particles_in_window()
    return eta.bits.size - n1, n1


def micro_quantiles(eta: ParticleConfig, a: int, b: int) -> tuple[int, int]:
    """Site of the ``a``-th leftmost hole and of the ``b``-th rightmost particle."""
    if a < 1 or b < 1:
        raise ValueError("quantile ranks start at 1")
    bits = eta.bits
    holes = np.flatnonzero(bits == 0) + eta.start
    parts = np.flatnonzero(bits == 1) + eta.start
    la = int(holes[a - 1]) if a <= holes.size else eta.R + (a - holes.size)
    rb = int(parts[parts.size - b]) if b <= parts.size else eta.L - (b - parts.size)
    return la, rb


def gamma_micro(eta: ParticleConfig, a: int, b: int) -> ParticleConfig:
    """Erase the ``b`` rightmost particles and fill the ``a`` leftmost holes."""
    if a == 0 and b == 0:
        return eta
    la = rb = None
    if a:
        la, _ = micro_quantiles(eta, a, 1)
    if b:
        _, rb = micro_quantiles(eta, 1, b)
    lo = min(x for x in (eta.L, la, rb) if x is not None) - 1
    hi = max(x for x in (eta.R, la, rb) if x is not None) + 1
    xs = np.arange(lo, hi + 1)
    w0 = eta.window(lo, hi)
    w = w0.copy()
    # both erasures refer to the original configuration, so overlapping ranges do not interfere
    if rb is not None:
        w[(xs >= rb) & (w0 == 1)] = 0
    if la is not None:
        w[(xs <= la) & (w0 == 0)] = 1
    return ParticleConfig.from_bits(lo, w)


def apply_swap(eta: ParticleConfig, x: int) -> ParticleConfig:
    """Exchange the occupations of ``x`` and ``x + 1``."""
    lo, hi = min(eta.L, x) - 1, max(eta.R, x + 1) + 1
    w = eta.window(lo, hi)
    i = x - lo
    w[i], w[i + 1] = w[i + 1], w[i]
    return ParticleConfig.from_bits(lo, w)


def apply_birth(eta: ParticleConfig) -> ParticleConfig:
    """Fill the leftmost hole."""
    return gamma_micro(eta, 1, 0)


def apply_death(eta: ParticleConfig) -> ParticleConfig:
    """Remove the rightmost particle."""
    return gamma_micro(eta, 0, 1)


# ---------------------------------------------------------------------------
# vertices and interfaces
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Vertex:
    v1: int
    v2: int

    def __post_init__(self) -> None:
        if self.v2 < 0:
            raise ValueError(f"vertex height must be nonnegative, got {self.v2}")
        if (self.v1 + self.v2) % 2:
            raise ParityError(f"v1 + v2 must be even, got ({self.v1}, {self.v2})")

    def leq(self, other: "Vertex") -> bool:
        """Cone order: ``V_self <= V_other`` everywhere."""
        return other.v2 - self.v2 >= abs(other.v1 - self.v1)

    def __add__(self, d: tuple[int, int]) -> "Vertex":
        return Vertex(self.v1 + d[0], self.v2 + d[1])


@dataclass(frozen=True)
class VertexPath:
    """Nondecreasing piecewise-constant vertex path.

    ``initial`` holds on ``[0, times[0])``; ``vertices[k]`` from ``times[k]`` on.
    """

    initial: Vertex
    times: tuple[float, ...] = ()
    vertices: tuple[Vertex, ...] = ()

    def __post_init__(self) -> None:
        if len(self.times) != len(self.vertices):
            raise ValueError("times and vertices differ in length")
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise ValueError("event times must increase strictly")
        if self.times and self.times[0] < 0:
            raise ValueError("event times must be nonnegative")
        prev = self.initial
        for v in self.vertices:
            if not prev.leq(v):
                raise ValueError(f"path decreases: {prev} -> {v}")
            prev = v

    def at(self, t: float) -> Vertex:
        k = int(np.searchsorted(np.asarray(self.times), t, side="right"))
        return self.initial if k == 0 else self.vertices[k - 1]

    @property
    def n_events(self) -> int:
        return len(self.times)


@dataclass(frozen=True, eq=False)
class Interface:
    """Unit-slope height function stored on its non-conic window ``[L, R]``."""

    start: int
    heights: np.ndarray = field(repr=False)

    @classmethod
    def cone(cls, v1: int, v2: int) -> "Interface":
        if (v1 + v2) % 2:
            raise ParityError(f"cone vertex ({v1}, {v2}) has odd parity")
        return cls(int(v1), _frozen(np.array([v2], dtype=np.int64)))

    @classmethod
    def from_heights(cls, start: int, heights: Iterable[int], check: bool = True) -> "Interface":
        """Interface equal to ``heights`` on ``[start, ...]`` and conic outside."""
        h = np.array(list(heights) if not isinstance(heights, np.ndarray) else heights, dtype=np.int64)
        if h.size == 0:
            raise ValueError("an interface needs at least one stored height")
        if check:
            d = np.diff(h)
            if d.size and not np.all(np.abs(d) == 1):
                raise ValueError("consecutive heights must differ by exactly one")
            if (start + h[0]) % 2:
                raise ParityError("x + xi(x) must be even")
        d = np.diff(h)
        # drop leading descents and trailing ascents: they belong to the cone tails
        lo = 0
        while lo < d.size and d[lo] == -1:
            lo += 1
        hi = d.size
        while hi > lo and d[hi - 1] == 1:
            hi -= 1
        return cls(int(start) + lo, _frozen(h[lo : hi + 1].copy()))

    @property
    def L(self) -> int:
        return self.start

    @property
    def R(self) -> int:
        return self.start + self.heights.size - 1

    def __call__(self, x: int | np.ndarray) -> np.ndarray | int:
        x = np.asarray(x, dtype=np.int64)
        i = x - self.start
        n = self.heights.size
        left = self.heights[0] + (self.start - x)
        right = self.heights[-1] + (x - self.R)
        out = np.where(i < 0, left, np.where(i >= n, right, self.heights[np.clip(i, 0, n - 1)]))
        return int(out) if out.ndim == 0 else out

    def on(self, lo: int, hi: int) -> np.ndarray:
        return self(np.arange(lo, hi + 1))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Interface):
            return NotImplemented
        return self.start == other.start and np.array_equal(self.heights, other.heights)

    def __hash__(self) -> int:
        return hash((self.start, self.heights.tobytes()))

    def __le__(self, other: "Interface") -> bool:
        lo = min(self.L, other.L) - 1
        hi = max(self.R, other.R) + 1
        if not np.all(self.on(lo, hi) <= other.on(lo, hi)):
            return False
        # beyond the joint window both are unit-slope lines
        return True

    def __repr__(self) -> str:
        return f"Interface({dumps_interface(self)!r})"


def vertex_coords(xi: Interface) -> tuple[int, int]:
    """Vertex of the cone containing ``xi``; may have negative height."""
    hl, hr = int(xi.heights[0]), int(xi.heights[-1])
    L, R = xi.L, xi.R
    return (hl - hr + L + R) // 2, (hl + hr + L - R) // 2


def vertex(xi: Interface) -> Vertex:
    return Vertex(*vertex_coords(xi))


def to_particles(xi: Interface) -> ParticleConfig:
    """Map D: a particle sits at ``x`` wherever the interface steps down."""
    d = np.diff(xi.heights)
    return ParticleConfig.from_bits(xi.L, ((1 - d) // 2).astype(np.uint8))


def to_interface(eta: ParticleConfig, v2: int) -> Interface:
    """Inverse of D with the cone height fixed to ``v2``."""
    v1 = int(median(eta) + 0.5)
    if (v1 + v2) % 2:
        raise ParityError(f"v2={v2} incompatible with median {median(eta)}")
    if v2 < 0:
        raise ValueError("v2 must be nonnegative")
    L = eta.L
    h0 = v1 + v2 - L
    steps = 1 - 2 * eta.bits.astype(np.int64)
    return Interface.from_heights(L, np.concatenate([[h0], h0 + np.cumsum(steps)]), check=False)


def cone_join(xi: Interface, v: Vertex | tuple[int, int]) -> Interface:
    """Pointwise maximum of ``xi`` and the cone with vertex ``v``."""
    v1, v2 = (v.v1, v.v2) if isinstance(v, Vertex) else v
    if (v1 + v2) % 2:
        raise ParityError(f"cone vertex ({v1}, {v2}) has odd parity")
    lo, hi = min(xi.L, v1), max(xi.R, v1)
    xs = np.arange(lo, hi + 1)
    h = np.maximum(xi(xs), np.abs(xs - v1) + v2)
    return Interface.from_heights(lo, h, check=False)


def translate(xi: Interface, v: tuple[int, int]) -> Interface:
    """``theta_v xi(x) = xi(x - v1) - v2``."""
    a, b = int(v[0]), int(v[1])
    if (a + b) % 2:
        raise ParityError(f"shift ({a}, {b}) breaks parity")
    return Interface(xi.start + a, _frozen(xi.heights - b))


def lattice_sum_right(xi: Interface, x0: int = 0) -> int:
    """Number of particles of ``D(xi)`` at sites ``>= x0``."""
    eta = to_particles(xi)
    if eta.is_heaviside:
        return max(0, eta.L - x0)
    ones_left = max(0, eta.L - x0)
    lo = max(x0, eta.L)
    return ones_left + int(eta.bits[lo - eta.L :].sum()) if lo <= eta.R else ones_left


# ---------------------------------------------------------------------------
# text serialisation
# ---------------------------------------------------------------------------


def dumps_particles(eta: ParticleConfig) -> str:
    """``"<start>:<bits>"``; a step ``1{x < s}`` is ``"<s>:"``."""
    return f"{eta.start}:{''.join(map(str, eta.bits.tolist()))}"


def loads_particles(text: str) -> ParticleConfig:
    start, _, bits = text.strip().partition(":")
    return ParticleConfig.from_bits(int(start), [int(c) for c in bits])


def dumps_interface(xi: Interface) -> str:
    """``"<L>:<xi(L)>:<increments>"`` with increments written as ``+``/``-``."""
    inc = "".join("+" if d > 0 else "-" for d in np.diff(xi.heights))
    return f"{xi.start}:{int(xi.heights[0])}:{inc}"


def loads_interface(text: str) -> Interface:
    parts = text.strip().split(":")
    if len(parts) != 3:
        raise ValueError(f"malformed interface string {text!r}")
    start, h0 = int(parts[0]), int(parts[1])
    steps = [1 if c == "+" else -1 for c in parts[2] if c in "+-"]
    if len(steps) != len(parts[2]):
        raise ValueError(f"bad increment characters in {parts[2]!r}")
    return Interface.from_heights(start, np.concatenate([[h0], h0 + np.cumsum(steps, dtype=np.int64)]))
