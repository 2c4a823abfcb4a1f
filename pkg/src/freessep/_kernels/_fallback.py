"""Pure-Python event loops; the compiled module implements the same arithmetic.

Both backends consume the counter-based streams of :mod:`freessep._rng` in
the same order, so a run is bit-identical whichever backend executes it.
"""

from __future__ import annotations

import math

import numpy as np

from .._rng import ROLE_ARROW, ROLE_PARTICLE, uniform

BACKEND = "python"

_INF = float("inf")


class EventCapExceeded(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# particle system
# ---------------------------------------------------------------------------


def particle_run(
    start: int,
    bits: np.ndarray,
    J: float,
    T: float,
    seed: int,
    replica: int = 0,
    centered: bool = False,
    check_median: bool = False,
    log_events: bool = False,
    avg_start: float = 0.0,
    batch_len: float = 0.0,
    max_events: int = 100_000_000,
) -> dict:
    """Gillespie simulation of exclusion with birth at L and death at R.

    Bonds ``x`` in ``[L-1, R]`` ring at rate 1/2 each, the death and birth
    clocks at rate ``J`` each. Draw ``2n`` gives the waiting time of event
    ``n`` and draw ``2n+1`` selects it.
    """
    bits = [int(b) for b in bits]
    n0 = len(bits)
    pad = 64 + n0
    cap = n0 + 2 * pad
    buf = [1] * pad + bits + [0] * (cap - pad - n0)
    off = start - pad  # site x lives at buf[x - off]
    L = start
    R = start + n0 - 1
    m2 = 2 * L + 2 * sum(bits) - 1  # twice the median
    A = B = 0
    t = 0.0
    ctr = 0
    n_events = 0
    med_viol = 0
    nb = 0
    if batch_len > 0.0 and T > avg_start:
        nb = max(1, int(math.ceil((T - avg_start) / batch_len)))
    batches = [0.0] * nb
    log_t: list[float] = []
    log_k: list[int] = []
    log_x: list[int] = []
    log_L: list[int] = []
    log_R: list[int] = []
    log_A: list[int] = []
    log_B: list[int] = []
    log_m: list[int] = []
    half = 0.5
    while True:
        nbonds = R - L + 2
        rate = half * nbonds + 2.0 * J
        u1 = uniform(seed, ROLE_PARTICLE, replica, 0, ctr)
        u2 = uniform(seed, ROLE_PARTICLE, replica, 0, ctr + 1)
        ctr += 2
        dt = -math.log(u1) / rate
        t_next = t + dt
        if nb:
            # accumulate width over [t, min(t_next, T)] in batch bins
            a = t if t > avg_start else avg_start
            e = t_next if t_next < T else T
            w = float(R - L + 1)
            while a < e:
                bi = int((a - avg_start) / batch_len)
                if bi >= nb:
                    bi = nb - 1
                be = avg_start + (bi + 1) * batch_len
                if bi == nb - 1 or be > e:
                    be = e
                batches[bi] += w * (be - a)
                a = be
        if t_next > T:
            break
        t = t_next
        n_events += 1
        if n_events > max_events:
            raise EventCapExceeded(
                f"event cap {max_events} exceeded at t={t:.6g} (width {R - L + 1}, J={J})"
            )
        s = u2 * rate
        kind = 0
        site = 0
        if s < half * nbonds:
            kind = 0
            k = int(s / half)
            if k >= nbonds:
                k = nbonds - 1
            x = L - 1 + k
            site = x
            i = x - off
            a0 = buf[i]
            a1 = buf[i + 1]
            if a0 != a1:
                buf[i] = a1
                buf[i + 1] = a0
                if buf[L - 1 - off] == 0:
                    L -= 1
                else:
                    while buf[L - off] == 1:
                        L += 1
                if buf[R + 1 - off] == 1:
                    R += 1
                else:
                    while buf[R - off] == 0:
                        R -= 1
        elif s < half * nbonds + J:
            kind = 2  # death at R
            site = R
            buf[R - off] = 0
            r_old = R
            while buf[R - off] == 0:
                R -= 1
            if r_old < L:
                L = r_old
            B += 1
            m2 -= 2
        else:
            kind = 1  # birth at L
            site = L
            buf[L - off] = 1
            l_old = L
            while buf[L - off] == 1:
                L += 1
            if l_old > R:
                R = l_old
            A += 1
            m2 += 2
        if centered and kind:
            # translate by -1 after a birth, +1 after a death
            k = -1 if kind == 1 else 1
            off += k
            L += k
            R += k
            m2 += 2 * k
        if check_median:
            n1 = 0
            for y in range(L, R + 1):
                n1 += buf[y - off]
            if 2 * L + 2 * n1 - 1 != m2:
                med_viol += 1
        if log_events:
            log_t.append(t)
            log_k.append(kind)
            log_x.append(site)
            log_L.append(L)
            log_R.append(R)
            log_A.append(A)
            log_B.append(B)
            log_m.append(m2)
        # keep two spare sites on each side of the window
        if L - 2 - off < 0 or R + 2 - off >= cap:
            w_bits = buf[L - off : R + 1 - off]
            pad = 64 + len(w_bits)
            cap = len(w_bits) + 2 * pad
            buf = [1] * pad + w_bits + [0] * (cap - pad - len(w_bits))
            off = L - pad
    out_bits = np.array(buf[L - off : R + 1 - off], dtype=np.uint8)
    log = None
    if log_events:
        log = {
            "time": np.array(log_t, dtype=np.float64),
            "kind": np.array(log_k, dtype=np.int64),
            "site": np.array(log_x, dtype=np.int64),
            "L": np.array(log_L, dtype=np.int64),
            "R": np.array(log_R, dtype=np.int64),
            "A": np.array(log_A, dtype=np.int64),
            "B": np.array(log_B, dtype=np.int64),
            "median2": np.array(log_m, dtype=np.int64),
        }
    return {
        "start": L,
        "bits": out_bits,
        "A": A,
        "B": B,
        "median2": m2,
        "n_events": n_events,
        "median_violations": med_viol,
        "batches": np.array(batches, dtype=np.float64),
        "log": log,
    }


# ---------------------------------------------------------------------------
# interfaces under the Harris construction
# ---------------------------------------------------------------------------


def arrow_count(seed: int, x: int, cell: int, d: int) -> int:
    """Poisson(1/2) number of arrows of direction ``d`` at ``x`` in ``cell``."""
    u = uniform(seed, ROLE_ARROW, x, 2 * cell + d, 0)
    p = 0.6065306597126334  # exp(-1/2)
    cdf = p
    k = 0
    while u > cdf and k < 64:
        k += 1
        p *= 0.5 / k
        cdf += p
    return k


def cell_arrows(seed: int, lo: int, hi: int, cell: int, after: float) -> list[tuple[float, int, int]]:
    """Arrows ``(time, site, dir)`` at sites ``[lo, hi]`` in ``[cell, cell+1)`` after ``after``."""
    out = []
    for x in range(lo, hi + 1):
        for d in (0, 1):
            n = arrow_count(seed, x, cell, d)
            for k in range(1, n + 1):
                tt = cell + uniform(seed, ROLE_ARROW, x, 2 * cell + d, k)
                if tt > after:
                    out.append((tt, x, d))
    return out


class _Member:
    __slots__ = ("buf", "poff", "hoff", "L", "R", "v1", "v2")

    def __init__(self, start: int, heights) -> None:
        h = [int(v) for v in heights]
        n = len(h)
        pad = 32 + n
        self.buf = [h[0] + (pad - i) for i in range(pad)] + h + [h[-1] + (i + 1) for i in range(pad)]
        self.poff = start - pad  # site x lives at buf[x - poff]
        self.hoff = 0  # true height = buf value + hoff
        self.L = start
        self.R = start + n - 1
        self.v1, self.v2 = self.vertex()

    def h(self, x: int) -> int:
        return self.buf[x - self.poff] + self.hoff

    def vertex(self) -> tuple[int, int]:
        hl = self.h(self.L)
        hr = self.h(self.R)
        return (hl - hr + self.L + self.R) // 2, (hl + hr + self.L - self.R) // 2

    def ensure(self, lo: int, hi: int) -> None:
        """Make sites ``[lo - 2, hi + 2]`` addressable."""
        b = self.buf
        if lo - 2 - self.poff >= 0 and hi + 2 - self.poff < len(b):
            return
        a, z = self.L, self.R
        core = b[a - self.poff : z + 1 - self.poff]
        lo = min(lo, a)
        hi = max(hi, z)
        pad_l = (a - lo) + 32 + len(core)
        pad_r = (hi - z) + 32 + len(core)
        self.buf = [core[0] + (pad_l - i) for i in range(pad_l)] + core + [core[-1] + (i + 1) for i in range(pad_r)]
        self.poff = a - pad_l

    def rescan(self, lo: int, hi: int) -> None:
        """Recompute ``L`` and ``R`` knowing the non-conic part lies in ``[lo, hi]``."""
        b, p = self.buf, self.poff
        x = lo - 1
        while b[x + 1 - p] - b[x - p] == -1:
            x += 1
        self.L = x
        x = hi + 1
        while b[x - p] - b[x - 1 - p] == 1:
            x -= 1
        self.R = x

    def after_flip(self) -> None:
        b, p = self.buf, self.poff
        L = self.L
        if b[L - p] - b[L - 1 - p] == 1:
            L -= 1
        else:
            while b[L + 1 - p] - b[L - p] == -1:
                L += 1
        self.L = L
        R = self.R
        if b[R + 1 - p] - b[R - p] == -1:
            R += 1
        else:
            while b[R - p] - b[R - 1 - p] == 1:
                R -= 1
        self.R = R

    def join(self, a: int, c: int) -> None:
        lo = min(self.L, a)
        hi = max(self.R, a)
        self.ensure(lo, hi)
        b, p, ho = self.buf, self.poff, self.hoff
        # the whole buffer, so the stored tails stay exact
        for q in range(len(b)):
            v = abs(q + p - a) + c - ho
            if b[q] < v:
                b[q] = v
        self.rescan(lo, hi)
        self.v1, self.v2 = self.vertex()

    def snapshot(self) -> tuple[int, np.ndarray]:
        p = self.poff
        return self.L, np.array(self.buf[self.L - p : self.R + 1 - p], dtype=np.int64) + self.hoff


def _pair_ok(mi: _Member, mj: _Member) -> bool:
    lo = min(mi.L, mj.L) - 1
    hi = max(mi.R, mj.R) + 1
    mi.ensure(lo, hi)
    mj.ensure(lo, hi)
    for x in range(lo, hi + 1):
        if mi.h(x) > mj.h(x):
            return False
    return True


def interface_run(
    starts,
    heights,
    seed: int,
    s: float,
    t: float,
    ev_time: np.ndarray,
    ev_member: np.ndarray,
    ev_kind: np.ndarray,
    ev_a: np.ndarray,
    ev_b: np.ndarray,
    pairs: np.ndarray,
    sample_times: np.ndarray,
    log_events: bool = False,
    check_vertex: bool = False,
    max_events: int = 100_000_000,
    margin: int = 4,
) -> dict:
    """Evolve coupled interfaces on one arrow field over ``(s, t]``.

    Boundary events ``(time, member, kind, a, b)`` are applied before arrows
    with an equal or later time. Kind 0 joins with the cone ``V_(a,b)``;
    kind 1 translates by ``(a, b)`` and then joins with ``V_(0,0)``.
    ``pairs`` lists ``(i, j)`` with member ``i`` required below member ``j``.
    """
    members = [_Member(st, h) for st, h in zip(starts, heights)]
    nm = len(members)
    pairs = [(int(i), int(j)) for i, j in np.asarray(pairs, dtype=np.int64).reshape(-1, 2)]
    ev_time = np.asarray(ev_time, dtype=np.float64)
    n_ev = ev_time.size
    ei = 0
    sample_times = np.asarray(sample_times, dtype=np.float64)
    n_samp = sample_times.size
    si = 0
    samples = []
    violations = 0
    first_violation = _INF
    vertex_viol = 0
    n_flips = 0
    n_arrows = 0
    lt: list[float] = []
    lm: list[int] = []
    lk: list[int] = []
    la: list[int] = []
    lb: list[int] = []

    def take_samples(upto: float, inclusive: bool) -> None:
        nonlocal si
        while si < n_samp and (sample_times[si] < upto or (inclusive and sample_times[si] <= upto)):
            samples.append([m.snapshot() for m in members])
            si += 1

    def check_all(now: float) -> None:
        nonlocal violations, first_violation
        for i, j in pairs:
            if not _pair_ok(members[i], members[j]):
                violations += 1
                if now < first_violation:
                    first_violation = now

    def boundary(k: int) -> None:
        m = members[int(ev_member[k])]
        kind = int(ev_kind[k])
        a = int(ev_a[k])
        b = int(ev_b[k])
        if kind == 0:
            m.join(a, b)
        else:
            m.poff += a
            m.hoff -= b
            m.L += a
            m.R += a
            m.join(0, 0)
        if log_events:
            lt.append(float(ev_time[k]))
            lm.append(int(ev_member[k]))
            lk.append(2 + kind)
            la.append(a)
            lb.append(b)

    take_samples(s, False)
    check_all(s)
    cell = int(math.floor(s))
    while cell < t:
        cend = cell + 1.0
        lo = min(m.L for m in members) - 1 - margin
        hi = max(m.R for m in members) + 1 + margin
        arrows = cell_arrows(seed, lo, hi, cell, s)
        arrows.sort()
        p = 0
        while True:
            ta = arrows[p][0] if p < len(arrows) else _INF
            if ta > t:
                ta = _INF
            tb = float(ev_time[ei]) if ei < n_ev else _INF
            if tb >= cend or tb > t:
                tb = _INF
            if ta == _INF and tb == _INF:
                break
            if tb <= ta:
                take_samples(tb, False)
                boundary(ei)
                now = tb
                ei += 1
                check_all(now)
            else:
                take_samples(ta, False)
                now, x, d = arrows[p]
                p += 1
                n_arrows += 1
                flipped = False
                for mi, m in enumerate(members):
                    if x < m.L or x > m.R:
                        continue
                    q = x - m.poff
                    b = m.buf
                    if b[q - 1] != b[q + 1]:
                        continue
                    nv = b[q - 1] + 1 if d == 0 else b[q - 1] - 1
                    if nv == b[q]:
                        continue
                    b[q] = nv
                    n_flips += 1
                    if n_flips > max_events:
                        raise EventCapExceeded(f"flip cap {max_events} exceeded at t={now:.6g}")
                    m.after_flip()
                    m.ensure(m.L, m.R)
                    if check_vertex and m.vertex() != (m.v1, m.v2):
                        vertex_viol += 1
                    if log_events:
                        lt.append(now)
                        lm.append(mi)
                        lk.append(d)
                        la.append(x)
                        lb.append(m.h(x))
                    flipped = True
                if flipped:
                    for i, j in pairs:
                        members[i].ensure(x, x)
                        members[j].ensure(x, x)
                        if members[i].h(x) > members[j].h(x):
                            violations += 1
                            if now < first_violation:
                                first_violation = now
            # widen the arrow field if some window escaped it
            nlo = min(m.L for m in members) - 1
            nhi = max(m.R for m in members) + 1
            if nlo < lo or nhi > hi:
                extra = []
                if nlo < lo:
                    extra += cell_arrows(seed, nlo - margin, lo - 1, cell, now)
                    lo = nlo - margin
                if nhi > hi:
                    extra += cell_arrows(seed, hi + 1, nhi + margin, cell, now)
                    hi = nhi + margin
                if extra:
                    arrows = arrows[:p] + sorted(arrows[p:] + extra)
        cell += 1
    while ei < n_ev and ev_time[ei] <= t:
        take_samples(float(ev_time[ei]), False)
        boundary(ei)
        check_all(float(ev_time[ei]))
        ei += 1
    take_samples(t, True)
    log = None
    if log_events:
        log = {
            "time": np.array(lt, dtype=np.float64),
            "member": np.array(lm, dtype=np.int64),
            "kind": np.array(lk, dtype=np.int64),
            "a": np.array(la, dtype=np.int64),
            "b": np.array(lb, dtype=np.int64),
        }
    finals = [m.snapshot() for m in members]
    return {
        "starts": [f[0] for f in finals],
        "heights": [f[1] for f in finals],
        "samples": samples,
        "violations": violations,
        "first_violation": first_violation,
        "vertex_violations": vertex_viol,
        "n_flips": n_flips,
        "n_arrows": n_arrows,
        "log": log,
    }
