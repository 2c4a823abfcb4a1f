# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
# distutils: language = c++
"""Compiled event loops; arithmetic mirrors ``_fallback.py`` exactly."""

import numpy as np

from libc.math cimport log as c_log, floor, ceil, INFINITY
from libc.stdint cimport uint64_t, int64_t
from libcpp.vector cimport vector
from libcpp.utility cimport pair
from libcpp.algorithm cimport sort

BACKEND = "cython"

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef uint64_t M1 = 0xBF58476D1CE4E5B9ULL
cdef uint64_t M2 = 0x94D049BB133111EBULL
cdef double INV53 = 1.0 / 9007199254740992.0

cdef int ROLE_PARTICLE = 1
cdef int ROLE_ARROW = 7


class EventCapExceeded(RuntimeError):
    pass


cdef inline uint64_t mix64(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * M1
    z = (z ^ (z >> 27)) * M2
    return z ^ (z >> 31)


cdef inline double cuniform(uint64_t seed, int64_t a, int64_t b, int64_t c, int64_t d) noexcept nogil:
    cdef uint64_t h = mix64(seed + GOLDEN)
    h = mix64(h ^ (<uint64_t>a + GOLDEN))
    h = mix64(h ^ (<uint64_t>b + 2 * GOLDEN))
    h = mix64(h ^ (<uint64_t>c + 3 * GOLDEN))
    h = mix64(h ^ (<uint64_t>d + 4 * GOLDEN))
    return (<double>(h >> 11) + 0.5) * INV53


def uniform(seed, long long a, long long b, long long c, long long d):
    """Same variate as :func:`freessep._rng.uniform`."""
    return cuniform(<uint64_t>(int(seed) & 0xFFFFFFFFFFFFFFFF), a, b, c, d)


cdef object _ll_array(vector[long long]& v):
    out = np.empty(v.size(), dtype=np.int64)
    cdef int64_t[:] o = out
    cdef size_t i
    for i in range(v.size()):
        o[i] = v[i]
    return out


cdef object _d_array(vector[double]& v):
    out = np.empty(v.size(), dtype=np.float64)
    cdef double[:] o = out
    cdef size_t i
    for i in range(v.size()):
        o[i] = v[i]
    return out


# ---------------------------------------------------------------------------
# particle system
# ---------------------------------------------------------------------------


def particle_run(
    long long start,
    bits,
    double J,
    double T,
    seed,
    long long replica=0,
    bint centered=False,
    bint check_median=False,
    bint log_events=False,
    double avg_start=0.0,
    double batch_len=0.0,
    long long max_events=100_000_000,
):
    cdef uint64_t useed = <uint64_t>(int(seed) & 0xFFFFFFFFFFFFFFFF)
    cdef const unsigned char[:] b0 = np.ascontiguousarray(bits, dtype=np.uint8)
    cdef long long n0 = b0.shape[0]
    cdef long long pad = 64 + n0
    cdef long long cap = n0 + 2 * pad
    cdef vector[unsigned char] buf
    cdef vector[unsigned char] tmp
    buf.assign(cap, 0)
    cdef long long i, y, k, x, nbonds, bi, nb = 0
    cdef long long n1 = 0
    for i in range(pad):
        buf[i] = 1
    for i in range(n0):
        buf[pad + i] = b0[i]
        n1 += b0[i]
    cdef long long off = start - pad
    cdef long long L = start
    cdef long long R = start + n0 - 1
    cdef long long m2 = 2 * L + 2 * n1 - 1
    cdef long long A = 0, B = 0, r_old, l_old
    cdef double t = 0.0, t_next, dt, rate, u1, u2, s, a, e, w, be
    cdef double half = 0.5
    cdef long long ctr = 0, n_events = 0, med_viol = 0
    cdef int kind
    cdef long long site
    cdef unsigned char a0, a1
    if batch_len > 0.0 and T > avg_start:
        nb = <long long>ceil((T - avg_start) / batch_len)
        if nb < 1:
            nb = 1
    cdef vector[double] batches
    batches.assign(nb, 0.0)
    cdef vector[double] log_t
    cdef vector[long long] log_k, log_x, log_L, log_R, log_A, log_B, log_m
    cdef bint capped = False
    with nogil:
        while True:
            nbonds = R - L + 2
            rate = half * nbonds + 2.0 * J
            u1 = cuniform(useed, ROLE_PARTICLE, replica, 0, ctr)
            u2 = cuniform(useed, ROLE_PARTICLE, replica, 0, ctr + 1)
            ctr += 2
            dt = -c_log(u1) / rate
            t_next = t + dt
            if nb:
                a = t if t > avg_start else avg_start
                e = t_next if t_next < T else T
                w = <double>(R - L + 1)
                while a < e:
                    bi = <long long>((a - avg_start) / batch_len)
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
                capped = True
                break
            s = u2 * rate
            kind = 0
            site = 0
            if s < half * nbonds:
                k = <long long>(s / half)
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
                kind = 2
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
                kind = 1
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
                log_t.push_back(t)
                log_k.push_back(kind)
                log_x.push_back(site)
                log_L.push_back(L)
                log_R.push_back(R)
                log_A.push_back(A)
                log_B.push_back(B)
                log_m.push_back(m2)
            if L - 2 - off < 0 or R + 2 - off >= cap:
                n0 = R - L + 1
                tmp.assign(buf.begin() + (L - off), buf.begin() + (R + 1 - off))
                pad = 64 + n0
                cap = n0 + 2 * pad
                buf.assign(cap, 0)
                for i in range(pad):
                    buf[i] = 1
                for i in range(n0):
                    buf[pad + i] = tmp[i]
                off = L - pad
    if capped:
        raise EventCapExceeded(
            f"event cap {max_events} exceeded at t={t:.6g} (width {R - L + 1}, J={J})"
        )
    out_bits = np.empty(R - L + 1, dtype=np.uint8)
    for i in range(R - L + 1):
        out_bits[i] = buf[L - off + i]
    log = None
    if log_events:
        log = {
            "time": _d_array(log_t),
            "kind": _ll_array(log_k),
            "site": _ll_array(log_x),
            "L": _ll_array(log_L),
            "R": _ll_array(log_R),
            "A": _ll_array(log_A),
            "B": _ll_array(log_B),
            "median2": _ll_array(log_m),
        }
    return {
        "start": L,
        "bits": out_bits,
        "A": A,
        "B": B,
        "median2": m2,
        "n_events": n_events,
        "median_violations": med_viol,
        "batches": np.array([batches[i] for i in range(nb)], dtype=np.float64),
        "log": log,
    }


# ---------------------------------------------------------------------------
# interfaces under the Harris construction
# ---------------------------------------------------------------------------

ctypedef pair[double, pair[long long, int]] Arrow


cdef inline int arrow_count(uint64_t seed, long long x, long long cell, int d) noexcept nogil:
    cdef double u = cuniform(seed, ROLE_ARROW, x, 2 * cell + d, 0)
    cdef double p = 0.6065306597126334
    cdef double cdf = p
    cdef int k = 0
    while u > cdf and k < 64:
        k += 1
        p *= 0.5 / k
        cdf += p
    return k


cdef void cell_arrows(uint64_t seed, long long lo, long long hi, long long cell, double after,
                      vector[Arrow]& out) noexcept nogil:
    cdef long long x
    cdef int d, n, k
    cdef double tt
    cdef Arrow ar
    for x in range(lo, hi + 1):
        for d in range(2):
            n = arrow_count(seed, x, cell, d)
            for k in range(1, n + 1):
                tt = cell + cuniform(seed, ROLE_ARROW, x, 2 * cell + d, k)
                if tt > after:
                    ar.first = tt
                    ar.second.first = x
                    ar.second.second = d
                    out.push_back(ar)


def arrows_in_cell(seed, long long lo, long long hi, long long cell, double after):
    """Sorted arrows ``(time, site, dir)``; exposed for backend comparisons."""
    cdef vector[Arrow] v
    cell_arrows(<uint64_t>(int(seed) & 0xFFFFFFFFFFFFFFFF), lo, hi, cell, after, v)
    sort(v.begin(), v.end())
    return [(v[i].first, v[i].second.first, v[i].second.second) for i in range(v.size())]


cdef struct Member:
    long long poff
    long long hoff
    long long L
    long long R
    long long v1
    long long v2


cdef class _State:
    cdef vector[vector[long long]] bufs
    cdef vector[Member] m

    cdef inline long long h(self, int i, long long x) noexcept nogil:
        return self.bufs[i][x - self.m[i].poff] + self.m[i].hoff

    cdef void vertex(self, int i, long long* v1, long long* v2) noexcept nogil:
        cdef long long hl = self.h(i, self.m[i].L)
        cdef long long hr = self.h(i, self.m[i].R)
        cdef long long L = self.m[i].L, R = self.m[i].R
        # both sums are even by parity, so the division is exact
        v1[0] = (hl - hr + L + R) // 2
        v2[0] = (hl + hr + L - R) // 2

    cdef void ensure(self, int i, long long lo, long long hi) noexcept nogil:
        cdef vector[long long]* b = &self.bufs[i]
        cdef Member* mm = &self.m[i]
        if lo - 2 - mm.poff >= 0 and hi + 2 - mm.poff < <long long>b.size():
            return
        cdef long long a = mm.L, z = mm.R
        cdef vector[long long] core
        core.assign(b.begin() + (a - mm.poff), b.begin() + (z + 1 - mm.poff))
        cdef long long ncore = core.size()
        if lo > a:
            lo = a
        if hi < z:
            hi = z
        cdef long long pad_l = (a - lo) + 32 + ncore
        cdef long long pad_r = (hi - z) + 32 + ncore
        cdef long long i2
        b.resize(pad_l + ncore + pad_r)
        for i2 in range(pad_l):
            b[0][i2] = core[0] + (pad_l - i2)
        for i2 in range(ncore):
            b[0][pad_l + i2] = core[i2]
        for i2 in range(pad_r):
            b[0][pad_l + ncore + i2] = core[ncore - 1] + (i2 + 1)
        mm.poff = a - pad_l

    cdef void rescan(self, int i, long long lo, long long hi) noexcept nogil:
        cdef vector[long long]* b = &self.bufs[i]
        cdef long long p = self.m[i].poff
        cdef long long x = lo - 1
        while b[0][x + 1 - p] - b[0][x - p] == -1:
            x += 1
        self.m[i].L = x
        x = hi + 1
        while b[0][x - p] - b[0][x - 1 - p] == 1:
            x -= 1
        self.m[i].R = x

    cdef void after_flip(self, int i) noexcept nogil:
        cdef vector[long long]* b = &self.bufs[i]
        cdef long long p = self.m[i].poff
        cdef long long L = self.m[i].L, R = self.m[i].R
        if b[0][L - p] - b[0][L - 1 - p] == 1:
            L -= 1
        else:
            while b[0][L + 1 - p] - b[0][L - p] == -1:
                L += 1
        self.m[i].L = L
        if b[0][R + 1 - p] - b[0][R - p] == -1:
            R += 1
        else:
            while b[0][R - p] - b[0][R - 1 - p] == 1:
                R -= 1
        self.m[i].R = R

    cdef void join(self, int i, long long a, long long c) noexcept nogil:
        cdef long long lo = self.m[i].L, hi = self.m[i].R, x, v, d
        if a < lo:
            lo = a
        if a > hi:
            hi = a
        self.ensure(i, lo, hi)
        cdef vector[long long]* b = &self.bufs[i]
        cdef long long p = self.m[i].poff, ho = self.m[i].hoff
        cdef long long q, nb = b.size()
        for q in range(nb):
            d = q + p - a
            if d < 0:
                d = -d
            v = d + c - ho
            if b[0][q] < v:
                b[0][q] = v
        self.rescan(i, lo, hi)
        self.vertex(i, &self.m[i].v1, &self.m[i].v2)

    cdef bint pair_ok(self, int i, int j) noexcept nogil:
        cdef long long lo = self.m[i].L, hi = self.m[i].R, x
        if self.m[j].L < lo:
            lo = self.m[j].L
        if self.m[j].R > hi:
            hi = self.m[j].R
        lo -= 1
        hi += 1
        self.ensure(i, lo, hi)
        self.ensure(j, lo, hi)
        for x in range(lo, hi + 1):
            if self.h(i, x) > self.h(j, x):
                return False
        return True

    def snapshot(self, int i):
        cdef long long L = self.m[i].L, R = self.m[i].R, x
        out = np.empty(R - L + 1, dtype=np.int64)
        cdef int64_t[:] o = out
        for x in range(L, R + 1):
            o[x - L] = self.h(i, x)
        return (L, out)


def interface_run(
    starts,
    heights,
    seed,
    double s,
    double t,
    ev_time,
    ev_member,
    ev_kind,
    ev_a,
    ev_b,
    pairs,
    sample_times,
    bint log_events=False,
    bint check_vertex=False,
    long long max_events=100_000_000,
    long long margin=4,
):
    cdef uint64_t useed = <uint64_t>(int(seed) & 0xFFFFFFFFFFFFFFFF)
    cdef _State st = _State()
    cdef int nm = len(starts)
    cdef int i, j, mi, kk
    cdef Member mem
    cdef vector[long long] bv
    cdef long long n, pad, q
    for i in range(nm):
        h = np.asarray(heights[i], dtype=np.int64)
        n = h.shape[0]
        pad = 32 + n
        bv.resize(n + 2 * pad)
        for q in range(pad):
            bv[q] = h[0] + (pad - q)
        for q in range(n):
            bv[pad + q] = h[q]
        for q in range(pad):
            bv[pad + n + q] = h[n - 1] + (q + 1)
        st.bufs.push_back(bv)
        mem.poff = starts[i] - pad
        mem.hoff = 0
        mem.L = starts[i]
        mem.R = starts[i] + n - 1
        st.m.push_back(mem)
        st.vertex(i, &st.m[i].v1, &st.m[i].v2)

    cdef int64_t[:, :] pr = np.ascontiguousarray(np.asarray(pairs, dtype=np.int64).reshape(-1, 2))
    cdef int npairs = pr.shape[0]
    cdef const double[:] evt = np.ascontiguousarray(ev_time, dtype=np.float64)
    cdef const int64_t[:] evm = np.ascontiguousarray(ev_member, dtype=np.int64)
    cdef const int64_t[:] evk = np.ascontiguousarray(ev_kind, dtype=np.int64)
    cdef const int64_t[:] eva = np.ascontiguousarray(ev_a, dtype=np.int64)
    cdef const int64_t[:] evb = np.ascontiguousarray(ev_b, dtype=np.int64)
    cdef long long n_ev = evt.shape[0]
    cdef long long ei = 0
    cdef const double[:] smp = np.ascontiguousarray(sample_times, dtype=np.float64)
    cdef long long n_samp = smp.shape[0]
    cdef long long si = 0
    samples = []

    cdef long long violations = 0, vertex_viol = 0, n_flips = 0, n_arrows = 0
    cdef double first_violation = INFINITY
    cdef vector[double] lt
    cdef vector[long long] lm, lk, la, lb

    cdef long long cell = <long long>floor(s)
    cdef double cend, ta, tb, now
    cdef long long lo, hi, nlo, nhi, x, nv, kind, a, bb, v1, v2
    cdef int d
    cdef bint flipped
    cdef size_t p
    cdef vector[Arrow] arrows
    cdef vector[long long]* buf
    cdef Member* mp

    while si < n_samp and smp[si] < s:
        samples.append([st.snapshot(i) for i in range(nm)])
        si += 1
    for kk in range(npairs):
        if not st.pair_ok(pr[kk, 0], pr[kk, 1]):
            violations += 1
            if s < first_violation:
                first_violation = s

    while cell < t:
        cend = cell + 1.0
        lo = st.m[0].L
        hi = st.m[0].R
        for i in range(1, nm):
            if st.m[i].L < lo:
                lo = st.m[i].L
            if st.m[i].R > hi:
                hi = st.m[i].R
        lo -= 1 + margin
        hi += 1 + margin
        arrows.clear()
        cell_arrows(useed, lo, hi, cell, s, arrows)
        sort(arrows.begin(), arrows.end())
        p = 0
        while True:
            ta = arrows[p].first if p < arrows.size() else INFINITY
            if ta > t:
                ta = INFINITY
            tb = evt[ei] if ei < n_ev else INFINITY
            if tb >= cend or tb > t:
                tb = INFINITY
            if ta == INFINITY and tb == INFINITY:
                break
            if tb <= ta:
                while si < n_samp and smp[si] < tb:
                    samples.append([st.snapshot(i) for i in range(nm)])
                    si += 1
                now = tb
                _boundary(st, ei, evm, evk, eva, evb)
                if log_events:
                    lt.push_back(tb)
                    lm.push_back(evm[ei])
                    lk.push_back(2 + evk[ei])
                    la.push_back(eva[ei])
                    lb.push_back(evb[ei])
                ei += 1
                for kk in range(npairs):
                    if not st.pair_ok(pr[kk, 0], pr[kk, 1]):
                        violations += 1
                        if now < first_violation:
                            first_violation = now
            else:
                while si < n_samp and smp[si] < ta:
                    samples.append([st.snapshot(i) for i in range(nm)])
                    si += 1
                now = arrows[p].first
                x = arrows[p].second.first
                d = arrows[p].second.second
                p += 1
                n_arrows += 1
                flipped = False
                with nogil:
                    for mi in range(nm):
                        mp = &st.m[mi]
                        if x < mp.L or x > mp.R:
                            continue
                        buf = &st.bufs[mi]
                        q = x - mp.poff
                        if buf[0][q - 1] != buf[0][q + 1]:
                            continue
                        if d == 0:
                            nv = buf[0][q - 1] + 1
                        else:
                            nv = buf[0][q - 1] - 1
                        if nv == buf[0][q]:
                            continue
                        buf[0][q] = nv
                        n_flips += 1
                        if n_flips > max_events:
                            break
                        st.after_flip(mi)
                        st.ensure(mi, st.m[mi].L, st.m[mi].R)
                        if check_vertex:
                            st.vertex(mi, &v1, &v2)
                            if v1 != st.m[mi].v1 or v2 != st.m[mi].v2:
                                vertex_viol += 1
                        if log_events:
                            lt.push_back(now)
                            lm.push_back(mi)
                            lk.push_back(d)
                            la.push_back(x)
                            lb.push_back(st.h(mi, x))
                        flipped = True
                    if flipped:
                        for kk in range(npairs):
                            st.ensure(pr[kk, 0], x, x)
                            st.ensure(pr[kk, 1], x, x)
                            if st.h(pr[kk, 0], x) > st.h(pr[kk, 1], x):
                                violations += 1
                                if now < first_violation:
                                    first_violation = now
                if n_flips > max_events:
                    raise EventCapExceeded(f"flip cap {max_events} exceeded at t={now:.6g}")
            nlo = st.m[0].L
            nhi = st.m[0].R
            for i in range(1, nm):
                if st.m[i].L < nlo:
                    nlo = st.m[i].L
                if st.m[i].R > nhi:
                    nhi = st.m[i].R
            nlo -= 1
            nhi += 1
            if nlo < lo or nhi > hi:
                n = arrows.size()
                if nlo < lo:
                    cell_arrows(useed, nlo - margin, lo - 1, cell, now, arrows)
                    lo = nlo - margin
                if nhi > hi:
                    cell_arrows(useed, hi + 1, nhi + margin, cell, now, arrows)
                    hi = nhi + margin
                if <size_t>n != arrows.size():
                    sort(arrows.begin() + p, arrows.end())
        cell += 1

    while ei < n_ev and evt[ei] <= t:
        while si < n_samp and smp[si] < evt[ei]:
            samples.append([st.snapshot(i) for i in range(nm)])
            si += 1
        _boundary(st, ei, evm, evk, eva, evb)
        if log_events:
            lt.push_back(evt[ei])
            lm.push_back(evm[ei])
            lk.push_back(2 + evk[ei])
            la.push_back(eva[ei])
            lb.push_back(evb[ei])
        for kk in range(npairs):
            if not st.pair_ok(pr[kk, 0], pr[kk, 1]):
                violations += 1
                if evt[ei] < first_violation:
                    first_violation = evt[ei]
        ei += 1
    while si < n_samp and smp[si] <= t:
        samples.append([st.snapshot(i) for i in range(nm)])
        si += 1

    log = None
    if log_events:
        log = {
            "time": _d_array(lt),
            "member": _ll_array(lm),
            "kind": _ll_array(lk),
            "a": _ll_array(la),
            "b": _ll_array(lb),
        }
    finals = [st.snapshot(i) for i in range(nm)]
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


cdef void _boundary(_State st, long long k, const int64_t[:] evm, const int64_t[:] evk,
                    const int64_t[:] eva, const int64_t[:] evb):
    cdef int i = evm[k]
    cdef long long a = eva[k], b = evb[k]
    if evk[k] == 0:
        st.join(i, a, b)
    else:
        st.m[i].poff += a
        st.m[i].hoff -= b
        st.m[i].L += a
        st.m[i].R += a
        st.join(i, 0, 0)
