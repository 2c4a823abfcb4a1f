"""Exclusion with free boundaries: birth at the leftmost hole, death at the rightmost particle.

Exchanges happen across every bond at rate 1/2; the rightmost particle dies
and the leftmost hole is filled at rate ``J`` each. The median then performs
a continuous-time random walk driven by the birth and death counts.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _kernels
from ._rng import MASK64
from .lattice import (
    ParticleConfig,
    apply_birth,
    apply_death,
    apply_swap,
    boundaries,
    hole_particle_counts,
    lyapunov_psi,
    median,
)

EVENT_SWAP, EVENT_BIRTH, EVENT_DEATH = 0, 1, 2
EVENT_NAMES = {EVENT_SWAP: "swap", EVENT_BIRTH: "birth", EVENT_DEATH: "death"}


class MedianIdentityViolation(AssertionError):
    """The median left the random walk ``M_0 + A_t - B_t``; always a bug."""


@dataclass
class ParticleTrajectory:
    """A run of the particle system with its event log.

    ``log`` holds per-event arrays ``time, kind, site, L, R, A, B, median2``
    (``median2`` is twice the median after the event). Snapshots are rebuilt
    from the log on demand.
    """

    initial: ParticleConfig
    final: ParticleConfig
    J: float
    T: float
    seed: int
    replica: int
    centered: bool
    A: int
    B: int
    n_events: int
    median_violations: int
    log: dict[str, np.ndarray] | None = field(default=None, repr=False)

    @property
    def times(self) -> np.ndarray:
        return self._need_log()["time"]

    def _need_log(self) -> dict[str, np.ndarray]:
        if self.log is None:
            raise ValueError("trajectory was run without an event log")
        return self.log

    def counts_at(self, t: float) -> tuple[int, int]:
        """``(A_t, B_t)``."""
        log = self._need_log()
        k = int(np.searchsorted(log["time"], t, side="right"))
        if k == 0:
            return 0, 0
        return int(log["A"][k - 1]), int(log["B"][k - 1])

    def snapshots(self, times: Sequence[float]) -> list[ParticleConfig]:
        """Configurations at the given nondecreasing times by replaying the log."""
        log = self._need_log()
        out: list[ParticleConfig] = []
        eta = self.initial
        k = 0
        n = log["time"].size
        for t in times:
            while k < n and log["time"][k] <= t:
                eta = _replay_one(eta, int(log["kind"][k]), int(log["site"][k]), self.centered)
                k += 1
            out.append(eta)
        return out

    def iter_states(self):
        """Yield ``(time, config)`` after every logged event, starting at time 0."""
        log = self._need_log()
        eta = self.initial
        yield 0.0, eta
        for k in range(log["time"].size):
            eta = _replay_one(eta, int(log["kind"][k]), int(log["site"][k]), self.centered)
            yield float(log["time"][k]), eta

    def to_csv(self, path) -> None:
        """Write ``time, event_type, L, R, median, A, B, width``."""
        log = self._need_log()
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["time", "event_type", "L", "R", "median", "A", "B", "width"])
            L0, R0 = boundaries(self.initial)
            w.writerow([0.0, "start", L0, R0, median(self.initial), 0, 0, R0 - L0 + 1])
            for k in range(log["time"].size):
                L, R = int(log["L"][k]), int(log["R"][k])
                w.writerow(
                    [
                        repr(float(log["time"][k])),
                        EVENT_NAMES[int(log["kind"][k])],
                        L,
                        R,
                        int(log["median2"][k]) / 2,
                        int(log["A"][k]),
                        int(log["B"][k]),
                        R - L + 1,
                    ]
                )


def _replay_one(eta: ParticleConfig, kind: int, site: int, centered: bool) -> ParticleConfig:
    if kind == EVENT_SWAP:
        return apply_swap(eta, site)
    if kind == EVENT_BIRTH:
        eta = apply_birth(eta)
        return eta.shifted(-1) if centered else eta
    eta = apply_death(eta)
    return eta.shifted(1) if centered else eta


def _run(
    eta0: ParticleConfig,
    J: float,
    T: float,
    seed: int,
    replica: int,
    centered: bool,
    record: bool,
    check_median: bool,
    max_events: int,
    backend: str | None,
    avg_start: float = 0.0,
    batch_len: float = 0.0,
) -> dict:
    if J <= 0:
        raise ValueError("J must be positive")
    if T < 0:
        raise ValueError("T must be nonnegative")
    mod = _kernels.active if backend is None else _kernels.get_backend(backend)
    return mod.particle_run(
        eta0.start,
        eta0.bits,
        float(J),
        float(T),
        int(seed) & MASK64,
        int(replica),
        centered=centered,
        check_median=check_median,
        log_events=record,
        avg_start=float(avg_start),
        batch_len=float(batch_len),
        max_events=int(max_events),
    )


def _trajectory(eta0, J, T, seed, replica, centered, res) -> ParticleTrajectory:
    final = ParticleConfig.from_bits(res["start"], res["bits"])
    return ParticleTrajectory(
        initial=eta0,
        final=final,
        J=J,
        T=T,
        seed=seed,
        replica=replica,
        centered=centered,
        A=res["A"],
        B=res["B"],
        n_events=res["n_events"],
        median_violations=res["median_violations"],
        log=res["log"],
    )


def simulate_particle(
    eta0: ParticleConfig,
    J: float,
    T: float,
    seed: int,
    replica: int = 0,
    record: bool = True,
    check_median: bool = True,
    max_events: int = 100_000_000,
    backend: str | None = None,
) -> ParticleTrajectory:
    """Exact-event simulation on ``[0, T]``; deterministic in ``(eta0, J, T, seed, replica)``.

    With ``check_median`` the median is recomputed by a scan after every event
    and compared with ``M_0 + A_t - B_t``; any mismatch raises.
    """
    res = _run(eta0, J, T, seed, replica, False, record, check_median, max_events, backend)
    if res["median_violations"]:
        raise MedianIdentityViolation(f"{res['median_violations']} events broke M_t = M_0 + A_t - B_t")
    return _trajectory(eta0, J, T, seed, replica, False, res)


def simulate_centered(
    eta0: ParticleConfig,
    J: float,
    T: float,
    seed: int,
    replica: int = 0,
    record: bool = True,
    max_events: int = 100_000_000,
    backend: str | None = None,
) -> ParticleTrajectory:
    """The process seen from its median, kept at 1/2 by a unit shift after each birth or death."""
    if median(eta0) != 0.5:
        raise ValueError(f"centered process needs median 1/2, got {median(eta0)}")
    res = _run(eta0, J, T, seed, replica, True, record, True, max_events, backend)
    if res["median_violations"]:
        raise MedianIdentityViolation("centered run moved the median")
    return _trajectory(eta0, J, T, seed, replica, True, res)


@dataclass(frozen=True)
class WidthEstimate:
    J: float
    estimate: float
    stderr: float
    n_batches: int
    T_burn: float
    T_avg: float
    seed: int

    @property
    def target(self) -> float:
        return 1.0 / (2.0 * self.J)

    def __iter__(self):
        return iter((self.estimate, self.stderr))


def estimate_invariant_width(
    J: float,
    T_burn: float,
    T_avg: float,
    seed: int,
    n_batches: int = 50,
    replica: int = 0,
    backend: str | None = None,
) -> WidthEstimate:
    """Time average of ``R - L + 1`` over ``[T_burn, T_burn + T_avg]`` from the step.

    The standard error comes from ``n_batches`` equal batch means.
    """
    if T_burn <= 0 or T_avg <= 0:
        raise ValueError("T_burn and T_avg must be positive")
    eta0 = ParticleConfig.heaviside(1)
    T = T_burn + T_avg
    batch_len = T_avg / n_batches
    res = _run(eta0, J, T, seed, replica, True, False, False, 10**12, backend, T_burn, batch_len)
    means = res["batches"] / batch_len
    means = means[:n_batches]
    est = float(np.mean(means))
    se = float(np.std(means, ddof=1) / math.sqrt(means.size))
    return WidthEstimate(J, est, se, int(means.size), T_burn, T_avg, seed)


def generator_psi(eta: ParticleConfig, J: float) -> float:
    """Exact ``L_part psi(eta)``, summing rate times the change of psi over all moves."""
    psi0 = lyapunov_psi(eta)
    L, R = boundaries(eta)
    total = 0.0
    for x in range(L - 1, R + 1):
        total += 0.5 * (lyapunov_psi(apply_swap(eta, x)) - psi0)
    total += J * (lyapunov_psi(apply_death(eta)) - psi0)
    total += J * (lyapunov_psi(apply_birth(eta)) - psi0)
    return total


def generator_psi_closed_form(eta: ParticleConfig, J: float) -> float:
    """``1/2 (#10 bonds - #01 bonds) - J (N0 + N1)``; the bond term equals 1/2."""
    n0, n1 = hole_particle_counts(eta)
    return 0.5 - J * (n0 + n1)


@dataclass(frozen=True)
class DriftEstimate:
    estimate: float
    stderr: float
    exact: float
    replicas: int
    dt: float

    @property
    def z_score(self) -> float:
        return (self.estimate - self.exact) / self.stderr if self.stderr > 0 else math.inf


def drift_check_psi(
    J: float,
    dt: float,
    replicas: int,
    seed: int,
    eta0: ParticleConfig | None = None,
    backend: str | None = None,
) -> DriftEstimate:
    """Monte Carlo estimate of ``(E psi(eta_dt) - psi(eta_0)) / dt`` over independent replicas."""
    if eta0 is None:
        eta0 = ParticleConfig.heaviside(1)
    psi0 = lyapunov_psi(eta0)
    vals = np.empty(replicas, dtype=np.float64)
    for r in range(replicas):
        res = _run(eta0, J, dt, seed, r, False, False, False, 10**8, backend)
        vals[r] = lyapunov_psi(ParticleConfig.from_bits(res["start"], res["bits"])) - psi0
    est = float(vals.mean() / dt)
    se = float(vals.std(ddof=1) / math.sqrt(replicas) / dt)
    return DriftEstimate(est, se, generator_psi(eta0, J), replicas, dt)


def ensemble_endpoints(
    eta0: ParticleConfig,
    J: float,
    T: float,
    seed: int,
    replicas: int,
    centered: bool = False,
    backend: str | None = None,
) -> dict[str, np.ndarray]:
    """Final width, median displacement and clock counts over independent replicas."""
    m0 = median(eta0)
    width = np.empty(replicas, dtype=np.int64)
    disp = np.empty(replicas, dtype=np.float64)
    A = np.empty(replicas, dtype=np.int64)
    B = np.empty(replicas, dtype=np.int64)
    for r in range(replicas):
        res = _run(eta0, J, T, seed, r, centered, False, False, 10**9, backend)
        n = res["bits"].size
        width[r] = n
        disp[r] = res["median2"] / 2 - m0
        A[r] = res["A"]
        B[r] = res["B"]
    return {"width": width, "median_displacement": disp, "A": A, "B": B}
