"""Strategies and small utilities shared by the test modules."""

from __future__ import annotations

import numpy as np
from hypothesis import strategies as st

from freessep.lattice import Interface, ParticleConfig, to_interface


@st.composite
def particle_configs(draw, max_width: int = 12, span: int = 6):
    start = draw(st.integers(-span, span))
    bits = draw(st.lists(st.integers(0, 1), min_size=0, max_size=max_width))
    return ParticleConfig.from_bits(start, bits)


@st.composite
def interfaces(draw, max_width: int = 12, span: int = 6, max_v2: int = 4):
    eta = draw(particle_configs(max_width, span))
    v1 = int(eta.L + eta.particles_in_window() - 0.5 + 0.5)
    v2 = draw(st.integers(0, max_v2)) * 2 + (v1 % 2)
    return to_interface(eta, v2)


def random_config(rng: np.random.Generator, width: int = 10, span: int = 4) -> ParticleConfig:
    start = int(rng.integers(-span, span + 1))
    return ParticleConfig.from_bits(start, rng.integers(0, 2, size=int(rng.integers(0, width + 1))))


def bump(heights_start: int, heights) -> Interface:
    return Interface.from_heights(heights_start, np.asarray(heights))
