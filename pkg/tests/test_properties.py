"""Property-based checks over random parameters and states."""

import math
from fractions import Fraction

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from cavityhall.dynamics import SystemState, density_rhs
from cavityhall.lattice import ModelParams
from cavityhall.observables import CHANNELS, channel_current, continuity_residual
from cavityhall.spectrum import harper_matrix

fluxes = st.builds(Fraction, st.integers(0, 12), st.integers(1, 13)).map(lambda f: f % 1)
reals = st.floats(0.0, 2.0, allow_nan=False)
angles = st.floats(0.0, 2 * math.pi, allow_nan=False, exclude_max=True)


@given(fluxes, reals, reals, angles, angles, angles)
@settings(max_examples=60, deadline=None)
def test_harper_hermitian_and_trace(flux, lam, om, theta, nu, kx):
    p = ModelParams(lam=lam, omega=om, flux=flux, theta=theta)
    M = harper_matrix(p, nu, kx)
    assert M.shape == (p.q, p.q)
    assert np.array_equal(M, M.conj().T)
    m = np.arange(p.q)
    tr = -2 * om * np.cos(2 * np.pi * m * float(p.flux) - nu + p.theta).sum()
    if p.q == 1:
        tr += -2 * lam * math.cos(kx - p.theta)
    assert abs(np.linalg.eigvalsh(M).sum() - tr) < 1e-10


@st.composite
def states(draw):
    L = draw(st.integers(1, 4))
    seed = draw(st.integers(0, 2**31))
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(L * L, L * L)) + 1j * rng.normal(size=(L * L, L * L))
    alpha = complex(*rng.normal(size=2))
    return SystemState(alpha, 0.3 * (a + a.conj().T) / 2)


@given(states(), fluxes, reals, reals, st.floats(-1, 1), st.floats(0.1, 2))
@settings(max_examples=40, deadline=None)
def test_rhs_hermitian_traceless_and_continuity(s, flux, lam, om, delta, kappa):
    p = ModelParams(lam=lam, omega=om, delta=delta, kappa=kappa, flux=flux, lattice_size=s.lattice_size)
    d = density_rhs(s, p)
    scale = 1 + np.abs(d).max()
    assert np.abs(d - d.conj().T).max() < 1e-12 * scale
    assert abs(np.trace(d)) < 1e-12 * scale
    assert continuity_residual(s, p) < 1e-12 * scale
    for ch in CHANNELS:
        f = channel_current(s, p, ch)
        assert np.isfinite(f.jx).all() and np.isfinite(f.jy).all()
