"""Bond currents, cavity population and conservation diagnostics.

Currents live on bonds leaving a site in the +x (``m -> m+1``) and +y
(``n -> n+1``) directions; bonds that leave the lattice carry zero. With
``printed=True`` the classical and quantum currents, and the y part of the
coherent current, use an alternative literal index placement that does not
satisfy the continuity equation; the default forms do.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .dynamics import ALL_PARTS, COHERENT, DISSIPATIVE, FLUCTUATION, SystemState, density_rhs
from .lattice import ModelParams

logger = logging.getLogger(__name__)

CHANNELS = ("coherent", "classical", "quantum")
_CHANNEL_PARTS = {"coherent": COHERENT, "classical": DISSIPATIVE, "quantum": FLUCTUATION}

# discarded imaginary parts above this are logged
IMAG_LOG_THRESHOLD = 1e-12


@dataclass(frozen=True)
class CurrentField:
    jx: np.ndarray  # (L, L), indexed [m, n]
    jy: np.ndarray
    channel: str
    imag_residue: float = 0.0

    @property
    def total_x(self) -> float:
        return float(self.jx.sum())

    @property
    def total_y(self) -> float:
        return float(self.jy.sum())

    def divergence(self) -> np.ndarray:
        """``J_x(m,n) - J_x(m-1,n) + J_y(m,n) - J_y(m,n-1)``."""
        return divergence(self.jx, self.jy)


def divergence(jx: np.ndarray, jy: np.ndarray) -> np.ndarray:
    div = jx + jy
    div[1:, :] -= jx[:-1, :]
    div[:, 1:] -= jy[:, :-1]
    return div


class _Bonds:
    """Flat-index neighbour tables for an ``L x L`` lattice."""

    _cache: dict[int, "_Bonds"] = {}

    def __init__(self, L: int):
        n = L * L
        a = np.arange(n)
        self.L = L
        self.col = a // L
        self.hx = np.flatnonzero(self.col < L - 1)  # sites with a +x bond
        self.hy = np.flatnonzero(a % L < L - 1)
        self.hxy = np.intersect1d(self.hx, self.hy)

    @classmethod
    def get(cls, L: int) -> "_Bonds":
        b = cls._cache.get(L)
        if b is None:
            b = cls._cache[L] = cls(L)
        return b


def _field(L, hx, vx, hy, vy):
    jx = np.zeros(L * L)
    jy = np.zeros(L * L)
    jx[hx] = vx
    jy[hy] = vy
    return jx.reshape(L, L), jy.reshape(L, L)


def _log_residue(name: str, residue: float) -> None:
    if residue > IMAG_LOG_THRESHOLD:
        logger.debug("%s current: discarded imaginary part %.3g", name, residue)


def coherent_current(s: SystemState, p: ModelParams, printed: bool = False) -> CurrentField:
    """``J_x = -2 lam Im(a* rho[a+x, a])``, ``J_y = -2 Om Im(a* e^{i phi m} rho[a+y, a])``.

    ``printed=True`` takes ``rho[a, a+y]`` in the y current instead.
    """
    L = p.lattice_size
    b = _Bonds.get(L)
    r = s.rho
    ac = np.conj(s.alpha)
    ph = p.column_phases()[b.col]
    vx = -2 * p.lam * np.imag(ac * r[b.hx + L, b.hx])
    if printed:
        bond_y = r[b.hy, b.hy + 1]
    else:
        bond_y = r[b.hy + 1, b.hy]
    vy = -2 * p.omega * np.imag(ac * ph[b.hy] * bond_y)
    return CurrentField(*_field(L, b.hx, vx, b.hy, vy), "coherent", 0.0)


def classical_current(s: SystemState, p: ModelParams, printed: bool = False) -> CurrentField:
    """Currents carried by the single-rho dissipative terms.

    ``J_x = -2K [lam^2 n(a+x) + lam Om Re(e^{-i phi m} rho[a+x, a+y])]`` and
    ``J_y = -2K [Om^2 n(a+y) + lam Om Re(e^{-i phi m} rho[a+x, a+y])]`` with
    ``K = kappa/(Delta^2 + kappa^2)``. ``printed=True`` uses ``cos(phi m)``
    for the phase factor. The mixed term needs both neighbours in the
    lattice.
    """
    L = p.lattice_size
    b = _Bonds.get(L)
    r = s.rho
    K = p.fluct_rate
    occ = r.diagonal().real
    phases = p.column_phases()[b.col[b.hxy]]
    mixed_raw = r[b.hxy + L, b.hxy + 1]
    if printed:
        mixed_c = np.cos(p.phase * b.col[b.hxy]) * mixed_raw
    else:
        mixed_c = phases.conj() * mixed_raw
    residue = float(np.abs(mixed_c.imag).max(initial=0.0)) * 2 * K * p.lam * p.omega
    _log_residue("classical", residue)
    mixed = np.zeros(L * L)
    mixed[b.hxy] = p.lam * p.omega * mixed_c.real
    vx = -2 * K * (p.lam**2 * occ[b.hx + L] + mixed[b.hx])
    vy = -2 * K * (p.omega**2 * occ[b.hy + 1] + mixed[b.hy])
    return CurrentField(*_field(L, b.hx, vx, b.hy, vy), "classical", residue)


def quantum_current(s: SystemState, p: ModelParams, printed: bool = False) -> CurrentField:
    """Currents carried by the bilinear fluctuation terms.

    With ``P = rho (v1^T rho)``: ``J_x = 2K lam Re P[a, a+x]`` and
    ``J_y = 2K Om Re(e^{-i phi m} P[a, a+y])``. ``printed=True`` replaces the
    ``Om^2`` part of ``J_y`` by the shifted placement ``rho[b-y, a+y]``.
    """
    L = p.lattice_size
    b = _Bonds.get(L)
    r = s.rho
    K = p.fluct_rate
    ph = p.column_phases()
    t = r.reshape(L, L, L, L)
    l1 = _kernels._numpy._l1(t, p.lam, p.omega, ph).reshape(L * L, L * L)
    P = r @ l1
    px = P[b.hx, b.hx + L]
    if printed:
        # y part: sum_b rho[a, b] (lam rho[b+x, a+y] + Om e^{i phi m_b} rho[b-y, a+y])
        shifted = np.zeros_like(t)
        shifted[:, 1:] = ph[:, None, None, None] * t[:, :-1]
        lx = np.zeros_like(t)
        lx[:-1] = t[1:]
        Q = r @ (p.lam * lx + p.omega * shifted).reshape(L * L, L * L)
        py = ph[b.col[b.hy]].conj() * Q[b.hy, b.hy + 1]
    else:
        py = ph[b.col[b.hy]].conj() * P[b.hy, b.hy + 1]
    residue = 2 * K * max(
        p.lam * float(np.abs(px.imag).max(initial=0.0)),
        p.omega * float(np.abs(py.imag).max(initial=0.0)),
    )
    _log_residue("quantum", residue)
    vx = 2 * K * p.lam * px.real
    vy = 2 * K * p.omega * py.real
    return CurrentField(*_field(L, b.hx, vx, b.hy, vy), "quantum", residue)


_CURRENT_FUNCS = {
    "coherent": coherent_current,
    "classical": classical_current,
    "quantum": quantum_current,
}


def channel_current(s: SystemState, p: ModelParams, channel: str, printed: bool = False) -> CurrentField:
    try:
        fn = _CURRENT_FUNCS[channel]
    except KeyError:
        raise ValueError(f"unknown channel {channel!r}; choose from {CHANNELS}") from None
    return fn(s, p, printed=printed)


@dataclass(frozen=True)
class CurrentTotals:
    j_hall: float
    j_x_total: float
    co_x: float
    co_y: float
    cl_x: float
    cl_y: float
    qu_x: float
    qu_y: float


def total_currents(s: SystemState, p: ModelParams, printed: bool = False) -> CurrentTotals:
    """Site sums per channel; ``j_hall`` sums the y channels, ``j_x_total`` the x channels."""
    co = coherent_current(s, p, printed)
    cl = classical_current(s, p, printed)
    qu = quantum_current(s, p, printed)
    return CurrentTotals(
        j_hall=co.total_y + cl.total_y + qu.total_y,
        j_x_total=co.total_x + cl.total_x + qu.total_x,
        co_x=co.total_x,
        co_y=co.total_y,
        cl_x=cl.total_x,
        cl_y=cl.total_y,
        qu_x=qu.total_x,
        qu_y=qu.total_y,
    )


def continuity_residual(
    s: SystemState, p: ModelParams, channel: str | None = None, printed: bool = False
) -> float:
    """``max_a |d n_a/dt + div J(a)|``.

    With ``channel=None`` all three current channels are summed and compared
    with the full right-hand side; otherwise one channel is compared with its
    own part of the equation (coherent, dissipative or fluctuation).
    """
    L = p.lattice_size
    channels = CHANNELS if channel is None else (channel,)
    parts = 0
    div = np.zeros((L, L))
    for ch in channels:
        f = channel_current(s, p, ch, printed)
        parts |= _CHANNEL_PARTS[ch]
        div += f.divergence()
    dn = density_rhs(s, p, parts).diagonal().real.reshape(L, L)
    return float(np.abs(dn + div).max())


def cavity_population(s: SystemState) -> float:
    return float(abs(s.alpha) ** 2)


@dataclass(frozen=True)
class TrajectoryRecord:
    time: float
    alpha: complex
    population: float
    j_hall: float
    j_x_total: float
    j_co_x: float
    j_co_y: float
    j_cl_x: float
    j_cl_y: float
    j_qu_x: float
    j_qu_y: float
    trace: float
    herm_residual: float
    min_eig: float
    max_eig: float
    continuity_residual: float
    coherent_residual: float


def make_record(s: SystemState, p: ModelParams, parts: int = ALL_PARTS) -> TrajectoryRecord:
    """All per-sample observables of one state.

    ``parts`` names the terms being integrated; the full continuity residual
    is taken against those terms and the matching current channels.
    """
    L = p.lattice_size
    fields = {ch: channel_current(s, p, ch) for ch in CHANNELS}
    div = np.zeros((L, L))
    for ch, f in fields.items():
        if parts & _CHANNEL_PARTS[ch]:
            div += f.divergence()
    dn_all = density_rhs(s, p, parts).diagonal().real.reshape(L, L)
    dn_co = density_rhs(s, p, COHERENT).diagonal().real.reshape(L, L)
    co_res = float(np.abs(dn_co + fields["coherent"].divergence()).max())
    eig = np.linalg.eigvalsh(0.5 * (s.rho + s.rho.conj().T))
    co, cl, qu = (fields[ch] for ch in CHANNELS)
    return TrajectoryRecord(
        time=s.time,
        alpha=s.alpha,
        population=cavity_population(s),
        j_hall=co.total_y + cl.total_y + qu.total_y,
        j_x_total=co.total_x + cl.total_x + qu.total_x,
        j_co_x=co.total_x,
        j_co_y=co.total_y,
        j_cl_x=cl.total_x,
        j_cl_y=cl.total_y,
        j_qu_x=qu.total_x,
        j_qu_y=qu.total_y,
        trace=s.trace,
        herm_residual=s.hermiticity_residual(),
        min_eig=float(eig[0]),
        max_eig=float(eig[-1]),
        continuity_residual=float(np.abs(dn_all + div).max()),
        coherent_residual=co_res,
    )
