"""Coupled cavity and atomic density-matrix dynamics.

Time is in units of ``1/kappa`` and all couplings in units of ``kappa``. The
density matrix is held as an ``(L*L, L*L)`` complex matrix over flat sites
``a = m*L + n``; :attr:`SystemState.tensor` gives the rank-4 view
``rho[m, n, m', n']``.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Iterator, Sequence
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .lattice import ModelParams, ParameterError, site_index

logger = logging.getLogger(__name__)

COHERENT = _kernels.COHERENT
DISSIPATIVE = _kernels.DISSIPATIVE
FLUCTUATION = _kernels.FLUCTUATION
ALL_PARTS = _kernels.ALL_PARTS


class IntegrationError(RuntimeError):
    """Integration aborted; ``time`` is the last good time stamp."""

    def __init__(self, message: str, time: float):
        super().__init__(f"{message} (t={time:.6g})")
        self.time = time


@dataclass(frozen=True)
class SystemState:
    alpha: complex
    rho: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        rho = np.asarray(self.rho, dtype=complex)
        if rho.ndim == 4:
            L = rho.shape[0]
            rho = rho.reshape(L * L, L * L)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise ValueError(f"rho must be square, got shape {rho.shape}")
        L = math.isqrt(rho.shape[0])
        if L * L != rho.shape[0]:
            raise ValueError(f"rho dimension {rho.shape[0]} is not a square lattice")
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "alpha", complex(self.alpha))
        object.__setattr__(self, "time", float(self.time))

    @property
    def lattice_size(self) -> int:
        return math.isqrt(self.rho.shape[0])

    @property
    def tensor(self) -> np.ndarray:
        """Rank-4 view ``rho[m, n, m', n']``."""
        L = self.lattice_size
        return self.rho.reshape(L, L, L, L)

    @property
    def trace(self) -> float:
        return float(np.trace(self.rho).real)

    def hermiticity_residual(self) -> float:
        return float(np.abs(self.rho - self.rho.conj().T).max())


def corner_block(n_sites: int, L: int) -> list[tuple[int, int]]:
    """The ``n_sites`` sites nearest the ``(0, 0)`` corner, filled by square shells."""
    if not 0 <= n_sites <= L * L:
        raise ParameterError(f"cannot place {n_sites} atoms on a {L}x{L} lattice")
    sites = sorted(((m, n) for m in range(L) for n in range(L)), key=lambda s: (max(s), sum(s), s))
    return sites[:n_sites]


@dataclass(frozen=True)
class InitialStateSpec:
    """Boosted Gaussian packets on an occupied block, plus the cavity amplitude.

    ``occupied`` defaults to the square corner block holding
    ``filling * L**2`` atoms. ``packet_width`` is in lattice sites; zero gives
    single-site orbitals.
    """

    occupied: Sequence[tuple[int, int]] | None = None
    filling: float = 0.25
    boost: tuple[float, float] = (math.pi / 2, math.pi / 2)
    packet_width: float = 0.6
    alpha0: complex = 0j

    def sites(self, L: int) -> list[tuple[int, int]]:
        if self.occupied is None:
            N = self.filling * L * L
            if abs(N - round(N)) > 1e-9:
                raise ParameterError(f"filling {self.filling} gives non-integer N={N} on L={L}")
            return corner_block(int(round(N)), L)
        sites = [tuple(int(v) for v in s) for s in self.occupied]
        if len(set(sites)) != len(sites):
            raise ParameterError("occupied sites must be distinct")
        for s in sites:
            site_index(s, L)
        return sites


def build_initial_state(spec: InitialStateSpec, L: int) -> SystemState:
    """Pure Slater state ``rho = sum_k |phi_k><phi_k|`` from orthonormalized packets."""
    if spec.packet_width < 0:
        raise ParameterError("packet_width must be >= 0")
    sites = spec.sites(L)
    n = L * L
    if not sites:
        return SystemState(spec.alpha0, np.zeros((n, n), dtype=complex), 0.0)
    m, y = np.meshgrid(np.arange(L), np.arange(L), indexing="ij")
    qx, qy = spec.boost
    wave = np.exp(1j * (qx * m + qy * y))
    packets = np.empty((n, len(sites)), dtype=complex)
    for k, (a, b) in enumerate(sites):
        d2 = (m - a) ** 2 + (y - b) ** 2
        if spec.packet_width == 0:
            env = (d2 == 0).astype(float)
        else:
            env = np.exp(-d2 / (2 * spec.packet_width**2))
        packets[:, k] = (env * wave).ravel()
    sv = np.linalg.svd(packets, compute_uv=False)
    if sv[-1] < 1e-10 * sv[0]:
        raise ParameterError("initial packets are linearly dependent")
    Q, _ = np.linalg.qr(packets)
    rho = Q @ Q.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    return SystemState(spec.alpha0, rho, 0.0)


def cavity_rhs(s: SystemState, p: ModelParams) -> complex:
    """``d alpha / dt``."""
    _check_size(s, p)
    drive = _kernels.cavity_drive(s.rho, p.lattice_size, p.lam, p.omega, p.column_phases())
    return -1j * (p.delta - 1j * p.kappa) * s.alpha + 1j * drive


def density_rhs(s: SystemState, p: ModelParams, parts: int = ALL_PARTS) -> np.ndarray:
    """``d rho / dt`` as an ``(L*L, L*L)`` matrix.

    ``parts`` is a bit mask of COHERENT, DISSIPATIVE and FLUCTUATION; the
    default evaluates the full equation.
    """
    _check_size(s, p)
    return _kernels.density_rhs(
        s.rho, s.alpha, p.lattice_size, p.lam, p.omega, p.column_phases(), p.fluct_rate, parts
    )


def _check_size(s: SystemState, p: ModelParams) -> None:
    if s.lattice_size != p.lattice_size:
        raise ValueError(f"state is {s.lattice_size}x{s.lattice_size}, params say L={p.lattice_size}")


def _derivs(alpha, rho, t, p, parts):
    L = p.lattice_size
    ph = p.column_phases()
    da = -1j * (p.delta - 1j * p.kappa) * alpha + 1j * _kernels.cavity_drive(rho, L, p.lam, p.omega, ph)
    dr = _kernels.density_rhs(rho, alpha, L, p.lam, p.omega, ph, p.fluct_rate, parts)
    if not (math.isfinite(da.real) and math.isfinite(da.imag) and np.isfinite(dr).all()):
        raise IntegrationError("non-finite right-hand side", t)
    return da, dr


def step_euler(s: SystemState, p: ModelParams, h: float, parts: int = ALL_PARTS) -> SystemState:
    """One explicit Euler step of both equations from the pre-step state."""
    if not h > 0:
        raise ValueError("h must be > 0")
    _check_size(s, p)
    da, dr = _derivs(s.alpha, s.rho, s.time, p, parts)
    return SystemState(s.alpha + h * da, s.rho + h * dr, s.time + h)


def step_rk4(s: SystemState, p: ModelParams, h: float, parts: int = ALL_PARTS) -> SystemState:
    """Classical fourth-order Runge-Kutta step on the pair ``(alpha, rho)``."""
    if not h > 0:
        raise ValueError("h must be > 0")
    _check_size(s, p)
    a, r, t = s.alpha, s.rho, s.time
    a1, r1 = _derivs(a, r, t, p, parts)
    a2, r2 = _derivs(a + 0.5 * h * a1, r + 0.5 * h * r1, t, p, parts)
    a3, r3 = _derivs(a + 0.5 * h * a2, r + 0.5 * h * r2, t, p, parts)
    a4, r4 = _derivs(a + h * a3, r + h * r3, t, p, parts)
    return SystemState(
        a + h / 6 * (a1 + 2 * a2 + 2 * a3 + a4),
        r + h / 6 * (r1 + 2 * r2 + 2 * r3 + r4),
        t + h,
    )


STEPPERS = {"euler": step_euler, "rk4": step_rk4}


def evolve(
    s0: SystemState,
    p: ModelParams,
    h: float,
    t_max: float,
    sample_every: int = 1,
    observer: Callable | None = None,
    stepper: str = "rk4",
    fluctuations: bool = True,
    max_trace_drift: float | None = 1e-3,
) -> Iterator:
    """Integrate to ``t_max`` and yield a ``TrajectoryRecord`` every ``sample_every`` steps.

    The initial state is sampled too. ``observer``, if given, is called with
    each record before it is yielded. ``max_trace_drift`` bounds
    ``|trace - trace(0)|``; exceeding it raises :class:`IntegrationError`.
    """
    from .observables import make_record

    if not t_max > 0:
        raise ValueError("t_max must be > 0")
    if not h > 0:
        raise ValueError("h must be > 0")
    if sample_every < 1:
        raise ValueError("sample_every must be >= 1")
    try:
        step = STEPPERS[stepper]
    except KeyError:
        raise ValueError(f"unknown stepper {stepper!r}; choose from {sorted(STEPPERS)}") from None
    _check_size(s0, p)
    parts = ALL_PARTS if fluctuations else COHERENT | DISSIPATIVE

    n_steps = int(round(t_max / h))
    trace0 = s0.trace
    s = s0
    for k in range(n_steps + 1):
        if k:
            s = step(s, p, h, parts)
            # keep time on the grid instead of accumulating round-off
            s = SystemState(s.alpha, s.rho, k * h + s0.time)
            drift = abs(s.trace - trace0)
            if max_trace_drift is not None and drift > max_trace_drift:
                raise IntegrationError(f"trace drift {drift:.3g} exceeds {max_trace_drift:.3g}", s.time)
        if k % sample_every == 0:
            rec = make_record(s, p, parts=parts)
            if observer is not None:
                observer(rec)
            yield rec
