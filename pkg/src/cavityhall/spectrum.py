"""Harper-equation spectra on the torus and the cylinder.

Energies are in units of the static field magnitude ``|alpha|``. The torus
problem uses the ``q x q`` magnetic unit cell with a Bloch phase
``exp(i q kx)`` on the wrap-around link; the cylinder problem is the open
``L_open x L_open`` chain at fixed ``ky``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np

from .lattice import ModelParams, ParameterError

logger = logging.getLogger(__name__)

DEFAULT_GRID = 200
DEFAULT_MIN_WIDTH = 0.05
EDGE_FRACTION = 0.2
EDGE_THRESHOLD = 0.5
OVERLAP_MIN = 0.7

# Velocity sign counted as "right-moving". Fixed so that the lowest gap of
# flux 1/5 with lam == omega has gamma = +1 on the left edge.
RIGHT_MOVING_SIGN = -1

# left/right modes split by tunnelling through the bulk, exponentially small
_DEGENERACY_TOL = 1e-7
# in-gap levels closer than this are treated as one hybridised pair when counting
HYBRID_TOL = 1e-3


class AmbiguousTopologyError(RuntimeError):
    """An in-gap crossing could not be assigned to an edge."""

    def __init__(self, message: str, ky: list[float]):
        super().__init__(message)
        self.ky = ky


@dataclass
class HarperSpectrum:
    flux: Fraction
    kx: np.ndarray
    nu: np.ndarray
    energies: np.ndarray  # (n_kx, n_nu, q), ascending along the last axis
    vectors: np.ndarray | None = None  # (n_kx, n_nu, q, q), columns are states

    @property
    def q(self) -> int:
        return self.flux.denominator

    def values(self) -> np.ndarray:
        """All eigenvalues as one sorted 1-D array."""
        return np.sort(self.energies, axis=None)


@dataclass
class EdgeBandStructure:
    flux: Fraction
    ky: np.ndarray
    energies: np.ndarray  # (n_ky, L_open), ascending per ky
    vectors: np.ndarray  # (n_ky, L_open, L_open), columns are states
    left_weight: np.ndarray
    right_weight: np.ndarray
    velocity: np.ndarray
    strip: int
    warnings: list[str] = field(default_factory=list)

    @property
    def size(self) -> int:
        return self.energies.shape[1]


@dataclass(frozen=True)
class GapRecord:
    lower: float
    upper: float
    gamma: int | None = None
    n_left: int | None = None
    n_right: int | None = None
    bands_below: int | None = None

    @property
    def fermi_energy(self) -> float:
        return 0.5 * (self.lower + self.upper)

    @property
    def width(self) -> float:
        return self.upper - self.lower


def harper_matrices(p: ModelParams, nu, kx) -> np.ndarray:
    """Harper matrices broadcast over arrays ``nu`` and ``kx``.

    Returns shape ``broadcast(nu, kx).shape + (q, q)``.
    """
    q = p.q
    if q < 1:
        raise ParameterError("flux denominator must be positive")
    nu = np.asarray(nu, dtype=float)
    kx = np.asarray(kx, dtype=float)
    shape = np.broadcast_shapes(nu.shape, kx.shape)
    nu = np.broadcast_to(nu, shape)
    kx = np.broadcast_to(kx, shape)
    lam, om, th = p.lam, p.omega, p.theta
    phi = float(p.flux)

    H = np.zeros(shape + (q, q), dtype=complex)
    m = np.arange(q)
    H[..., m, m] = -2 * om * np.cos(2 * np.pi * m * phi - nu[..., None] + th)
    hop_down = -lam * np.exp(1j * th)  # M[m, m-1]
    hop_up = -lam * np.exp(-1j * th)  # M[m, m+1]
    bloch = np.exp(1j * q * kx)
    if q == 1:
        # psi_{m-1} and psi_{m+1} are the same site up to the Bloch phase
        H[..., 0, 0] += hop_down * bloch.conj() + hop_up * bloch
        return H
    idx = np.arange(1, q)
    H[..., idx, idx - 1] = hop_down
    H[..., idx - 1, idx] = hop_up
    H[..., q - 1, 0] += hop_up * bloch
    H[..., 0, q - 1] += hop_down * bloch.conj()
    return H


def harper_matrix(p: ModelParams, nu: float, kx: float) -> np.ndarray:
    """The ``q x q`` Harper matrix; its eigenvalues are ``E/|alpha|``."""
    return harper_matrices(p, float(nu), float(kx))


def momentum_grid(p: ModelParams, n_kx: int, n_nu: int) -> tuple[np.ndarray, np.ndarray]:
    if n_kx < 1 or n_nu < 1:
        raise ValueError("grid sizes must be >= 1")
    kx = (2 * np.pi / p.q) * np.arange(n_kx) / n_kx
    nu = 2 * np.pi * np.arange(n_nu) / n_nu
    return kx, nu


def bulk_spectrum(
    p: ModelParams,
    n_kx: int = DEFAULT_GRID,
    n_nu: int = DEFAULT_GRID,
    vectors: bool = False,
) -> HarperSpectrum:
    """Torus spectrum on the uniform grid ``kx in [0, 2pi/q)``, ``nu in [0, 2pi)``."""
    kx, nu = momentum_grid(p, n_kx, n_nu)
    q = p.q
    energies = np.empty((n_kx, n_nu, q))
    vecs = np.empty((n_kx, n_nu, q, q), dtype=complex) if vectors else None
    # one kx row at a time bounds the batch at n_nu * q * q
    for a, k in enumerate(kx):
        H = harper_matrices(p, nu, k)
        if vectors:
            energies[a], vecs[a] = np.linalg.eigh(H)
        else:
            energies[a] = np.linalg.eigvalsh(H)
    return HarperSpectrum(p.flux, kx, nu, energies, vecs)


def farey_fluxes(q_max: int) -> list[Fraction]:
    """All reduced ``p/q`` in ``[0, 1)`` with ``q <= q_max``, ascending."""
    if q_max < 1:
        raise ValueError("q_max must be >= 1")
    out = {Fraction(pp, qq) for qq in range(1, q_max + 1) for pp in range(qq) if math.gcd(pp, qq) == 1}
    return sorted(out)


def butterfly(
    p: ModelParams, q_max: int, n_kx: int = 16, n_nu: int = 16
) -> list[tuple[Fraction, np.ndarray]]:
    """Sorted bulk eigenvalues for every flux of :func:`farey_fluxes`."""
    out = []
    for flux in farey_fluxes(q_max):
        spec = bulk_spectrum(p.replace(flux=flux), n_kx, n_nu)
        out.append((flux, spec.values()))
    return out


def _cylinder_matrices(p: ModelParams, L_open: int, ky: np.ndarray) -> np.ndarray:
    m = np.arange(L_open)
    H = np.zeros((ky.size, L_open, L_open), dtype=complex)
    H[:, m, m] = -2 * p.omega * np.cos(2 * np.pi * m * float(p.flux) - ky[:, None] + p.theta)
    idx = np.arange(1, L_open)
    H[:, idx, idx - 1] = -p.lam * np.exp(1j * p.theta)
    H[:, idx - 1, idx] = -p.lam * np.exp(-1j * p.theta)
    return H


def _clusters(E: np.ndarray, tol: float):
    """Runs of consecutive sorted levels closer than ``tol``."""
    start = 0
    n = E.size
    while start < n:
        stop = start + 1
        while stop < n and E[stop] - E[stop - 1] < tol:
            stop += 1
        if stop - start > 1:
            yield start, stop
        start = stop


def _split_degenerate(E: np.ndarray, U: np.ndarray, tol: float = _DEGENERACY_TOL):
    """Within near-degenerate clusters rotate to position eigenstates.

    Degenerate left and right edge modes otherwise come back as arbitrary
    mixtures. Returns the (Rayleigh) energies of the rotated states; ``U`` is
    modified in place.
    """
    x = np.arange(U.shape[0], dtype=float)
    E = E.copy()
    for start, stop in _clusters(E, tol):
        sub = U[:, start:stop]
        X = sub.conj().T @ (x[:, None] * sub)
        _, R = np.linalg.eigh(X)
        U[:, start:stop] = sub @ R
        E[start:stop] = (np.abs(R) ** 2).T @ E[start:stop]
    return E


def edge_spectrum(
    p: ModelParams,
    L_open: int,
    n_ky: int = DEFAULT_GRID,
    edge_fraction: float = EDGE_FRACTION,
) -> EdgeBandStructure:
    """Cylinder bands ``E_l(ky)`` with edge weights and group velocities."""
    if L_open < 2:
        raise ValueError("L_open must be >= 2")
    if n_ky < 3:
        raise ValueError("n_ky must be >= 3")
    warnings = []
    if L_open < 2 * p.q:
        msg = f"L_open={L_open} < 2q={2 * p.q}: edges are not separated by bulk"
        logger.warning(msg)
        warnings.append(msg)

    ky = 2 * np.pi * np.arange(n_ky) / n_ky
    E, U = np.linalg.eigh(_cylinder_matrices(p, L_open, ky))
    for k in range(n_ky):
        E[k] = _split_degenerate(E[k], U[k])

    strip = max(1, int(round(edge_fraction * L_open)))
    prob = np.abs(U) ** 2  # (n_ky, site, state)
    left = prob[:, :strip, :].sum(axis=1)
    right = prob[:, L_open - strip :, :].sum(axis=1)
    dk = 2 * np.pi / n_ky
    velocity = (np.roll(E, -1, axis=0) - np.roll(E, 1, axis=0)) / (2 * dk)
    return EdgeBandStructure(p.flux, ky, E, U, left, right, velocity, strip, warnings)


def find_gaps(spec: HarperSpectrum, min_width: float = DEFAULT_MIN_WIDTH) -> list[GapRecord]:
    """Maximal eigenvalue-free intervals of width ``>= min_width``."""
    vals = spec.values()
    if vals.size == 0:
        raise ValueError("empty spectrum")
    gaps = []
    diffs = np.diff(vals)
    per_point = spec.energies.shape[0] * spec.energies.shape[1]
    for k in np.flatnonzero(diffs >= min_width):
        lower, upper = float(vals[k]), float(vals[k + 1])
        below, rest = divmod(int(np.count_nonzero(spec.energies < 0.5 * (lower + upper))), per_point)
        if rest:
            # the interval splits a band: a sampling hole, not a spectral gap
            logger.warning("gap [%.6g, %.6g] cuts through a band; grid too coarse?", lower, upper)
        gaps.append(GapRecord(lower, upper, bands_below=below if not rest else None))
    return gaps


def gap_invariant(
    edge: EdgeBandStructure,
    gap: GapRecord,
    edge_select: str = "left",
    threshold: float = EDGE_THRESHOLD,
    overlap_min: float = OVERLAP_MIN,
    hybrid_tol: float = HYBRID_TOL,
) -> GapRecord:
    """Count chiral edge crossings of the gap midpoint on one edge.

    Each in-gap state is followed from ``ky`` to the next grid point by
    maximal eigenvector overlap; a sign change of ``E - E_F`` is a crossing,
    the sign of the energy step is its direction. Levels closer than
    ``hybrid_tol`` are first rotated to position eigenstates.
    """
    if edge_select not in ("left", "right"):
        raise ValueError("edge_select must be 'left' or 'right'")
    ef = gap.fermi_energy
    half = 0.5 * gap.width
    E, U = edge.energies.copy(), edge.vectors.copy()
    n_ky, size = E.shape
    # finite width lets left and right modes hybridise where they cross;
    # undo that so each tracked state sits on one edge
    for k in range(n_ky):
        E[k] = _split_degenerate(E[k], U[k], hybrid_tol)
    prob = np.abs(U) ** 2
    left = prob[:, : edge.strip, :].sum(axis=1)
    right = prob[:, size - edge.strip :, :].sum(axis=1)
    own, other = (left, right) if edge_select == "left" else (right, left)

    n_right = n_left = 0
    bad: list[float] = []
    for k in range(n_ky):
        k2 = (k + 1) % n_ky
        cand = np.flatnonzero(np.abs(E[k] - ef) < half)
        if cand.size == 0:
            continue
        ov = np.abs(U[k][:, cand].conj().T @ U[k2]) ** 2  # (cand, states at k2)
        for row, s in enumerate(cand):
            t = int(np.argmax(ov[row]))
            before = E[k, s] - ef
            if ov[row, t] < overlap_min:
                # hybridisation with bulk states near a gap edge is harmless;
                # losing track close to E_F is not
                if abs(before) < 0.5 * half:
                    bad.append(float(edge.ky[k]))
                continue
            after = E[k2, t] - ef
            if before == 0 or np.sign(before) == np.sign(after):
                continue
            if abs(after - before) > half:
                # the step jumps further than the gap centre can be resolved
                bad.append(float(edge.ky[k]))
                continue
            w_own = 0.5 * (own[k, s] + own[k2, t])
            w_other = 0.5 * (other[k, s] + other[k2, t])
            if w_own >= threshold:
                if RIGHT_MOVING_SIGN * (after - before) > 0:
                    n_right += 1
                else:
                    n_left += 1
            elif w_other < threshold:
                bad.append(float(edge.ky[k]))
    if bad:
        raise AmbiguousTopologyError(
            f"gap [{gap.lower:.6g}, {gap.upper:.6g}]: ambiguous crossings at ky={bad}", bad
        )
    return replace(gap, gamma=n_right - n_left, n_left=n_left, n_right=n_right)


def hall_conductivity(gamma: int) -> float:
    """Hall conductivity ``gamma / (2 pi)`` in units with ``e = hbar = 1``."""
    return gamma / (2 * math.pi)
