"""Lattice geometry, model parameters and the cavity vertex functions."""

from __future__ import annotations

import cmath
import logging
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import NamedTuple

import numpy as np

logger = logging.getLogger(__name__)

MAX_FLUX_DENOMINATOR = 1000


class ParameterError(ValueError):
    """Raised for physically or structurally invalid model parameters."""


def parse_flux(value) -> Fraction:
    """Convert ``value`` to a reduced flux fraction in ``[0, 1)``.

    Accepts ``Fraction``, ``int``, ``(p, q)`` pairs and strings such as
    ``"2/5"`` or ``"0.4"``. Decimal strings and floats must be exactly a
    rational with denominator at most 1000.
    """
    if isinstance(value, Fraction):
        frac = value
    elif isinstance(value, bool):
        raise ParameterError(f"invalid flux {value!r}")
    elif isinstance(value, int):
        frac = Fraction(value)
    elif isinstance(value, tuple) and len(value) == 2:
        p, q = (int(v) for v in value)
        if q == 0:
            raise ParameterError("flux denominator must be nonzero")
        if math.gcd(p, q) != 1:
            logger.warning("flux %d/%d reduced to %s", p, q, Fraction(p, q))
        frac = Fraction(p, q)
    elif isinstance(value, float):
        if not math.isfinite(value):
            raise ParameterError(f"invalid flux {value!r}")
        frac = Fraction(value)
        if frac.denominator > MAX_FLUX_DENOMINATOR:
            raise ParameterError(
                f"flux {value!r} is not an exact rational with q <= {MAX_FLUX_DENOMINATOR}; "
                "give it as 'p/q'"
            )
    elif isinstance(value, str):
        text = value.strip()
        try:
            if "/" in text:
                p_str, q_str = text.split("/", 1)
                p, q = int(p_str), int(q_str)
                if q == 0:
                    raise ParameterError("flux denominator must be nonzero")
                if math.gcd(p, q) != 1:
                    logger.warning("flux %s reduced to %s", text, Fraction(p, q))
                frac = Fraction(p, q)
            else:
                frac = Fraction(text)
                if frac.denominator > MAX_FLUX_DENOMINATOR:
                    raise ParameterError(
                        f"flux {text!r} is not an exact rational with q <= "
                        f"{MAX_FLUX_DENOMINATOR}; give it as 'p/q'"
                    )
        except (ValueError, ZeroDivisionError) as exc:
            if isinstance(exc, ParameterError):
                raise
            raise ParameterError(f"cannot parse flux {value!r}") from exc
    else:
        raise ParameterError(f"unsupported flux type {type(value).__name__}")
    # spectrum is periodic in the flux with period one
    return frac % 1


@dataclass(frozen=True)
class ModelParams:
    """All physical constants of the model.

    In the static problem energies are measured in units of ``alpha_mag``;
    in the dynamics energies and rates are in units of ``kappa`` and times in
    units of ``1/kappa``.
    """

    lam: float = 1.0
    omega: float = 1.0
    delta: float = 0.0
    kappa: float = 1.0
    flux: Fraction = field(default=Fraction(0))
    theta: float = 0.0
    alpha_mag: float = 1.0
    lattice_size: int = 4

    def __post_init__(self):
        object.__setattr__(self, "flux", parse_flux(self.flux))
        for name in ("lam", "omega", "delta", "kappa", "theta", "alpha_mag"):
            val = float(getattr(self, name))
            if not math.isfinite(val):
                raise ParameterError(f"{name} must be finite, got {val}")
            object.__setattr__(self, name, val)
        if self.lam < 0:
            raise ParameterError(f"lambda must be >= 0, got {self.lam}")
        if self.omega < 0:
            raise ParameterError(f"omega must be >= 0, got {self.omega}")
        if self.kappa <= 0:
            raise ParameterError(f"kappa must be > 0, got {self.kappa}")
        if self.alpha_mag < 0:
            raise ParameterError(f"alpha_mag must be >= 0, got {self.alpha_mag}")
        object.__setattr__(self, "theta", self.theta % (2 * math.pi))
        if int(self.lattice_size) != self.lattice_size or self.lattice_size < 1:
            raise ParameterError(f"lattice_size must be a positive integer, got {self.lattice_size}")
        object.__setattr__(self, "lattice_size", int(self.lattice_size))

    @property
    def p(self) -> int:
        return self.flux.numerator

    @property
    def q(self) -> int:
        return self.flux.denominator

    @property
    def phase(self) -> float:
        """Peierls phase per unit column index, 2*pi*flux."""
        return 2 * math.pi * float(self.flux)

    @property
    def fluct_rate(self) -> float:
        """The dissipative prefactor kappa / (delta**2 + kappa**2)."""
        return self.kappa / (self.delta**2 + self.kappa**2)

    def column_phases(self) -> np.ndarray:
        """``exp(i 2 pi m flux)`` for every column ``m`` of the lattice."""
        m = np.arange(self.lattice_size)
        return np.exp(1j * self.phase * m)

    def replace(self, **changes) -> "ModelParams":
        return replace(self, **changes)


class Site(NamedTuple):
    m: int
    n: int


def _check_site(m: int, n: int, L: int) -> None:
    if not (0 <= m < L and 0 <= n < L):
        raise IndexError(f"site ({m}, {n}) outside the {L}x{L} lattice")


def site_index(s: Site | tuple[int, int], L: int) -> int:
    """Flat index ``m*L + n`` of site ``s``."""
    m, n = s
    _check_site(m, n, L)
    return m * L + n


def site_from_index(k: int, L: int) -> Site:
    if not 0 <= k < L * L:
        raise IndexError(f"flat index {k} outside the {L}x{L} lattice")
    return Site(*divmod(k, L))


def vertex_v1(i: int, j: int, ip: int, jp: int, p: ModelParams) -> complex:
    """Vertex ``v1(i j, i' j')``: x-hop ``i' -> i = i'+1`` or y-hop with phase."""
    L = p.lattice_size
    _check_site(i, j, L)
    _check_site(ip, jp, L)
    val = 0j
    if i == ip + 1 and j == jp:
        val += p.lam
    if i == ip and j == jp + 1:
        val += p.omega * cmath.exp(1j * p.phase * i)
    return val


def vertex_v2(i: int, j: int, ip: int, jp: int, p: ModelParams) -> complex:
    """Vertex ``v2(i j, i' j')``, the Hermitian partner of :func:`vertex_v1`."""
    L = p.lattice_size
    _check_site(i, j, L)
    _check_site(ip, jp, L)
    val = 0j
    if i + 1 == ip and j == jp:
        val += p.lam
    if i == ip and j + 1 == jp:
        val += p.omega * cmath.exp(-1j * p.phase * i)
    return val


def vertex_matrix(p: ModelParams, which: int = 1) -> np.ndarray:
    """Dense ``L^2 x L^2`` matrix of ``v1`` (``which=1``) or ``v2``."""
    L = p.lattice_size
    V = np.zeros((L * L, L * L), dtype=complex)
    phases = p.column_phases()
    for i in range(L):
        for j in range(L):
            a = i * L + j
            if i + 1 < L:
                V[a + L, a] = p.lam
            if j + 1 < L:
                V[a + 1, a] = p.omega * phases[i]
    if which == 1:
        return V
    if which == 2:
        return V.conj().T
    raise ValueError("which must be 1 or 2")
