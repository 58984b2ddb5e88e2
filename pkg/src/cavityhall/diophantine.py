"""Gap labels from the Diophantine equation ``r = s*q + t*p``."""

from __future__ import annotations

import math


class AmbiguousLabelError(ValueError):
    pass


def diophantine_label(p: int, q: int, r: int) -> int:
    """Return ``t`` solving ``r = s*q + t*p`` with ``|t| <= q/2``.

    ``r`` is the number of filled magnetic subbands below the gap
    (``1 <= r <= q-1``). For even ``q`` the middle gap ``r = q/2`` admits
    ``t = +q/2`` and ``t = -q/2``; that case raises.
    """
    if q < 1 or math.gcd(p, q) != 1:
        raise ValueError(f"flux {p}/{q} is not a reduced fraction")
    if not 0 < r < q:
        raise ValueError(f"gap index r={r} outside 1..{q - 1}")
    sols = [t for t in range(-(q // 2), q // 2 + 1) if (r - t * p) % q == 0]
    if len(sols) != 1:
        raise AmbiguousLabelError(f"gap r={r} of flux {p}/{q} has labels {sols}")
    return sols[0]


def diophantine_labels(p: int, q: int) -> dict[int, int]:
    """Labels for every unambiguous gap ``r = 1..q-1``."""
    out = {}
    for r in range(1, q):
        try:
            out[r] = diophantine_label(p, q, r)
        except AmbiguousLabelError:
            continue
    return out
