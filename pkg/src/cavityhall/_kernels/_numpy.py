"""Pure-numpy right-hand-side kernels (fallback when the extension is absent).

The density matrix is an ``(L*L, L*L)`` complex array indexed by flat site
``a = m*L + n``; entry ``[a, b]`` holds ``<c^dag_a c_b>``. The vertex
matrices only connect nearest neighbours, so every vertex contraction is a
weighted shift of rows or columns.
"""

import numpy as np

COHERENT = 1
DISSIPATIVE = 2
FLUCTUATION = 4


def _l1(r, lam, om, ph):
    # v1^T rho: rows pulled from a+x and a+y
    out = np.zeros_like(r)
    out[:-1] += lam * r[1:]
    out[:, :-1] += om * ph[:, None, None, None] * r[:, 1:]
    return out


def _l2(r, lam, om, ph):
    # v2^T rho: rows pulled from a-x and a-y
    out = np.zeros_like(r)
    out[1:] += lam * r[:-1]
    out[:, 1:] += om * ph.conj()[:, None, None, None] * r[:, :-1]
    return out


def _r1(r, lam, om, ph):
    # rho v1^T: columns pulled from b-x and b-y
    out = np.zeros_like(r)
    out[:, :, 1:, :] += lam * r[:, :, :-1, :]
    out[:, :, :, 1:] += om * ph[:, None] * r[:, :, :, :-1]
    return out


def _r2(r, lam, om, ph):
    # rho v2^T: columns pulled from b+x and b+y
    out = np.zeros_like(r)
    out[:, :, :-1, :] += lam * r[:, :, 1:, :]
    out[:, :, :, :-1] += om * ph.conj()[:, None] * r[:, :, :, 1:]
    return out


def density_rhs(rho, alpha, L, lam, om, phases, K, parts=7):
    n = L * L
    r = rho.reshape(L, L, L, L)
    out = np.zeros((L, L, L, L), dtype=complex)
    a1 = _l1(r, lam, om, phases)
    if parts & COHERENT:
        ac = np.conj(alpha)
        out += -1j * (ac * a1 + alpha * _l2(r, lam, om, phases))
        out += 1j * (ac * _r1(r, lam, om, phases) + alpha * _r2(r, lam, om, phases))
    if parts & DISSIPATIVE:
        out -= K * (_l2(a1, lam, om, phases) + _r1(_r2(r, lam, om, phases), lam, om, phases))
        out += 2 * K * _r2(a1, lam, om, phases)
    if parts & FLUCTUATION:
        x = _r1(_l2(r, lam, om, phases), lam, om, phases) - _r2(a1, lam, om, phases)
        xm = x.reshape(n, n)
        out += K * (rho @ xm + xm @ rho).reshape(L, L, L, L)
    return out.reshape(n, n)


def cavity_drive(rho, L, lam, om, phases):
    """``sum_ab v1(a, b) rho[a, b]`` over in-lattice bonds."""
    r = rho.reshape(L, L, L, L)
    ii = np.arange(L)
    # x bonds: rho[(i+1, j), (i, j)]
    sx = r[ii[1:, None], ii[None, :], ii[:-1, None], ii[None, :]].sum()
    # y bonds: rho[(i, j+1), (i, j)] weighted by the column phase
    sy = (phases[:, None] * r[ii[:, None], ii[None, 1:], ii[:, None], ii[None, :-1]]).sum()
    return complex(lam * sx + om * sy)
