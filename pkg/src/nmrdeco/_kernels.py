"""Hot loops for density-matrix evolution.

Every kernel exists twice: a numba ``@njit`` version and a vectorised numpy
version with the same signature. The numba path is used unless numba is
missing or ``NMRDECO_DISABLE_NUMBA`` is set to a non-empty value other than
``0``. ``benchmarks/bench_kernels.py`` times both.

Indexing: spin ``k`` (1-based) is the ``k``-th most significant bit of a
basis index, and bit value 0 means spin up.
"""

import os

import numpy as np

__all__ = [
    "BACKEND",
    "apply_local",
    "apply_phases",
    "apply_permutation",
    "partial_trace",
    "numpy_kernels",
    "numba_kernels",
]


def _disabled():
    flag = os.environ.get("NMRDECO_DISABLE_NUMBA", "")
    return flag not in ("", "0")


# ---------------------------------------------------------------------------
# numpy reference path
# ---------------------------------------------------------------------------


def _np_apply_local(rho, u, k, n):
    left = 1 << (k - 1)
    right = 1 << (n - k)
    t = rho.reshape(left, 2, right, left, 2, right)
    t = np.einsum("ab,ibjklm->iajklm", u, t)
    t = np.einsum("lc,iajkcm->iajklm", u.conj(), t)
    return np.ascontiguousarray(t.reshape(rho.shape))


def _np_apply_phases(rho, phases):
    return rho * phases[:, None] * phases.conj()[None, :]


def _np_apply_permutation(rho, perm):
    return np.ascontiguousarray(rho[np.ix_(perm, perm)])


def _np_partial_trace(rho, keep, n):
    # keep: sorted 0-based spin positions
    traced = [i for i in range(n) if i not in set(keep)]
    t = rho.reshape([2] * (2 * n))
    row = list(range(n))
    col = list(range(n, 2 * n))
    for i in traced:
        col[i] = row[i]
    out_idx = [row[i] for i in keep] + [col[i] for i in keep]
    dk = 1 << len(keep)
    return np.einsum(t, row + col, out_idx).reshape(dk, dk)


# ---------------------------------------------------------------------------
# numba path
# ---------------------------------------------------------------------------

try:
    import numba as _nb
except ImportError:  # pragma: no cover - numba is a declared dependency
    _nb = None


if _nb is not None:

    @_nb.njit(cache=True)
    def _nb_apply_local(rho, u, k, n):
        d = rho.shape[0]
        stride = 1 << (n - k)
        out = rho.copy()
        u00, u01, u10, u11 = u[0, 0], u[0, 1], u[1, 0], u[1, 1]
        for i0 in range(d):
            if i0 & stride:
                continue
            i1 = i0 | stride
            for j in range(d):
                a = out[i0, j]
                b = out[i1, j]
                out[i0, j] = u00 * a + u01 * b
                out[i1, j] = u10 * a + u11 * b
        c00, c01, c10, c11 = np.conj(u00), np.conj(u01), np.conj(u10), np.conj(u11)
        for i in range(d):
            for j0 in range(d):
                if j0 & stride:
                    continue
                j1 = j0 | stride
                a = out[i, j0]
                b = out[i, j1]
                out[i, j0] = a * c00 + b * c01
                out[i, j1] = a * c10 + b * c11
        return out

    @_nb.njit(cache=True)
    def _nb_apply_phases(rho, phases):
        d = rho.shape[0]
        out = np.empty_like(rho)
        for i in range(d):
            pi = phases[i]
            for j in range(d):
                out[i, j] = rho[i, j] * pi * np.conj(phases[j])
        return out

    @_nb.njit(cache=True)
    def _nb_apply_permutation(rho, perm):
        d = rho.shape[0]
        out = np.empty_like(rho)
        for i in range(d):
            pi = perm[i]
            for j in range(d):
                out[i, j] = rho[pi, perm[j]]
        return out

    @_nb.njit(cache=True)
    def _nb_partial_trace_keep(rho, keep, n):
        nk = keep.shape[0]
        nt = n - nk
        is_kept = np.zeros(n, dtype=np.bool_)
        for i in range(nk):
            is_kept[keep[i]] = True
        d = 1 << n
        dk = 1 << nk
        kept_of = np.empty(d, dtype=np.int64)
        traced_of = np.empty(d, dtype=np.int64)
        full_of = np.empty((dk, 1 << nt), dtype=np.int64)
        for a in range(d):
            ka = 0
            ta = 0
            for s in range(n):
                bit = (a >> (n - 1 - s)) & 1
                if is_kept[s]:
                    ka = (ka << 1) | bit
                else:
                    ta = (ta << 1) | bit
            kept_of[a] = ka
            traced_of[a] = ta
            full_of[ka, ta] = a
        out = np.zeros((dk, dk), dtype=rho.dtype)
        for a in range(d):
            t = traced_of[a]
            ka = kept_of[a]
            for kb in range(dk):
                out[ka, kb] += rho[a, full_of[kb, t]]
        return out

    def _nb_partial_trace(rho, keep, n):
        return _nb_partial_trace_keep(rho, np.asarray(keep, dtype=np.int64), n)


class _Kernels:
    def __init__(self, name, local, phases, permutation, ptrace):
        self.name = name
        self.apply_local = local
        self.apply_phases = phases
        self.apply_permutation = permutation
        self.partial_trace = ptrace


numpy_kernels = _Kernels(
    "numpy", _np_apply_local, _np_apply_phases, _np_apply_permutation, _np_partial_trace
)

if _nb is not None:
    numba_kernels = _Kernels(
        "numba", _nb_apply_local, _nb_apply_phases, _nb_apply_permutation, _nb_partial_trace
    )
else:  # pragma: no cover
    numba_kernels = None

_active = numpy_kernels if (numba_kernels is None or _disabled()) else numba_kernels

BACKEND = _active.name


def apply_local(rho, u, k, n):
    """``U_k rho U_k^dagger`` for a 2x2 ``u`` acting on spin ``k`` (1-based)."""
    return _active.apply_local(rho, u, k, n)


def apply_phases(rho, phases):
    """``D rho D^dagger`` for ``D = diag(phases)``."""
    return _active.apply_phases(rho, phases)


def apply_permutation(rho, perm):
    """``P rho P^T`` where ``P`` sends basis state ``perm[i]`` to ``i``."""
    return _active.apply_permutation(rho, np.asarray(perm, dtype=np.int64))


def partial_trace(rho, keep, n):
    """Reduce ``rho`` to the sorted 0-based spin positions ``keep``."""
    return _active.partial_trace(rho, list(keep), n)
