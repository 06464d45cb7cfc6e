"""Hot numeric kernels: periodic nearest-neighbor hop stencil and the fused
Chebyshev recurrence step.

Numba-compiled versions are used by default.  Set the environment variable
``PHOTONLATTICE_NO_NUMBA=1`` before import to force the pure-NumPy fallback
(the two paths are numerically identical; see benchmarks/bench_kernels.py).
"""

import os

import numpy as np

USE_NUMBA = os.environ.get("PHOTONLATTICE_NO_NUMBA", "0") not in ("1", "true", "yes")

if USE_NUMBA:
    try:
        from numba import njit
    except ImportError:  # pragma: no cover - numba is a hard dependency
        USE_NUMBA = False


def _hop_apply_np(psi, jx, jy, wl, out):
    """out = wl*psi - jx*(x-neighbors) - jy*(y-neighbors), periodic."""
    np.multiply(psi, wl, out=out)
    out -= jx * (np.roll(psi, 1, axis=0) + np.roll(psi, -1, axis=0))
    out -= jy * (np.roll(psi, 1, axis=1) + np.roll(psi, -1, axis=1))
    return out


def _cheb_step_np(cur, prev, jx, jy, wl, shift, inv_half, out):
    """out = 2*((H0*cur - shift*cur)*inv_half) - prev for the lattice part."""
    _hop_apply_np(cur, jx, jy, wl, out)
    out -= shift * cur
    out *= 2.0 * inv_half
    out -= prev
    return out


if USE_NUMBA:

    @njit(cache=True)
    def _hop_apply_nb(psi, jx, jy, wl, out):  # pragma: no cover - jitted
        nx, ny = psi.shape
        for i in range(nx):
            ip = i + 1 if i + 1 < nx else 0
            im = i - 1 if i > 0 else nx - 1
            for j in range(ny):
                jp = j + 1 if j + 1 < ny else 0
                jm = j - 1 if j > 0 else ny - 1
                out[i, j] = (
                    wl * psi[i, j]
                    - jx * (psi[ip, j] + psi[im, j])
                    - jy * (psi[i, jp] + psi[i, jm])
                )
        return out

    @njit(cache=True)
    def _cheb_step_nb(cur, prev, jx, jy, wl, shift, inv_half, out):  # pragma: no cover
        nx, ny = cur.shape
        two_inv = 2.0 * inv_half
        for i in range(nx):
            ip = i + 1 if i + 1 < nx else 0
            im = i - 1 if i > 0 else nx - 1
            for j in range(ny):
                jp = j + 1 if j + 1 < ny else 0
                jm = j - 1 if j > 0 else ny - 1
                h = (
                    wl * cur[i, j]
                    - jx * (cur[ip, j] + cur[im, j])
                    - jy * (cur[i, jp] + cur[i, jm])
                )
                out[i, j] = two_inv * (h - shift * cur[i, j]) - prev[i, j]
        return out

    hop_apply = _hop_apply_nb
    cheb_step = _cheb_step_nb
else:
    hop_apply = _hop_apply_np
    cheb_step = _cheb_step_np
