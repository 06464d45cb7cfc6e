"""2D coupled-resonator lattice: dispersion, momentum transforms, and
constant-energy contours.

Sites are labeled (n, m) with n in [-N, N], m in [-M, M]; arrays are indexed
[n + N, m + M].  The band is omega(k) = omega_l - 2*Jx*cos(kx) - 2*Jy*cos(ky)
under periodic boundary conditions.  Momentum grids are the exact DFT modes
k_j = 2*pi*j/(2N+1), j = -N..N, returned in ascending order; the listing of
wavenumbers with both endpoints +-pi is over-complete by one mode per axis,
and the transforms here use the unitary (collapsed) grid.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np


class OutOfBandError(ValueError):
    """Requested energy lies outside the open photonic band."""


class EmptyShellError(ValueError):
    """No momentum satisfies omega(k) = E at the requested energy."""


class GridMismatchError(ValueError):
    """Array shape does not match the lattice grid."""


@dataclass(frozen=True)
class LatticeSpec:
    """Geometry and energetics of the resonator array.

    half_extent_x/y are N and M (site count per axis is 2N+1, 2M+1);
    omega_l is the bare resonator frequency, j_x/j_y the hopping strengths.
    """

    half_extent_x: int
    half_extent_y: int
    omega_l: float
    j_x: float
    j_y: float

    def __post_init__(self):
        if self.half_extent_x < 1 or self.half_extent_y < 1:
            raise ValueError("half extents must be >= 1")
        if not self.j_x > 0.0:
            raise ValueError("j_x must be positive")
        if self.j_y < 0.0:
            raise ValueError("j_y must be non-negative")

    @property
    def shape(self) -> tuple:
        return (2 * self.half_extent_x + 1, 2 * self.half_extent_y + 1)

    @property
    def num_sites(self) -> int:
        nx, ny = self.shape
        return nx * ny

    @property
    def n_values(self) -> np.ndarray:
        return np.arange(-self.half_extent_x, self.half_extent_x + 1)

    @property
    def m_values(self) -> np.ndarray:
        return np.arange(-self.half_extent_y, self.half_extent_y + 1)

    @property
    def band_min(self) -> float:
        return self.omega_l - 2.0 * self.j_x - 2.0 * self.j_y

    @property
    def band_max(self) -> float:
        return self.omega_l + 2.0 * self.j_x + 2.0 * self.j_y

    @property
    def bandwidth(self) -> float:
        return self.band_max - self.band_min

    def momentum_axes(self) -> tuple:
        """DFT momentum values (ascending) along x and y."""
        nx, ny = self.shape
        kx = 2.0 * np.pi * np.fft.fftshift(np.fft.fftfreq(nx))
        ky = 2.0 * np.pi * np.fft.fftshift(np.fft.fftfreq(ny))
        return kx, ky


def dispersion(spec: LatticeSpec, kx, ky):
    """Band energy omega(k); broadcasts over array-valued kx, ky."""
    return spec.omega_l - 2.0 * spec.j_x * np.cos(kx) - 2.0 * spec.j_y * np.cos(ky)


def group_velocity(spec: LatticeSpec, kx, ky):
    """Gradient of the band, (2*Jx*sin kx, 2*Jy*sin ky), in sites per time."""
    return 2.0 * spec.j_x * np.sin(kx), 2.0 * spec.j_y * np.sin(ky)


def _center_phases(spec: LatticeSpec) -> tuple:
    # DFT is taken over array indices; these phases re-reference it to the
    # site origin (n, m) = (0, 0).
    nx, ny = spec.shape
    kx = 2.0 * np.pi * np.fft.fftfreq(nx)
    ky = 2.0 * np.pi * np.fft.fftfreq(ny)
    return (
        np.exp(1j * kx * spec.half_extent_x),
        np.exp(1j * ky * spec.half_extent_y),
    )


def to_momentum(spec: LatticeSpec, psi: np.ndarray) -> np.ndarray:
    """Unitary transform of site amplitudes to momentum amplitudes.

    Returns the grid ordered by ascending (kx, ky) as in momentum_axes().
    """
    if psi.shape != spec.shape:
        raise GridMismatchError(f"expected {spec.shape}, got {psi.shape}")
    px, py = _center_phases(spec)
    out = np.fft.fft2(psi) / np.sqrt(spec.num_sites)
    out *= px[:, None]
    out *= py[None, :]
    return np.fft.fftshift(out)


def to_position(spec: LatticeSpec, phi: np.ndarray) -> np.ndarray:
    """Inverse of to_momentum."""
    if phi.shape != spec.shape:
        raise GridMismatchError(f"expected {spec.shape}, got {phi.shape}")
    px, py = _center_phases(spec)
    work = np.fft.ifftshift(phi)
    work = work / px[:, None]
    work = work / py[None, :]
    return np.fft.ifft2(work) * np.sqrt(spec.num_sites)


def admissible_ky_intervals(spec: LatticeSpec, energy: float) -> list:
    """ky intervals within [0, pi] where the shell omega(k) = energy exists.

    The contour is parametrized by ky through
    cos(kx) = (omega_l - E - 2*Jy*cos(ky)) / (2*Jx), valid where |cos kx| <= 1.
    Intervals for ky < 0 follow by mirror symmetry.
    """
    if not (spec.band_min < energy < spec.band_max):
        raise OutOfBandError(
            f"energy {energy} outside open band ({spec.band_min}, {spec.band_max})"
        )
    if spec.j_y == 0.0:
        c = (spec.omega_l - energy) / (2.0 * spec.j_x)
        return [(0.0, np.pi)] if abs(c) <= 1.0 else []
    # |C(ky)| <= 1  <=>  cos(ky) in [u_lo, u_hi]
    u_lo = (spec.omega_l - energy - 2.0 * spec.j_x) / (2.0 * spec.j_y)
    u_hi = (spec.omega_l - energy + 2.0 * spec.j_x) / (2.0 * spec.j_y)
    lo = max(u_lo, -1.0)
    hi = min(u_hi, 1.0)
    if lo > hi:
        return []
    a = float(np.arccos(hi))   # smallest admissible ky
    b = float(np.arccos(lo))   # largest admissible ky
    if b <= a:
        return []
    return [(a, b)]


@dataclass(frozen=True)
class EnergyShell:
    """Discretized constant-energy contour.

    Samples are ordered by branch (kx >= 0 first, then kx <= 0), each with
    ascending ky over [-pi, pi].  dl is the arc-length element carried by each
    sample; grad_norm is |grad omega| there.
    """

    energy: float
    kx: np.ndarray
    ky: np.ndarray
    grad_norm: np.ndarray
    dl: np.ndarray

    def __len__(self) -> int:
        return self.kx.size

    @property
    def arc_length(self) -> float:
        return float(self.dl.sum())


def energy_shell(
    spec: LatticeSpec,
    energy: float,
    samples_per_branch: int = 2048,
    shell_tolerance: float = None,
) -> EnergyShell:
    """Extract the contour omega(k) = energy, parametrized analytically by ky.

    Each branch (sign of kx) carries samples_per_branch midpoint samples over
    the admissible ky set (both signs of ky).  Raises OutOfBandError or
    EmptyShellError when no contour exists.
    """
    intervals = admissible_ky_intervals(spec, energy)
    if shell_tolerance is None:
        shell_tolerance = 1e-9 * spec.bandwidth
    if not intervals:
        raise EmptyShellError(f"no shell at energy {energy}")
    # mirror to ky < 0 and sample midpoints per interval
    full = [(-b, -a) for (a, b) in reversed(intervals) if b > 0] + [
        (a, b) for (a, b) in intervals
    ]
    total = sum(b - a for a, b in full)
    ky_parts = []
    dky_parts = []
    for a, b in full:
        n = max(1, int(round(samples_per_branch * (b - a) / total)))
        edges = np.linspace(a, b, n + 1)
        ky_parts.append(0.5 * (edges[:-1] + edges[1:]))
        dky_parts.append(np.full(n, (b - a) / n))
    ky = np.concatenate(ky_parts)
    dky = np.concatenate(dky_parts)

    cosv = (spec.omega_l - energy - 2.0 * spec.j_y * np.cos(ky)) / (2.0 * spec.j_x)
    cosv = np.clip(cosv, -1.0, 1.0)
    kx = np.arccos(cosv)
    vx = 2.0 * spec.j_x * np.sin(kx)
    vy = 2.0 * spec.j_y * np.sin(ky)
    grad = np.hypot(vx, vy)
    keep = vx > 1e-12 * spec.j_x
    if not np.any(keep):
        raise EmptyShellError(f"shell degenerate at energy {energy}")
    ky, dky, kx, vx, grad = (a[keep] for a in (ky, dky, kx, vx, grad))
    dl = grad / vx * dky

    shell = EnergyShell(
        energy=float(energy),
        kx=np.concatenate([kx, -kx]),
        ky=np.concatenate([ky, ky]),
        grad_norm=np.concatenate([grad, grad]),
        dl=np.concatenate([dl, dl]),
    )
    check = dispersion(spec, shell.kx, shell.ky)
    if np.max(np.abs(check - energy)) > shell_tolerance:
        raise EmptyShellError("shell samples violate the energy tolerance")
    return shell


@lru_cache(maxsize=128)
def cached_energy_shell(spec: LatticeSpec, energy: float, samples_per_branch: int = 2048):
    return energy_shell(spec, energy, samples_per_branch)
