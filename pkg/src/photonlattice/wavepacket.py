"""Single-photon wave packets: construction, free propagation, translation,
and propagating fidelity.

A state holds the photon amplitude grid plus the emitter excitation
amplitude.  Free evolution is diagonal in momentum space; column-uniform
packets also admit the exact Bessel-kernel solution, kept as an independent
path.  The iterative window-stabilization procedure produces packets with a
dispersion-stable size and a carrier at the zero-curvature point of the band.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import jv

from .lattice import LatticeSpec, dispersion, to_momentum, to_position


class LatticeTooSmallError(RuntimeError):
    """Amplitude reached the lattice boundary during free evolution."""


class PacketShapeError(ValueError):
    """State does not have the shape required by the operation."""


class StabilizationError(RuntimeError):
    """Window stabilization ended below the fidelity threshold."""


EDGE_MARGIN = 3
EDGE_AMPLITUDE_LIMIT = 1e-6


@dataclass(frozen=True)
class SingleExcitationState:
    """Photon amplitudes on the lattice plus the emitter amplitude."""

    photon: np.ndarray
    atom: complex = 0.0 + 0.0j

    def norm(self) -> float:
        return float(
            np.sqrt(np.sum(np.abs(self.photon) ** 2) + abs(self.atom) ** 2)
        )

    def normalized(self) -> "SingleExcitationState":
        n = self.norm()
        if n == 0.0:
            raise ValueError("cannot normalize a zero state")
        return SingleExcitationState(self.photon / n, self.atom / n)


@dataclass(frozen=True)
class PacketWindow:
    """Support window of a prepared packet: center site and full extents."""

    center: tuple
    extent_x: int
    extent_y: int
    carrier: tuple

    def site_ranges(self):
        n0, m0 = self.center
        hx = self.extent_x // 2
        hy = self.extent_y // 2
        return (n0 - hx, n0 + hx), (m0 - hy, m0 + hy)


def check_edges(spec: LatticeSpec, state: SingleExcitationState) -> None:
    """Abort when weight reaches the outer site frame (periodic wrap hazard)."""
    a = np.abs(state.photon)
    frame = max(
        a[:EDGE_MARGIN, :].max(),
        a[-EDGE_MARGIN:, :].max(),
        a[:, :EDGE_MARGIN].max(),
        a[:, -EDGE_MARGIN:].max(),
    )
    if frame > EDGE_AMPLITUDE_LIMIT:
        raise LatticeTooSmallError(
            f"boundary amplitude {frame:.3e} exceeds {EDGE_AMPLITUDE_LIMIT:.0e}; "
            "enlarge the lattice"
        )


def line_packet(spec: LatticeSpec, n_c: int) -> SingleExcitationState:
    """Uniform single-photon column at n = n_c spanning all m."""
    if abs(n_c) > spec.half_extent_x:
        raise ValueError(f"column {n_c} outside lattice")
    grid = np.zeros(spec.shape, dtype=np.complex128)
    grid[n_c + spec.half_extent_x, :] = 1.0 / np.sqrt(spec.shape[1])
    return SingleExcitationState(grid)


def gaussian_packet(
    spec: LatticeSpec,
    center: tuple,
    widths: tuple,
    carrier: tuple,
) -> SingleExcitationState:
    """Normalized 2D Gaussian envelope with a plane-wave carrier."""
    s1, s2 = widths
    if s1 <= 0 or s2 <= 0:
        raise ValueError("widths must be positive")
    n0, m0 = center
    n = spec.n_values[:, None]
    m = spec.m_values[None, :]
    env = np.exp(-((n - n0) ** 2) / (2.0 * s1 ** 2) - ((m - m0) ** 2) / (2.0 * s2 ** 2))
    kx, ky = carrier
    grid = env * np.exp(1j * (kx * n + ky * m))
    return SingleExcitationState(grid.astype(np.complex128)).normalized()


def free_evolve_fft(
    state: SingleExcitationState,
    t: float,
    spec: LatticeSpec,
    edge_check: bool = True,
) -> SingleExcitationState:
    """exp(-i H0 t) on the photon part via the momentum representation."""
    if abs(state.atom) != 0.0:
        raise PacketShapeError("free evolution applies to photon-only states")
    kx, ky = spec.momentum_axes()
    phase = np.exp(-1j * dispersion(spec, kx[:, None], ky[None, :]) * t)
    out = SingleExcitationState(to_position(spec, to_momentum(spec, state.photon) * phase))
    if edge_check:
        check_edges(spec, out)
    return out


def _column_profile(state: SingleExcitationState, spec: LatticeSpec) -> np.ndarray:
    """x-profile of a column-uniform (y-independent) packet, or raise."""
    photon = state.photon
    ref = photon[:, :1]
    if not np.allclose(photon, np.broadcast_to(ref, photon.shape), atol=1e-12):
        raise PacketShapeError("state is not uniform along y")
    return ref[:, 0] * np.sqrt(spec.shape[1])


def _bessel_ring_kernel(sites: int, v_t: float) -> np.ndarray:
    """Propagation kernel i^j J_j(v*t) wrapped onto a periodic ring."""
    reach = int(abs(v_t) + 40.0 * max(abs(v_t), 1.0) ** (1.0 / 3.0) + 50)
    j = np.arange(-reach, reach + 1)
    vals = (1j) ** np.mod(j, 4) * jv(j, v_t)
    kernel = np.zeros(sites, dtype=np.complex128)
    np.add.at(kernel, np.mod(j, sites), vals)
    return kernel


def free_evolve_analytic(
    state: SingleExcitationState,
    t: float,
    spec: LatticeSpec,
) -> SingleExcitationState:
    """Exact Bessel-series evolution of a column-uniform packet.

    The ky = 0 sector contributes the global phase exp(-i(omega_l - 2*Jy)t);
    along x the amplitudes convolve with i^j J_j(2*Jx*t).
    """
    if abs(state.atom) != 0.0:
        raise PacketShapeError("free evolution applies to photon-only states")
    profile = _column_profile(state, spec)
    sites = spec.shape[0]
    kernel = _bessel_ring_kernel(sites, 2.0 * spec.j_x * t)
    evolved = np.fft.ifft(np.fft.fft(profile) * np.fft.fft(kernel))
    evolved *= np.exp(-1j * (spec.omega_l - 2.0 * spec.j_y) * t)
    grid = np.repeat(evolved[:, None], spec.shape[1], axis=1) / np.sqrt(spec.shape[1])
    return SingleExcitationState(grid)


def translate(
    state: SingleExcitationState,
    displacement: tuple,
    support_check: bool = True,
) -> SingleExcitationState:
    """Shift photon amplitudes by integer sites (dn, dm).

    With support_check, weight that would wrap around the boundary raises.
    """
    dn, dm = int(displacement[0]), int(displacement[1])
    photon = state.photon
    if support_check:
        wrapped = 0.0
        if dn > 0:
            wrapped += np.sum(np.abs(photon[-dn:, :]) ** 2)
        elif dn < 0:
            wrapped += np.sum(np.abs(photon[:-dn, :]) ** 2)
        if dm > 0:
            wrapped += np.sum(np.abs(photon[:, -dm:]) ** 2)
        elif dm < 0:
            wrapped += np.sum(np.abs(photon[:, :-dm]) ** 2)
        if wrapped > 1e-9:
            raise ValueError(
                f"translated support leaves the lattice (weight {wrapped:.3e})"
            )
    return SingleExcitationState(np.roll(photon, (dn, dm), axis=(0, 1)), state.atom)


def propagating_fidelity(
    evolved: SingleExcitationState,
    reference: SingleExcitationState,
    displacement: tuple,
) -> float:
    """PF = |<evolved | translate(reference, displacement)>|^2."""
    moved = translate(reference, displacement, support_check=False)
    ov = np.vdot(evolved.photon, moved.photon) + np.conj(evolved.atom) * moved.atom
    return float(abs(ov) ** 2)


def windowed_propagating_fidelity(
    evolved: SingleExcitationState,
    window_packet: SingleExcitationState,
    displacement: tuple,
) -> float:
    """Scattered-packet fidelity with an unnormalized window reference.

    PF = |<evolved | translate(w, d)>|^2 / <w|w>^2.
    """
    wn2 = np.sum(np.abs(window_packet.photon) ** 2)
    if wn2 <= 0.0:
        raise ValueError("window packet carries no weight")
    moved = translate(window_packet, displacement, support_check=False)
    ov = np.vdot(evolved.photon, moved.photon)
    return float(abs(ov) ** 2 / wn2 ** 2)


@dataclass(frozen=True)
class PreparedPacket:
    """Result of iterative window stabilization."""

    state: SingleExcitationState
    window: PacketWindow
    iterations: int
    fidelity: float


def _stabilize_profile_1d(
    ring: int,
    hop_phase_t,
    start_center: int,
    step_sites: int,
    width: int,
    max_iters: int,
):
    """Shared evolve/advance/truncate loop on a virtual 1D ring.

    hop_phase_t(k) gives the per-pass free-evolution phase for wavenumbers k.
    The loop stops when the next window would come within one window-width of
    the origin (the launch clearance for scattering off a center-sited
    coupler), or at max_iters.  Returns (profile, iterations, final_center).
    """
    half = width // 2
    k = 2.0 * np.pi * np.fft.fftfreq(ring)
    c = ring // 2
    psi = np.zeros(ring, dtype=np.complex128)
    psi[c] = 1.0
    center = start_center
    iters = 0
    clearance = -(width + half)
    while iters < max_iters and center + step_sites <= clearance:
        psi = np.fft.ifft(np.fft.fft(psi) * hop_phase_t(k))
        psi = np.roll(psi, -step_sites)
        window = np.zeros_like(psi)
        window[c - half : c + half + 1] = psi[c - half : c + half + 1]
        psi = window / np.linalg.norm(window)
        center += step_sites
        iters += 1
    return psi[c - half : c + half + 1], iters, center


def prepare_stable_packet(
    spec: LatticeSpec,
    n_c: int,
    step_time: float,
    width: int = None,
    threshold: float = 0.9,
    max_iters: int = 100,
) -> PreparedPacket:
    """Iteratively stabilize a line packet launched from virtual column n_c.

    Each pass evolves freely for step_time, advances the truncation window by
    the traveled distance 2*Jx*step_time (which must be an integer number of
    sites), and renormalizes.  Iterations proceed on a virtual ring (so n_c
    may lie far outside the physical lattice) and stop once the next window
    would encroach within one window-width of the origin; the result is then
    embedded at the final center, which must fit inside the lattice.
    """
    v_x = 2.0 * spec.j_x
    step_sites = v_x * step_time
    if abs(step_sites - round(step_sites)) > 1e-9:
        raise ValueError("step_time must advance an integer number of sites")
    step_sites = int(round(step_sites))
    if step_sites <= 0:
        raise ValueError("step_time must be positive")
    if width is None:
        width = step_sites
    if n_c + step_sites > -(width + width // 2):
        raise ValueError("start column too close to the lattice center")

    ring = 8
    while ring < 8 * (width + step_sites) + 512:
        ring *= 2

    profile, iters, n_f = _stabilize_profile_1d(
        ring,
        lambda k: np.exp(1j * np.cos(k) * v_x * step_time),
        n_c,
        step_sites,
        width,
        max_iters,
    )
    half = width // 2
    if abs(n_f) + half > spec.half_extent_x:
        raise ValueError(f"final window at {n_f} does not fit inside the lattice")

    grid = np.zeros(spec.shape, dtype=np.complex128)
    col = slice(n_f - half + spec.half_extent_x, n_f + half + spec.half_extent_x + 1)
    grid[col, :] = profile[:, None] / np.sqrt(spec.shape[1])
    state = SingleExcitationState(grid).normalized()

    trial = free_evolve_fft(state, width / v_x, spec)
    pf = propagating_fidelity(trial, state, (width, 0))
    if pf < threshold:
        raise StabilizationError(
            f"stabilization ended with fidelity {pf:.4f} < threshold {threshold}"
        )
    window = PacketWindow((n_f, 0), width, spec.shape[1], (np.pi / 2.0, 0.0))
    return PreparedPacket(state, window, iters, pf)


def _pf_displacement(vx: float, vy: float, distance: int) -> tuple:
    """Integer displacement covering about ``distance`` sites along x.

    Prefers the smallest distance >= the request whose y component is also
    (near-)integer, so the site-shift comparison stays exact.
    """
    best = None
    for d in range(distance, distance + 5):
        t = d / vx
        err = abs(vy * t - round(vy * t))
        if best is None or err < best[2] - 1e-12:
            best = (d, int(round(vy * t)), err)
        if err < 1e-9:
            break
    d, dy, _ = best
    return (d, dy), d / vx


def diagonal_packet(
    spec: LatticeSpec,
    start: tuple,
    step_time: float,
    width: tuple = None,
    threshold: float = 0.85,
    max_iters: int = 100,
) -> PreparedPacket:
    """Stabilized packet moving with group velocity (2*Jx, 2*Jy).

    Same iteration as prepare_stable_packet but on a virtual 2D patch, with
    the window advancing by (2*Jx, 2*Jy)*step_time per pass; the carrier ends
    up at (pi/2, pi/2).  Both displacement components must be integers.
    """
    v_x = 2.0 * spec.j_x
    v_y = 2.0 * spec.j_y
    dx = v_x * step_time
    dy = v_y * step_time
    if abs(dx - round(dx)) > 1e-9 or abs(dy - round(dy)) > 1e-9:
        raise ValueError("step_time must advance an integer number of sites on both axes")
    dx, dy = int(round(dx)), int(round(dy))
    if dx <= 0:
        raise ValueError("step_time must be positive")
    if width is None:
        width = (dx + dy, dx + dy)
    wx, wy = width
    hx, hy = wx // 2, wy // 2
    n_c, m_c = start
    if n_c + dx > -(wx + hx):
        raise ValueError("start too close to the lattice center")

    patch = 8
    while patch < 4 * (max(wx, wy) + dx + dy) + 128:
        patch *= 2
    kp = 2.0 * np.pi * np.fft.fftfreq(patch)
    phase = np.exp(
        1j * (2.0 * spec.j_x * np.cos(kp)[:, None] + 2.0 * spec.j_y * np.cos(kp)[None, :])
        * step_time
    )
    c = patch // 2
    psi = np.zeros((patch, patch), dtype=np.complex128)
    psi[c, c] = 1.0
    center_x, center_y = n_c, m_c
    iters = 0
    clearance = -(wx + hx)
    while iters < max_iters and center_x + dx <= clearance:
        psi = np.fft.ifft2(np.fft.fft2(psi) * phase)
        psi = np.roll(psi, (-dx, -dy), axis=(0, 1))
        window = np.zeros_like(psi)
        window[c - hx : c + hx + 1, c - hy : c + hy + 1] = psi[
            c - hx : c + hx + 1, c - hy : c + hy + 1
        ]
        psi = window / np.linalg.norm(window)
        center_x += dx
        center_y += dy
        iters += 1

    block = psi[c - hx : c + hx + 1, c - hy : c + hy + 1]
    n_f, m_f = center_x, center_y
    if abs(n_f) + hx > spec.half_extent_x or abs(m_f) + hy > spec.half_extent_y:
        raise ValueError("final window does not fit inside the lattice")
    grid = np.zeros(spec.shape, dtype=np.complex128)
    grid[
        n_f - hx + spec.half_extent_x : n_f + hx + spec.half_extent_x + 1,
        m_f - hy + spec.half_extent_y : m_f + hy + spec.half_extent_y + 1,
    ] = block
    state = SingleExcitationState(grid).normalized()

    (disp, t_pf) = _pf_displacement(v_x, v_y, wx)
    trial = free_evolve_fft(state, t_pf, spec)
    pf = propagating_fidelity(trial, state, disp)
    if pf < threshold:
        raise StabilizationError(
            f"stabilization ended with fidelity {pf:.4f} < threshold {threshold}"
        )
    window = PacketWindow((n_f, m_f), wx, wy, (np.pi / 2.0, np.pi / 2.0))
    return PreparedPacket(state, window, iters, pf)


def center_of_mass(state: SingleExcitationState, spec: LatticeSpec) -> tuple:
    w = np.abs(state.photon) ** 2
    total = w.sum()
    n = float((w.sum(axis=1) @ spec.n_values) / total)
    m = float((w.sum(axis=0) @ spec.m_values) / total)
    return n, m
