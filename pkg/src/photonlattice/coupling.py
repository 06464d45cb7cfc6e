"""Emitter-lattice coupling configurations and the momentum-space coupling
factor.

A configuration is a set of lattice points (n1, m1) with complex weights; the
normalized coupling factor is
    G(k) = (g / Lam) * sum_p lambda_p * exp(i*(kx*n1 + ky*m1)),
with Lam = sum_p |lambda_p| over all points.  Mirror-symmetric line
configurations on the y-axis are stored as the published ratio lists, whose
first entry is the full center-site weight.
"""

from dataclasses import dataclass

import numpy as np

from .lattice import LatticeSpec


class DegenerateCouplingError(ValueError):
    """All coupling weights vanish (Lam = 0)."""


@dataclass(frozen=True)
class CouplingConfig:
    """Emitter at frequency omega_a attached with overall strength g at
    points[(n1, m1, weight), ...]."""

    omega_a: float
    g: float
    points: tuple

    def __post_init__(self):
        if not self.points:
            raise ValueError("coupling needs at least one point")
        sites = [(int(n), int(m)) for n, m, _ in self.points]
        if len(set(sites)) != len(sites):
            raise ValueError("coupling points must be distinct")
        if not self.lambda_norm > 0.0:
            raise DegenerateCouplingError("sum of |weights| must be positive")

    @property
    def lambda_norm(self) -> float:
        return float(sum(abs(complex(w)) for _, _, w in self.points))

    @property
    def site_array(self) -> np.ndarray:
        return np.array([(n, m) for n, m, _ in self.points], dtype=np.int64)

    @property
    def weight_array(self) -> np.ndarray:
        return np.array([w for _, _, w in self.points], dtype=np.complex128)

    def validate_against(self, spec: LatticeSpec) -> None:
        n, m = self.site_array.T
        if np.any(np.abs(n) > spec.half_extent_x) or np.any(np.abs(m) > spec.half_extent_y):
            raise ValueError("coupling points fall outside the lattice")

    def rescaled(self, factor: complex) -> "CouplingConfig":
        return CouplingConfig(
            self.omega_a,
            self.g,
            tuple((n, m, w * factor) for n, m, w in self.points),
        )


def small_atom(omega_a: float, g: float) -> CouplingConfig:
    """Point emitter attached at the single site (0, 0)."""
    return CouplingConfig(omega_a, g, ((0, 0, 1.0 + 0.0j),))


@dataclass(frozen=True)
class SymmetricLineConfig:
    """Mirror-symmetric line of coupling points (0, 0), (0, +-1), ..., (0, +-M1).

    weights[0] is the full weight on the center site; weights[j] (j >= 1)
    applies to both (0, +j) and (0, -j).  This matches the published ratio
    convention where lists start with the doubled center entry.
    """

    omega_a: float
    g: float
    weights: tuple

    def __post_init__(self):
        if not self.weights:
            raise ValueError("weights must be non-empty")

    @property
    def half_count(self) -> int:
        return len(self.weights) - 1

    @property
    def half_weights(self) -> np.ndarray:
        """Cosine-series coefficients: [w0/2, w1, ..., wM1]."""
        w = np.asarray(self.weights, dtype=float)
        out = w.copy()
        out[0] = 0.5 * w[0]
        return out


def expand(symmetric: SymmetricLineConfig) -> CouplingConfig:
    """Expanded point set of a symmetric line configuration (2*M1+1 points)."""
    pts = [(0, 0, complex(symmetric.weights[0]))]
    for j, w in enumerate(symmetric.weights[1:], start=1):
        pts.append((0, j, complex(w)))
        pts.append((0, -j, complex(w)))
    return CouplingConfig(symmetric.omega_a, symmetric.g, tuple(pts))


def grid_config(omega_a: float, g: float, table: np.ndarray) -> CouplingConfig:
    """Coupling over an odd x odd block of sites centered on (0, 0).

    table[i, j] is the complex weight at (n1, m1) = (j - cols//2, i - rows//2),
    i.e. rows run over m1 and columns over n1.
    """
    table = np.asarray(table, dtype=np.complex128)
    if table.ndim != 2 or table.shape[0] % 2 == 0 or table.shape[1] % 2 == 0:
        raise ValueError("coupling table must be odd x odd")
    rows, cols = table.shape
    pts = []
    for i in range(rows):
        for j in range(cols):
            pts.append((j - cols // 2, i - rows // 2, complex(table[i, j])))
    return CouplingConfig(omega_a, g, tuple(pts))


def coupling_factor(config: CouplingConfig, kx, ky):
    """G(k); broadcasts over array-valued kx, ky."""
    kx = np.asarray(kx, dtype=float)
    ky = np.asarray(ky, dtype=float)
    sites = config.site_array
    weights = config.weight_array
    phases = np.exp(
        1j * (np.multiply.outer(kx, sites[:, 0]) + np.multiply.outer(ky, sites[:, 1]))
    )
    out = phases @ weights * (config.g / config.lambda_norm)
    return out if out.shape else complex(out)


def line_coupling_factor(symmetric: SymmetricLineConfig, ky):
    """Reduced cosine form of G for symmetric line configurations.

    G(k) = (2g / Lam) * sum_j half_weights[j] * cos(j*ky); independent of kx.
    """
    half = symmetric.half_weights
    lam = 2.0 * np.abs(half).sum()
    if not lam > 0.0:
        raise DegenerateCouplingError("sum of |weights| must be positive")
    ky = np.asarray(ky, dtype=float)
    orders = np.arange(half.size)
    series = np.cos(np.multiply.outer(ky, orders)) @ half
    out = 2.0 * symmetric.g / lam * series
    return out if out.shape else float(out)


def save_coupling_table(path, config: CouplingConfig) -> None:
    """Plain-text table: one line per point with n1, m1, Re(w), Im(w)."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write("# coupling table: n1 m1 re_weight im_weight\n")
        fh.write(f"# omega_a = {config.omega_a!r}\n")
        fh.write(f"# g = {config.g!r}\n")
        for n, m, w in config.points:
            w = complex(w)
            fh.write(f"{n} {m} {w.real!r} {w.imag!r}\n")


def load_coupling_table(path) -> CouplingConfig:
    omega_a = 0.0
    g = 0.0
    pts = []
    with open(path, "r", encoding="ascii") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("omega_a"):
                    omega_a = float(body.split("=")[1])
                elif body.startswith("g"):
                    g = float(body.split("=")[1])
                continue
            n, m, re, im = line.split()
            pts.append((int(n), int(m), complex(float(re), float(im))))
    return CouplingConfig(omega_a, g, tuple(pts))
