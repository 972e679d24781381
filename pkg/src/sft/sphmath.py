"""Spherical special functions, harmonics, and quadrature grids.

Conventions used throughout the library:

* time dependence exp(-i w t), so exp(ikr)/r is the outgoing wave and the
  spherical Hankel function of the first kind appears in radiating fields;
* complex orthonormal spherical harmonics with the Condon-Shortley phase,
  Y_{n,-m} = (-1)^m conj(Y_{n,m});
* elevation theta in [0, pi] measured down from the z-axis, azimuth phi in
  [0, 2*pi) counterclockwise from the x-axis;
* harmonics are stored flat, index n^2 + n + m, (N+1)^2 entries per order N.
"""
from __future__ import annotations

import functools
import os
import pathlib
from dataclasses import dataclass, field

import numpy as np
from scipy import special as _sp

from .errors import AliasingError, SingularityError, UnsupportedGridError

BUNDLED_GRID_SIZES = (16, 25, 36, 49, 64, 100)

# Exact single-harmonic integration degree of each bundled node set, as
# produced by tools/make_grids.py.  Weighted projection of an order-N field
# is exact when products Y_nm * conj(Y_n'm') integrate exactly, i.e. for
# N <= floor(degree / 2).
_CUBATURE_DEGREE = {16: 5, 25: 7, 36: 9, 49: 11, 64: 12, 100: 16}


# ---------------------------------------------------------------------------
# indexing and directions
# ---------------------------------------------------------------------------

def flat_index(n: int, m: int) -> int:
    """Flat position of harmonic (n, m): n^2 + n + m."""
    return n * n + n + m


def order_count(n_max: int) -> int:
    """Number of harmonics up to and including order n_max."""
    return (n_max + 1) ** 2


def index_orders(n_max: int) -> tuple[np.ndarray, np.ndarray]:
    """Arrays of (n, m) for every flat index up to order n_max."""
    n = np.repeat(np.arange(n_max + 1), 2 * np.arange(n_max + 1) + 1)
    m = np.concatenate([np.arange(-k, k + 1) for k in range(n_max + 1)])
    return n, m


@dataclass(frozen=True)
class Direction:
    """A point on the unit sphere: elevation down from z, azimuth from x."""

    theta: float
    phi: float

    def __post_init__(self):
        theta = float(self.theta) % (2.0 * np.pi)
        phi = float(self.phi)
        if theta > np.pi:  # reflect through the pole
            theta = 2.0 * np.pi - theta
            phi += np.pi
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "phi", phi % (2.0 * np.pi))

    @classmethod
    def from_vector(cls, v) -> "Direction":
        v = np.asarray(v, dtype=float)
        r = np.linalg.norm(v)
        if r == 0.0:
            raise SingularityError("direction undefined for the zero vector")
        return cls(float(np.arccos(np.clip(v[2] / r, -1.0, 1.0))),
                   float(np.arctan2(v[1], v[0])))

    def unit_vector(self) -> np.ndarray:
        st = np.sin(self.theta)
        return np.array([st * np.cos(self.phi), st * np.sin(self.phi),
                         np.cos(self.theta)])


def cart_to_sph(points) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Cartesian (..., 3) -> (r, theta, phi); theta/phi are 0 at the origin.

    theta comes from arctan2(hypot(x, y), z), which stays fully accurate
    near the poles where arccos(z/r) loses half the significant digits.
    """
    points = np.asarray(points, dtype=float)
    r = np.linalg.norm(points, axis=-1)
    rho = np.hypot(points[..., 0], points[..., 1])
    theta = np.arctan2(rho, points[..., 2])
    theta = np.where(r > 0, theta, 0.0)
    phi = np.arctan2(points[..., 1], points[..., 0]) % (2.0 * np.pi)
    return r, theta, phi


def sph_to_cart(r, theta, phi) -> np.ndarray:
    r, theta, phi = np.broadcast_arrays(*map(np.asarray, (r, theta, phi)))
    st = np.sin(theta)
    return np.stack([r * st * np.cos(phi), r * st * np.sin(phi),
                     r * np.cos(theta)], axis=-1)


# ---------------------------------------------------------------------------
# special functions
# ---------------------------------------------------------------------------

def sph_harm(n: int, m: int, theta, phi):
    """Orthonormal complex spherical harmonic Y_nm (Condon-Shortley phase).

    Parameters
    ----------
    n, m : int
        Order and mode, n >= 0 and |m| <= n.
    theta, phi : float or ndarray
        Elevation down from z, azimuth from x, radians.
    """
    if n < 0 or abs(m) > n:
        raise ValueError(f"invalid harmonic index (n={n}, m={m})")
    if m >= 0:
        return _sp.sph_harm_y(n, m, theta, phi)
    return (-1.0) ** (-m) * np.conj(_sp.sph_harm_y(n, -m, theta, phi))


def sh_matrix(n_max: int, theta, phi) -> np.ndarray:
    """Matrix. of harmonics: shape (points, (n_max+1)^2), column n^2+n+m."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    out = np.empty(theta.shape + (order_count(n_max),), dtype=complex)
    for n in range(n_max + 1):
        for m in range(0, n + 1):
            y = _sp.sph_harm_y(n, m, theta, phi)
            out[..., flat_index(n, m)] = y
            if m > 0:
                out[..., flat_index(n, -m)] = (-1.0) ** m * np.conj(y)
    return out


def sph_bessel_j(n, x, derivative: bool = False):
    """Spherical Bessel function of the first kind j_n(x) (or j_n'(x)).

    Total on n >= 0, x >= 0: j_0(0) = 1 and j_n(0) = 0 for n > 0.
    """
    n = np.asarray(n)
    if np.any(n < 0):
        raise ValueError("order n must be >= 0")
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("argument x must be >= 0")
    return _sp.spherical_jn(n, x, derivative=derivative)


def sph_bessel_y(n, x, derivative: bool = False):
    """Spherical Bessel function of the second kind y_n(x)."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise SingularityError("y_n is singular at x = 0")
    return _sp.spherical_yn(n, x, derivative=derivative)


def sph_hankel1(n, x, derivative: bool = False):
    """Spherical Hankel function of the first kind, h_n = j_n + i y_n."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise SingularityError("h_n is singular at x = 0")
    return (_sp.spherical_jn(n, x, derivative=derivative)
            + 1j * _sp.spherical_yn(n, x, derivative=derivative))


def rigid_baffle_b(n, ka):
    """Mode response b_n on the surface of a rigid sphere of radius a.

    b_n(ka) = j_n(ka) - (j_n'(ka) / h_n'(ka)) * h_n(ka), with the analytic
    derivative recurrence f_n'(x) = f_{n-1}(x) - ((n+1)/x) f_n(x).
    """
    ka = np.asarray(ka, dtype=float)
    if np.any(ka <= 0):
        raise SingularityError("rigid baffle response undefined at ka = 0")
    jn = _sp.spherical_jn(n, ka)
    jnp = _sp.spherical_jn(n, ka, derivative=True)
    hn = sph_hankel1(n, ka)
    hnp = sph_hankel1(n, ka, derivative=True)
    return jn - (jnp / hnp) * hn


def mixedwave_radial(n, k_radius):
    """Radial factor i * x * exp(-i x) * h_n(x) of the mixed-source kernel.

    Tends to (-i)^n as x -> infinity, which is the planewave modal factor.
    """
    x = np.asarray(k_radius, dtype=float)
    return 1j * x * np.exp(-1j * x) * sph_hankel1(n, x)


# ---------------------------------------------------------------------------
# quadrature grids
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QuadratureGrid:
    """Nodes and positive weights for integration over the unit sphere.

    ``max_exact_degree`` is the largest order N for which weighted projection
    of an order-N field recovers its coefficients exactly (discrete
    orthonormality of all harmonic pairs up to N).
    """

    theta: np.ndarray
    phi: np.ndarray
    weights: np.ndarray
    max_exact_degree: int
    name: str = field(default="custom")

    def __post_init__(self):
        for attr in ("theta", "phi", "weights"):
            object.__setattr__(self, attr,
                               np.asarray(getattr(self, attr), dtype=float))
        if not (len(self.theta) == len(self.phi) == len(self.weights)):
            raise ValueError("node and weight arrays must have equal length")
        if np.any(self.weights <= 0):
            raise ValueError("quadrature weights must be positive")
        total = float(np.sum(self.weights))
        if abs(total - 4.0 * np.pi) > 1e-9:
            raise ValueError(
                f"weights sum to {total!r}, expected 4*pi within 1e-9")

    def __len__(self) -> int:
        return len(self.weights)

    @property
    def unit_vectors(self) -> np.ndarray:
        return sph_to_cart(1.0, self.theta, self.phi)

    def scaled_points(self, radius: float) -> np.ndarray:
        return radius * self.unit_vectors


def _data_dir() -> pathlib.Path:
    override = os.environ.get("SFT_DATA_DIR")
    if override:
        return pathlib.Path(override)
    return pathlib.Path(__file__).resolve().parent / "data"


@functools.lru_cache(maxsize=None)
def fliege_grid(point_count: int) -> QuadratureGrid:
    """Load a bundled near-uniform node set with quadrature weights.

    Available sizes: 16, 25, 36, 49, 64, 100.  The (N+1)^2-point set supports
    exact projection of fields up to order sqrt(point_count) - 2; see
    tools/make_grids.py for how the node positions and weights are computed
    and data/README.md for the file format.
    """
    if point_count not in BUNDLED_GRID_SIZES:
        raise UnsupportedGridError(
            f"no bundled grid with {point_count} points; "
            f"available: {BUNDLED_GRID_SIZES}")
    path = _data_dir() / f"fliege_{point_count}.csv"
    rows = np.genfromtxt(path, delimiter=",", names=True)
    degree = _CUBATURE_DEGREE[point_count]
    return QuadratureGrid(theta=rows["theta"], phi=rows["phi"],
                          weights=rows["weight"],
                          max_exact_degree=degree // 2,
                          name=f"fliege_{point_count}")


def project_to_harmonics(values, grid: QuadratureGrid, n_max: int) -> np.ndarray:
    """Discrete spherical harmonic transform by weighted quadrature.

    c_nm = sum_q w_q * values_q * conj(Y_nm(node_q)).  Exact for band-limited
    inputs when n_max <= grid.max_exact_degree.
    """
    if n_max > grid.max_exact_degree:
        raise AliasingError(
            f"order {n_max} exceeds grid '{grid.name}' exactness "
            f"(max {grid.max_exact_degree})")
    values = np.asarray(values)
    if values.shape[-1] != len(grid):
        raise ValueError(
            f"got {values.shape[-1]} values for {len(grid)} grid nodes")
    basis = sh_matrix(n_max, grid.theta, grid.phi)
    return (values * grid.weights) @ np.conj(basis)


def synthesize_on_grid(coeffs, grid: QuadratureGrid) -> np.ndarray:
    """Evaluate a flat coefficient vector on the grid nodes."""
    coeffs = np.asarray(coeffs)
    n_max = int(np.sqrt(coeffs.shape[-1])) - 1
    basis = sh_matrix(n_max, grid.theta, grid.phi)
    return coeffs @ basis.swapaxes(-1, -2)


# ---------------------------------------------------------------------------
# modal gradients
# ---------------------------------------------------------------------------

@functools.lru_cache(maxsize=None)
def gradient_matrices(n_max: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Ladder operators for Cartesian gradients of regular modal sums.

    For P(x) = sum alpha_nm j_n(kr) Y_nm(x^), the gradient is again a modal
    sum one order higher: dP/dx_i = k * sum (G_i alpha)_nm j_n(kr) Y_nm(x^).
    Returns (Gx, Gy, Gz), each ((n_max+2)^2, (n_max+1)^2).  The same ladder
    holds for h_n-based (singular) sums.
    """
    m_in = order_count(n_max)
    m_out = order_count(n_max + 1)
    gz = np.zeros((m_out, m_in))
    gp = np.zeros((m_out, m_in))  # d/dx + i d/dy
    gm = np.zeros((m_out, m_in))  # d/dx - i d/dy

    def a(n, m):
        return np.sqrt(((n + 1.0 - m) * (n + 1.0 + m))
                       / ((2.0 * n + 1.0) * (2.0 * n + 3.0)))

    for n in range(n_max + 1):
        for m in range(-n, n + 1):
            j = flat_index(n, m)
            # d/dz: A_{n-1,m} psi_{n-1,m} - A_{n,m} psi_{n+1,m}
            if n - 1 >= abs(m):
                gz[flat_index(n - 1, m), j] += a(n - 1, m)
            gz[flat_index(n + 1, m), j] -= a(n, m)
            # d/dx + i d/dy: C psi_{n-1,m+1} + D psi_{n+1,m+1}
            if abs(m + 1) <= n - 1:
                c = np.sqrt((n - m) * (n - m - 1.0)
                            / ((2.0 * n - 1.0) * (2.0 * n + 1.0)))
                gp[flat_index(n - 1, m + 1), j] += c
            d = np.sqrt((n + m + 1.0) * (n + m + 2.0)
                        / ((2.0 * n + 1.0) * (2.0 * n + 3.0)))
            gp[flat_index(n + 1, m + 1), j] += d
            # d/dx - i d/dy: -E psi_{n-1,m-1} - F psi_{n+1,m-1}
            if abs(m - 1) <= n - 1:
                e = np.sqrt((n + m) * (n + m - 1.0)
                            / ((2.0 * n - 1.0) * (2.0 * n + 1.0)))
                gm[flat_index(n - 1, m - 1), j] -= e
            f = np.sqrt((n - m + 1.0) * (n - m + 2.0)
                        / ((2.0 * n + 1.0) * (2.0 * n + 3.0)))
            gm[flat_index(n + 1, m - 1), j] -= f

    gx = 0.5 * (gp + gm)
    gy = -0.5j * (gp - gm)
    return gx.astype(complex), gy.astype(complex), gz.astype(complex)
