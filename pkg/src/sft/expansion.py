"""Expansion of recorded coefficients into virtual-source driving functions.

Two source models:

* planewave: far-field sources on a direction sphere, modal column
  (-i)^n conj(Y_nm(y^));
* mixedwave: point sources normalized by |y| exp(-ik|y|) on two concentric
  shells (near and far), modal column ik|y| exp(-ik|y|) h_n(k|y|)
  conj(Y_nm(y^)).  The far-shell columns tend to the planewave columns as
  the radius grows.

Two expansion routes:

* closed form, which inverts the modal relation order by order and spreads
  energy over every source (synthesis then uses the quadrature weights);
* iteratively reweighted least squares (IRLS), which solves the
  under-determined system A psi = alpha with an l_p objective (p = 1 by
  default) and concentrates energy on few sources (synthesis uses unit
  weights because the discrete system is solved directly).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ModelError, SingularityError
from .scene import Scene
from .sphmath import (QuadratureGrid, fliege_grid, index_orders, order_count,
                      sh_matrix, mixedwave_radial)

PW_CF, PW_IRLS, MW_CF, MW_IRLS = "pw-cf", "pw-irls", "mw-cf", "mw-irls"
METHOD_TAGS = (PW_CF, PW_IRLS, MW_CF, MW_IRLS)


@dataclass(frozen=True)
class VirtualDistribution:
    """Discrete secondary sources: directions, radii (inf for planewaves),
    and the direction grid's quadrature weights."""

    model: str                     # "planewave" | "mixedwave"
    theta: np.ndarray              # (L,)
    phi: np.ndarray                # (L,)
    radii: np.ndarray              # (L,), np.inf for planewave sources
    weights: np.ndarray            # (L,) quadrature weights

    def __post_init__(self):
        for attr in ("theta", "phi", "radii", "weights"):
            object.__setattr__(self, attr,
                               np.asarray(getattr(self, attr), dtype=float))
        if self.model not in ("planewave", "mixedwave"):
            raise ModelError(f"unknown distribution model {self.model!r}")

    def __len__(self) -> int:
        return len(self.theta)

    @property
    def unit_vectors(self) -> np.ndarray:
        st = np.sin(self.theta)
        return np.stack([st * np.cos(self.phi), st * np.sin(self.phi),
                         np.cos(self.theta)], axis=-1)

    @property
    def positions(self) -> np.ndarray:
        """Source positions; infinite for planewave sources."""
        return self.radii[:, None] * self.unit_vectors

    @property
    def shell_radii(self) -> np.ndarray:
        return np.unique(self.radii)

    @property
    def near_radius(self) -> float:
        return float(np.min(self.radii))


def planewave_distribution(grid: QuadratureGrid) -> VirtualDistribution:
    return VirtualDistribution(model="planewave", theta=grid.theta,
                               phi=grid.phi,
                               radii=np.full(len(grid), np.inf),
                               weights=grid.weights)


def mixedwave_distribution(grid: QuadratureGrid, near_radius: float,
                           far_radius: float) -> VirtualDistribution:
    """Two concentric shells over the same direction grid; sources 1..L sit
    on the near shell, L+1..2L on the far shell."""
    if not 0 < near_radius < far_radius:
        raise ValueError("require 0 < near_radius < far_radius")
    two = lambda a: np.concatenate([a, a])
    radii = np.concatenate([np.full(len(grid), near_radius),
                            np.full(len(grid), far_radius)])
    return VirtualDistribution(model="mixedwave", theta=two(grid.theta),
                               phi=two(grid.phi), radii=radii,
                               weights=two(grid.weights))


def distribution_from_scene(scene: Scene, model: str) -> VirtualDistribution:
    if model == "planewave":
        if scene.planewave is None:
            raise ModelError("scene declares no planewave distribution")
        return planewave_distribution(scene.planewave.direction_grid())
    if model == "mixedwave":
        if scene.mixedwave is None:
            raise ModelError("scene declares no mixedwave distribution")
        return mixedwave_distribution(scene.mixedwave.direction_grid(),
                                      scene.mixedwave.near_radius,
                                      scene.mixedwave.far_radius)
    raise ModelError(f"unknown distribution model {model!r}")


def distribution_for_method(scene: Scene, method: str) -> VirtualDistribution:
    if method not in METHOD_TAGS:
        raise ModelError(f"unknown expansion method {method!r}")
    return distribution_from_scene(
        scene, "planewave" if method.startswith("pw") else "mixedwave")


@dataclass(frozen=True)
class DrivingFunction:
    """Complex source gains per frequency with their provenance.

    Closed-form results are synthesized with the distribution's quadrature
    weights; IRLS results solve the discrete system directly and are
    synthesized with unit weights.
    """

    method: str                    # one of METHOD_TAGS
    distribution: VirtualDistribution
    frequencies: np.ndarray        # Hz, (F,)
    psi: np.ndarray                # complex, (F, L)
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "frequencies",
                           np.atleast_1d(np.asarray(self.frequencies,
                                                    dtype=float)))
        psi = np.asarray(self.psi, dtype=complex)
        if psi.ndim == 1:
            psi = psi[None, :]
        object.__setattr__(self, "psi", psi)
        if psi.shape != (len(self.frequencies), len(self.distribution)):
            raise ValueError(f"psi shape {psi.shape} does not match "
                             f"{len(self.frequencies)} bins x "
                             f"{len(self.distribution)} sources")
        if self.method not in METHOD_TAGS:
            raise ModelError(f"unknown method tag {self.method!r}")

    @property
    def is_sparse(self) -> bool:
        return self.method.endswith("irls")

    @property
    def synthesis_weights(self) -> np.ndarray:
        if self.is_sparse:
            return np.ones(len(self.distribution))
        return self.distribution.weights


# ---------------------------------------------------------------------------
# closed-form expansions
# ---------------------------------------------------------------------------

def _check_synthesis_grid(dist: VirtualDistribution, n_max: int):
    """Warn when the direction grid cannot synthesize order-n_max
    coefficients back from a closed-form driving function (its quadrature
    is not orthonormal to that degree)."""
    sel = dist.radii == dist.radii[0]
    basis = sh_matrix(n_max, dist.theta[sel], dist.phi[sel])
    gram = (basis.conj().T * dist.weights[sel]) @ basis
    err = np.max(np.abs(gram - np.eye(gram.shape[0])))
    if err > 1e-8:
        import warnings
        warnings.warn(
            f"direction grid aliases at order {n_max} "
            f"(orthonormality error {err:.2e}); closed-form synthesis will "
            f"not reproduce the input coefficients", UserWarning,
            stacklevel=3)


def pw_closed_form(alpha, dist: VirtualDistribution, k=None) -> np.ndarray:
    """Planewave driving gains psi_l = sum_nm i^n alpha_nm Y_nm(y_l^).

    ``alpha`` may be a single coefficient vector or a (F, M) stack; the
    result matches ((F,) L).  The wavenumber does not enter.
    """
    if dist.model != "planewave":
        raise ModelError("planewave expansion needs a planewave distribution")
    alpha = np.asarray(alpha, dtype=complex)
    n_max = int(np.sqrt(alpha.shape[-1])) - 1
    _check_synthesis_grid(dist, n_max)
    n, _ = index_orders(n_max)
    basis = sh_matrix(n_max, dist.theta, dist.phi)      # (L, M)
    return (alpha * (1j ** n)) @ basis.T


def mw_closed_form(alpha, dist: VirtualDistribution, k,
                   shell: str = "both") -> np.ndarray:
    """Mixedwave driving gains psi_l = sum_nm alpha_nm /
    (ik R exp(-ikR) h_n(kR)) Y_nm(y_l^), per shell.

    With several shells the coefficients are split evenly between them so
    that the summed synthesis reproduces ``alpha`` once.  ``shell`` selects
    'near', 'far', or 'both' (gains for every source of the distribution).
    """
    if dist.model != "mixedwave":
        raise ModelError("mixedwave expansion needs a mixedwave distribution")
    alpha = np.asarray(alpha, dtype=complex)
    n_max = int(np.sqrt(alpha.shape[-1])) - 1
    _check_synthesis_grid(dist, n_max)
    n, _ = index_orders(n_max)
    k = np.asarray(k, dtype=float)
    if np.any(k * np.min(dist.radii) <= 0):
        raise SingularityError("k R must be positive")
    shells = dist.shell_radii
    split = alpha / len(shells)
    if shell == "near":
        sel = dist.radii == dist.near_radius
    elif shell == "far":
        sel = dist.radii == np.max(dist.radii)
    elif shell == "both":
        sel = np.ones(len(dist), dtype=bool)
    else:
        raise ValueError(f"unknown shell selector {shell!r}")
    theta, phi, radii = dist.theta[sel], dist.phi[sel], dist.radii[sel]
    basis = sh_matrix(n_max, theta, phi)                # (Lsel, M)
    psi = np.empty(alpha.shape[:-1] + (int(np.sum(sel)),), dtype=complex)
    for r in np.unique(radii):
        cols = radii == r
        radial = mixedwave_radial(n, k[..., None] * r)  # (..., M)
        psi[..., cols] = (split / radial) @ basis[cols].T
    return psi


# ---------------------------------------------------------------------------
# expansion matrix and IRLS
# ---------------------------------------------------------------------------

def build_matrix(dist: VirtualDistribution, k, n_max: int) -> np.ndarray:
    """Modal response matrix A, shape ((n_max+1)^2, L) (or (F, M, L) for an
    array of wavenumbers): A @ psi are the coefficients observed at the
    origin when each source l is driven with gain psi_l."""
    k = np.asarray(k, dtype=float)
    n, _ = index_orders(n_max)
    basis_h = np.conj(sh_matrix(n_max, dist.theta, dist.phi)).T   # (M, L)
    if dist.model == "planewave":
        col = np.broadcast_to(((-1j) ** n)[:, None],
                              k.shape + basis_h.shape).copy()
    else:
        radial = mixedwave_radial(n[:, None],
                                  k[..., None, None] * dist.radii[None, :])
        col = radial
    return col * basis_h


@dataclass(frozen=True)
class IrlsResult:
    psi: np.ndarray                # (..., L)
    iterations: np.ndarray         # per bin
    residual: np.ndarray           # final ||A psi - alpha|| / ||alpha|| per bin
    converged: np.ndarray          # bool per bin
    eps_trace: list                # per-bin list of epsilon stage values
    l1_trace: list                 # per-bin list of ||psi||_1 at stage ends


def irls_solve(A, alpha, p: float = 1.0, max_iter: int = 100,
               eps_start_ratio: float = 0.1, eps_floor_ratio: float = 1e-12,
               stage_tol: float = 1e-3, stage_cap: int = 5,
               final_tol: float = 1e-2) -> IrlsResult:
    """Sparse solve of the under-determined system A psi = alpha.

    Minimizes an l_p objective (0 < p < 2, default 1) subject to the modal
    constraint, by iteratively reweighted least squares with an
    epsilon-damped weight update:

        Q = diag((|psi|^2 + eps)^((2-p)/2))
        psi <- Q A^H (A Q A^H + delta I)^(-1) alpha

    starting from the minimum-norm solution.  eps starts at
    eps_start_ratio * max|psi0|^2 and is divided by 10 whenever the relative
    iterate change drops below stage_tol (or after stage_cap iterations in
    one stage; for p = 1 the early stages otherwise settle too slowly to
    finish the schedule inside the iteration budget), down to
    eps_floor_ratio * eps0.  The iterate is converged once the schedule has
    bottomed out and the per-iteration relative drift is below final_tol;
    at p = 1 the fully-settled iterate is approached only sublinearly, so
    requiring stage_tol there would burn the budget polishing gains that no
    longer move the solution.  The conjugate transpose replaces the
    real-valued transpose of the usual real formulation; complex least
    squares requires it.

    Accepts a single system (M, L) or a stack (B, M, L) solved in lockstep.
    alpha is scaled out first, so the result is exactly scale-equivariant.
    """
    if not 0 < p < 2:
        raise ValueError("p must lie in (0, 2)")
    A = np.asarray(A, dtype=complex)
    alpha = np.asarray(alpha, dtype=complex)
    squeeze = A.ndim == 2
    if squeeze:
        A = A[None]
        alpha = np.atleast_2d(alpha)
    n_bins, m_rows, n_src = A.shape
    if n_src <= m_rows:
        raise ValueError(f"system must be under-determined; got {m_rows} "
                         f"rows x {n_src} sources")

    scale = np.linalg.norm(alpha, axis=-1)
    live = scale > 0
    a_unit = np.where(live[:, None], alpha / np.where(live, scale, 1.0)[:, None], 0.0)

    delta = 1e-10 * np.einsum("bml,bml->b", A, A.conj()).real / m_rows
    eye = np.eye(m_rows)

    def weighted_solve(q):
        aq = A * q[:, None, :]
        gram = aq @ np.conj(np.swapaxes(A, 1, 2))
        gram += delta[:, None, None] * eye
        lam = np.linalg.solve(gram, a_unit[:, :, None])
        return q * np.einsum("bml,bm->bl", np.conj(A), lam[:, :, 0])

    psi = weighted_solve(np.ones((n_bins, n_src)))
    eps0 = eps_start_ratio * np.max(np.abs(psi) ** 2, axis=-1)
    eps0 = np.where(eps0 > 0, eps0, 1.0)
    eps = eps0.copy()
    eps_floor = eps_floor_ratio * eps0

    iterations = np.ones(n_bins, dtype=int)
    done = ~live.copy()
    psi[done] = 0.0
    stage_iters = np.zeros(n_bins, dtype=int)
    eps_trace = [[float(e)] for e in eps]
    l1_trace = [[] for _ in range(n_bins)]

    expo = (2.0 - p) / 2.0
    for _ in range(max_iter - 1):
        if np.all(done):
            break
        q = (np.abs(psi) ** 2 + eps[:, None]) ** expo
        psi_new = weighted_solve(q)
        psi_new[done] = psi[done]
        step = np.linalg.norm(psi_new - psi, axis=-1)
        norm = np.linalg.norm(psi_new, axis=-1)
        norm = np.where(norm > 0, norm, 1.0)
        settled = step <= stage_tol * norm
        drifting = step <= final_tol * norm
        iterations += ~done
        stage_iters += ~done
        psi = psi_new
        at_floor = eps <= eps_floor
        stage_end = (settled | (stage_iters >= stage_cap)) & ~done
        for b in np.nonzero(stage_end)[0]:
            l1_trace[b].append(float(np.sum(np.abs(psi[b]))))
            stage_iters[b] = 0
            if at_floor[b]:
                if drifting[b]:
                    done[b] = True
            else:
                eps[b] = max(eps[b] / 10.0, eps_floor[b])
                eps_trace[b].append(float(eps[b]))
    for b in range(n_bins):
        if not l1_trace[b]:
            l1_trace[b].append(float(np.sum(np.abs(psi[b]))))

    psi = psi * scale[:, None]
    resid = np.linalg.norm(np.einsum("bml,bl->bm", A, psi) - alpha, axis=-1)
    resid = np.where(live, resid / np.where(live, scale, 1.0), 0.0)
    result = IrlsResult(psi=psi[0] if squeeze else psi,
                        iterations=iterations[0] if squeeze else iterations,
                        residual=resid[0] if squeeze else resid,
                        converged=done[0] if squeeze else done,
                        eps_trace=eps_trace[0] if squeeze else eps_trace,
                        l1_trace=l1_trace[0] if squeeze else l1_trace)
    return result


# ---------------------------------------------------------------------------
# top-level expansion driver
# ---------------------------------------------------------------------------

def expand(coeffs, scene: Scene, method: str,
           p: float = 1.0) -> DrivingFunction:
    """Expand recorded coefficients (a SphericalCoefficients) into a driving
    function with the requested method."""
    dist = distribution_for_method(scene, method)
    freqs = coeffs.frequencies
    k = scene.wavenumber(freqs)
    diagnostics = {}
    if method == PW_CF:
        psi = pw_closed_form(coeffs.data, dist)
    elif method == MW_CF:
        psi = mw_closed_form(coeffs.data, dist, k)
    else:
        A = build_matrix(dist, k, coeffs.n_max)
        res = irls_solve(A, coeffs.data, p=p)
        psi = res.psi
        diagnostics = {"iterations": res.iterations,
                       "residual": res.residual,
                       "converged": res.converged}
    return DrivingFunction(method=method, distribution=dist,
                           frequencies=freqs, psi=psi,
                           diagnostics=diagnostics)
