"""Collocation boundary element method for conductor electrostatics.

Normals point out of the conductors into the field region.  With
``sigma = dPhi/dn`` and the piecewise-constant elements s_i, Green's second
identity gives, for a field point x,

    Phi(x) = sum_i alpha_i(x) sigma_i - sum_i beta_i(x) Phi_i

and, at the centroid x_j of element j (the surface carries half the jump),

    Phi_j = 2 sum_i alpha_i(x_j) sigma_i - 2 sum_i beta_i(x_j) Phi_i .

A conducting sphere of radius R at 1 V therefore has sigma = -1/R.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .._accel import USE_NUMBA
from ..errors import GeometryError, InvalidArgumentError, SolverError
from . import _bem_kernels as K
from .geometry import ElectrodeGeometry
from .quadrature import triangle_rule

POTENTIAL = "potential"
CHARGE = "charge"


@dataclass(frozen=True)
class QuadratureOptions:
    """Element-integration settings.

    Parameters
    ----------
    n_points : int
        Base triangle rule size (1, 3, 4, 7, 9, 16, 25).
    near_ratio : float
        Subdivision factor: an element of diameter h at distance d is split
        ``ceil(near_ratio * h / d)`` times per edge.
    n_max : int
        Cap on the subdivision factor.
    n_theta : int
        Gauss-Legendre nodes per sub-triangle in the polar self-integral.
    """

    n_points: int = 7
    near_ratio: float = 4.0
    n_max: int = 48
    n_theta: int = 24


@dataclass
class BemSystem:
    """Assembled influence coefficients.

    ``alpha[i, j]`` and ``beta[i, j]`` are the single- and double-layer
    integrals over element i evaluated at collocation point (centroid) j.
    """

    geometry: ElectrodeGeometry
    centroids: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    kinds: np.ndarray
    options: QuadratureOptions
    _lu: object = field(default=None, repr=False)

    @property
    def n_elements(self) -> int:
        return self.centroids.shape[0]


@dataclass
class SurfaceSolution:
    """Per-element normal derivative (V/m) and potential (V)."""

    normal_derivative: np.ndarray
    potential: np.ndarray

    def total_flux(self, geometry: ElectrodeGeometry, electrode: str | None = None) -> float:
        """Surface integral of dPhi/dn, optionally restricted to one electrode."""
        w = geometry.areas
        if electrode is not None:
            w = np.where(geometry.electrode_id == geometry.electrode_names.index(electrode), w, 0.0)
        return float(np.dot(w, self.normal_derivative))


def _kernel_args(geom: ElectrodeGeometry, opt: QuadratureOptions):
    corners = np.ascontiguousarray(geom.corners)
    diams = np.max(np.linalg.norm(corners[:, [0, 1, 2]] - corners[:, [1, 2, 0]], axis=2), axis=1)
    rule = triangle_rule(opt.n_points)
    gl_x, gl_w = np.polynomial.legendre.leggauss(opt.n_theta)
    return corners, np.ascontiguousarray(geom.normals), np.ascontiguousarray(geom.areas), diams, rule, gl_x, gl_w


def _coincident_elements(geom: ElectrodeGeometry, points, tol=1e-12) -> np.ndarray:
    """Index of the element whose centroid equals each point, else -1."""
    from scipy.spatial import cKDTree

    scale = float(np.ptp(geom.vertices, axis=0).max()) or 1.0
    tree = cKDTree(geom.centroids)
    d, idx = tree.query(points, k=1)
    return np.where(d <= tol * scale, idx, -1).astype(np.int64)


def influence_matrices(geom: ElectrodeGeometry, points, options: QuadratureOptions | None = None,
                       use_numba: bool | None = None):
    """alpha, beta of shape (n_elements, n_points) for arbitrary evaluation points."""
    opt = options or QuadratureOptions()
    pts = np.ascontiguousarray(np.atleast_2d(np.asarray(points, dtype=float)))
    corners, normals, areas, diams, rule, gl_x, gl_w = _kernel_args(geom, opt)
    self_idx = _coincident_elements(geom, pts)
    if USE_NUMBA if use_numba is None else use_numba:
        return K.influence_matrices_numba(pts, corners, normals, areas, diams, rule.points, rule.weights,
                                          self_idx, float(opt.near_ratio), int(opt.n_max), gl_x, gl_w)
    return K.influence_matrices_np(pts, corners, normals, areas, diams, opt.n_points, self_idx,
                                   opt.near_ratio, opt.n_max, gl_x, gl_w)


def assemble_bem(geom: ElectrodeGeometry, options: QuadratureOptions | None = None,
                 charge_given=(), use_numba: bool | None = None) -> BemSystem:
    """Assemble the collocation coefficients at the element centroids.

    Parameters
    ----------
    charge_given : iterable of str
        Electrodes on which dPhi/dn is prescribed instead of the potential.
    """
    if not isinstance(geom, ElectrodeGeometry):
        raise GeometryError("assemble_bem expects an ElectrodeGeometry")
    opt = options or QuadratureOptions()
    alpha, beta = influence_matrices(geom, geom.centroids, opt, use_numba)
    kinds = np.full(geom.n_elements, POTENTIAL, dtype=object)
    for name in charge_given:
        if name not in geom.electrode_names:
            raise GeometryError(f"unknown electrode {name!r}")
        kinds[geom.electrode_id == geom.electrode_names.index(name)] = CHARGE
    return BemSystem(geom, geom.centroids.copy(), alpha, beta, kinds, opt)


def _system_matrix(system: BemSystem):
    # rows: collocation j; P Phi = Q sigma with P = I + 2 beta^T, Q = 2 alpha^T
    P = np.eye(system.n_elements) + 2.0 * system.beta.T
    Q = 2.0 * system.alpha.T
    dmask = system.kinds == POTENTIAL
    M = np.where(dmask[None, :], Q, -P)
    return M, P, Q, dmask


def solve_surface(system: BemSystem, electrode_voltages: dict, charges: dict | None = None,
                  method: str = "lu", tol: float = 1e-12) -> SurfaceSolution:
    """Solve for the unknown surface quantities.

    Parameters
    ----------
    electrode_voltages : dict
        Voltage per potential-given electrode (V); every such electrode needs one.
    charges : dict, optional
        dPhi/dn (V/m) per charge-given electrode.
    method : {"lu", "gmres"}
        Dense LU (factorisation cached on ``system``) or restarted GMRES.
    """
    geom = system.geometry
    charges = charges or {}
    dmask = system.kinds == POTENTIAL
    needed = {geom.electrode_names[k] for k in np.unique(geom.electrode_id[dmask])}
    missing = needed - set(electrode_voltages)
    if missing:
        raise InvalidArgumentError(f"no voltage given for electrode(s) {sorted(missing)}")
    phi_e = geom.element_voltages({k: v for k, v in electrode_voltages.items() if k in needed})
    sig_e = geom.element_voltages({k: v for k, v in charges.items()}) if charges else np.zeros(geom.n_elements)
    phi_e = np.where(dmask, phi_e, 0.0)
    sig_e = np.where(dmask, 0.0, sig_e)
    M, P, Q, _ = _system_matrix(system)
    rhs = P[:, dmask] @ phi_e[dmask] - Q[:, ~dmask] @ sig_e[~dmask]
    if not np.any(rhs):
        z = np.zeros(system.n_elements)
    elif method == "lu":
        if system._lu is None:
            lu, piv = scipy.linalg.lu_factor(M, check_finite=True)
            diag = np.abs(np.diag(lu))
            if diag.min() <= np.finfo(float).eps * diag.max() * M.shape[0]:
                raise SolverError("BEM system is singular", condition=float(np.linalg.cond(M)))
            system._lu = (lu, piv)
        z = scipy.linalg.lu_solve(system._lu, rhs)
    elif method == "gmres":
        from scipy.sparse.linalg import gmres

        z, info = gmres(M, rhs, rtol=tol, atol=0.0, restart=min(200, M.shape[0]), maxiter=1000)
        if info != 0:
            raise SolverError(f"GMRES did not converge (info={info})", condition=float(np.linalg.cond(M)))
    else:
        raise InvalidArgumentError(f"unknown solve method {method!r}")
    sigma = np.where(dmask, z, sig_e)
    phi = np.where(dmask, phi_e, z)
    return SurfaceSolution(sigma, phi)


def _stack(sols):
    if isinstance(sols, SurfaceSolution):
        sols = [sols]
    sig = np.ascontiguousarray(np.column_stack([s.normal_derivative for s in sols]))
    phi = np.ascontiguousarray(np.column_stack([s.potential for s in sols]))
    return sig, phi


def evaluate_potential(system: BemSystem, sol, points, use_numba: bool | None = None) -> np.ndarray:
    """Potential at field points (V).

    ``sol`` may be one :class:`SurfaceSolution` (returns shape (M,)) or a list
    (returns (M, S)).  Points equal to an element centroid use the on-surface
    form of the representation.
    """
    single = isinstance(sol, SurfaceSolution)
    sig, phi = _stack(sol)
    pts = np.ascontiguousarray(np.atleast_2d(np.asarray(points, dtype=float)))
    opt = system.options
    corners, normals, areas, diams, rule, gl_x, gl_w = _kernel_args(system.geometry, opt)
    self_idx = _coincident_elements(system.geometry, pts)
    if USE_NUMBA if use_numba is None else use_numba:
        out = K.potential_numba(pts, corners, normals, areas, diams, rule.points, rule.weights, self_idx,
                                float(opt.near_ratio), int(opt.n_max), gl_x, gl_w, sig, phi)
    else:
        out = K.potential_np(pts, corners, normals, areas, diams, opt.n_points, self_idx,
                             opt.near_ratio, opt.n_max, gl_x, gl_w, sig, phi)
    out = np.where((self_idx >= 0)[:, None], 2.0 * out, out)
    return out[:, 0] if single else out


def evaluate_field(system: BemSystem, sol, points, use_numba: bool | None = None) -> np.ndarray:
    """Potential gradient (V/m) at field points off the surface, shape (M, 3) or (M, S, 3)."""
    single = isinstance(sol, SurfaceSolution)
    sig, phi = _stack(sol)
    pts = np.ascontiguousarray(np.atleast_2d(np.asarray(points, dtype=float)))
    opt = system.options
    corners, normals, areas, diams, rule, _, _ = _kernel_args(system.geometry, opt)
    if USE_NUMBA if use_numba is None else use_numba:
        out = K.field_numba(pts, corners, normals, areas, diams, rule.points, rule.weights,
                            float(opt.near_ratio), int(opt.n_max), sig, phi)
    else:
        out = K.field_np(pts, corners, normals, areas, diams, opt.n_points, opt.near_ratio, opt.n_max, sig, phi)
    return out[:, 0] if single else out


def unit_solutions(system: BemSystem, electrodes=None) -> list:
    """One solution per electrode at 1 V with all others grounded."""
    names = list(electrodes) if electrodes is not None else system.geometry.electrode_names
    allnames = system.geometry.electrode_names
    return [solve_surface(system, {n: (1.0 if n == e else 0.0) for n in allnames}) for e in names]


def axis_points(x) -> np.ndarray:
    """Points (M, 3) on the trap axis y = z = 0."""
    x = np.asarray(x, dtype=float).ravel()
    return np.column_stack([x, np.zeros_like(x), np.zeros_like(x)])


def axis_basis_matrix(system: BemSystem, geometry: ElectrodeGeometry | None = None, axis_points_x=None,
                      electrodes=None) -> np.ndarray:
    """Matrix A (M x N): potential at axis point i per volt on electrode j.

    Parameters
    ----------
    axis_points_x : array_like
        Axis positions in m (shape (M,)) or full points (M, 3).
    electrodes : sequence of str, optional
        Column order; default all electrodes of the geometry.
    """
    geometry = geometry or system.geometry
    if geometry is not system.geometry:
        raise InvalidArgumentError("geometry does not belong to this BEM system")
    pts = np.asarray(axis_points_x, dtype=float)
    if pts.ndim == 1:
        pts = axis_points(pts)
    return evaluate_potential(system, unit_solutions(system, electrodes), pts)
