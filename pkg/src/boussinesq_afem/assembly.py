"""Sparse assembly of the linearized convection and heat systems.

The velocity step solves, for a previous velocity iterate w and temperature
T_prev, the block system for (u, p, mu):

  nu (grad u, grad v) + ((w . grad) u, v) + 1/2 ((div w) u, v) - (p, div v)
                                                        = (T_prev g, v)
  -(q, div u) + mu (q, 1) = 0
  (p, 1) = 0

where mu is a scalar multiplier pinning the pressure mean to zero.  The heat
step solves kappa (grad T, grad r) - (T u, grad r) = h r(z), a point load at
the source position.  Homogeneous Dirichlet rows and columns are eliminated
symmetrically (unit diagonal, zero right-hand side).
"""

from __future__ import annotations

import weakref
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import kernels
from .config import MINI, TAYLOR_HOOD, ProblemConfig
from .mesh import Mesh, locate
from .quadrature import simplex_rule
from .spaces import (
    P1,
    P1BUBBLE,
    P2,
    DofMap,
    FieldVec,
    build_space,
    shape_ref_grads,
    shape_values,
)

ASSEMBLY_DEGREE = 8


@dataclass(frozen=True)
class SparseSystem:
    """Square CSR system with its right-hand side."""

    matrix: sp.csr_matrix
    rhs: np.ndarray

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def __post_init__(self):
        if self.matrix.shape[0] != self.matrix.shape[1]:
            raise ValueError("system matrix must be square")
        if self.matrix.shape[0] != len(self.rhs):
            raise ValueError("matrix and right-hand side sizes differ")


def family_spaces(mesh: Mesh, element_family: str) -> tuple[DofMap, DofMap, DofMap]:
    """Velocity, pressure and temperature spaces for a mixed family.

    Taylor-Hood pairs quadratic velocities with linear pressures and a
    quadratic temperature; the mini element uses bubble-enriched linear
    velocities with linear pressure and temperature.
    """
    if element_family == TAYLOR_HOOD:
        vel, temp = P2, P2
    elif element_family == MINI:
        vel, temp = P1BUBBLE, P1
    else:
        raise ValueError(f"unknown element family {element_family!r}")
    velocity = build_space(mesh, vel, components=2)
    pressure = build_space(mesh, P1, components=1, homogeneous_dirichlet=False)
    temperature = build_space(mesh, temp, components=1)
    return velocity, pressure, temperature


_BATCH_CACHE: "weakref.WeakKeyDictionary[Mesh, dict]" = weakref.WeakKeyDictionary()


class _Batch:
    """Per-mesh quadrature tables for one scalar family.

    Meshes are immutable, so tables are memoized per (family, degree); the
    fixed-point iteration reassembles on the same mesh many times.
    """

    def __new__(cls, mesh: Mesh, space: DofMap, degree: int = ASSEMBLY_DEGREE):
        per_mesh = _BATCH_CACHE.setdefault(mesh, {})
        key = (space.family, degree)
        batch = per_mesh.get(key)
        if batch is None:
            batch = super().__new__(cls)
            batch._build(mesh, space, degree)
            per_mesh[key] = batch
        return batch

    def _build(self, mesh: Mesh, space: DofMap, degree: int):
        rule = simplex_rule(degree)
        self.rule = rule
        self.phi = shape_values(space.family, rule.points)
        gref = shape_ref_grads(space.family, rule.points)
        self.gphys = np.ascontiguousarray(
            np.einsum("edk,qak->eqad", mesh.inv_jac_t, gref))
        self.detw = np.ascontiguousarray(
            mesh.det_jac[:, None] * rule.weights[None, :])
        self.dofs = space.element_dofs

    def values(self, field: FieldVec, component: int = 0) -> np.ndarray:
        coef = field.component(component)[self.dofs]
        return np.ascontiguousarray(np.einsum("ea,qa->eq", coef, self.phi))

    def vector_values(self, field: FieldVec) -> np.ndarray:
        return np.ascontiguousarray(
            np.stack([self.values(field, c) for c in range(2)], axis=-1))

    def divergence(self, field: FieldVec) -> np.ndarray:
        out = np.zeros(self.detw.shape)
        for c in range(2):
            coef = field.component(c)[self.dofs]
            out += np.einsum("ea,eqa->eq", coef, self.gphys[:, :, :, c])
        return np.ascontiguousarray(out)


def _check_same_mesh(mesh: Mesh, *items):
    for item in items:
        space = item.space if isinstance(item, FieldVec) else item
        if space.mesh is not mesh or space.generation != mesh.generation:
            raise ValueError("mesh generation mismatch between operands")


def _block_entries(rows_dofs, cols_dofs, block):
    ne, na, nb = block.shape
    rows = np.broadcast_to(rows_dofs[:, :, None], (ne, na, nb)).ravel()
    cols = np.broadcast_to(cols_dofs[:, None, :], (ne, na, nb)).ravel()
    return rows, cols, block.ravel()


def _apply_dirichlet(rows, cols, vals, rhs, fixed, n):
    """Symmetric elimination: zero rows/columns, unit diagonal, zero rhs."""
    is_fixed = np.zeros(n, dtype=bool)
    is_fixed[fixed] = True
    keep = ~(is_fixed[rows] | is_fixed[cols])
    rows = np.concatenate([rows[keep], fixed])
    cols = np.concatenate([cols[keep], fixed])
    vals = np.concatenate([vals[keep], np.ones(len(fixed))])
    rhs[fixed] = 0.0
    return rows, cols, vals, rhs


def _to_system(rows, cols, vals, rhs, n) -> SparseSystem:
    mat = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    mat.sum_duplicates()
    mat.sort_indices()
    return SparseSystem(mat, rhs)


def pressure_mean_vector(mesh: Mesh, pressure: DofMap) -> np.ndarray:
    """Vector m with m_k = integral of the k-th pressure basis function."""
    batch = _Batch(mesh, pressure)
    ones = np.ones(batch.detw.shape)
    local = kernels.load(batch.phi, ones, batch.detw)
    m = np.zeros(pressure.n_dofs)
    np.add.at(m, batch.dofs, local)
    return m


def assemble_buoyancy_rhs(mesh: Mesh, velocity: DofMap, t_prev: FieldVec,
                          g) -> np.ndarray:
    """Raw buoyancy load (T_prev g, v) on velocity dofs, no BC applied."""
    _check_same_mesh(mesh, velocity, t_prev)
    batch = _Batch(mesh, velocity)
    tbatch = _Batch(mesh, t_prev.space)
    tvals = tbatch.values(t_prev)
    local = kernels.load(batch.phi, tvals, batch.detw)
    n_u = velocity.n_dofs
    rhs = np.zeros(2 * n_u)
    for c in range(2):
        np.add.at(rhs, batch.dofs + c * n_u, float(g[c]) * local)
    return rhs


def assemble_oseen(mesh: Mesh, velocity: DofMap, pressure: DofMap,
                   w: FieldVec, t_prev: FieldVec,
                   cfg: ProblemConfig) -> SparseSystem:
    """Linearized convection step around the previous iterate w.

    Unknown layout: velocity x-dofs, velocity y-dofs, pressure dofs, then one
    scalar multiplier enforcing the zero pressure mean.
    """
    _check_same_mesh(mesh, velocity, pressure, w, t_prev)
    vb = _Batch(mesh, velocity)
    pb = _Batch(mesh, pressure)

    w_vals = vb.vector_values(w)
    div_w = vb.divergence(w)

    a_scalar = cfg.nu * kernels.grad_grad(vb.gphys, vb.detw)
    a_scalar += kernels.transport(vb.phi, vb.gphys, w_vals, vb.detw)
    a_scalar += 0.5 * kernels.scaled_mass(vb.phi, div_w, vb.detw)
    b_blocks = kernels.div_blocks(pb.phi, vb.gphys, vb.detw)

    n_u = velocity.n_dofs
    n_p = pressure.n_dofs
    n = 2 * n_u + n_p + 1
    mu = n - 1

    rows_parts, cols_parts, vals_parts = [], [], []

    for c in range(2):
        vd = vb.dofs + c * n_u
        r, cc, v = _block_entries(vd, vd, a_scalar)
        rows_parts.append(r); cols_parts.append(cc); vals_parts.append(v)

        pd = pb.dofs + 2 * n_u
        bt = np.ascontiguousarray(np.swapaxes(b_blocks[:, :, :, c], 1, 2))
        r, cc, v = _block_entries(vd, pd, -bt)
        rows_parts.append(r); cols_parts.append(cc); vals_parts.append(v)
        r, cc, v = _block_entries(pd, vd, -b_blocks[:, :, :, c])
        rows_parts.append(r); cols_parts.append(cc); vals_parts.append(v)

    m = pressure_mean_vector(mesh, pressure)
    p_idx = 2 * n_u + np.arange(n_p)
    rows_parts.append(p_idx)
    cols_parts.append(np.full(n_p, mu))
    vals_parts.append(m)
    rows_parts.append(np.full(n_p, mu))
    cols_parts.append(p_idx)
    vals_parts.append(m)

    rows = np.concatenate(rows_parts)
    cols = np.concatenate(cols_parts)
    vals = np.concatenate(vals_parts)

    rhs = np.zeros(n)
    rhs[: 2 * n_u] = assemble_buoyancy_rhs(mesh, velocity, t_prev, cfg.g)

    fixed = velocity.dirichlet_all_components()
    rows, cols, vals, rhs = _apply_dirichlet(rows, cols, vals, rhs, fixed, n)
    return _to_system(rows, cols, vals, rhs, n)


def assemble_heat(mesh: Mesh, temperature: DofMap, u: FieldVec,
                  cfg: ProblemConfig) -> SparseSystem:
    """Convected heat step with the point load h r(z) on the right."""
    _check_same_mesh(mesh, temperature, u)
    tb = _Batch(mesh, temperature)
    ub = _Batch(mesh, u.space)
    u_vals = ub.vector_values(u)

    a = cfg.kappa * kernels.grad_grad(tb.gphys, tb.detw)
    a -= kernels.transport_dual(tb.phi, tb.gphys, u_vals, tb.detw)

    n = temperature.n_dofs
    rows, cols, vals = _block_entries(tb.dofs, tb.dofs, a)

    rhs = np.zeros(n)
    rhs += delta_load(mesh, temperature, cfg.z, cfg.h_strength)

    fixed = temperature.dirichlet_dofs
    rows, cols, vals, rhs = _apply_dirichlet(rows, cols, vals, rhs, fixed, n)
    return _to_system(rows, cols, vals, rhs, n)


def delta_load(mesh: Mesh, space: DofMap, z, strength: float) -> np.ndarray:
    """Point load vector: strength times each basis function at z.

    The value is assembled once from a single containing element; basis
    continuity makes the choice immaterial when z sits on a shared face.
    """
    hits = locate(mesh, z)
    if not hits:
        raise ValueError(f"source point {tuple(z)} lies outside the domain")
    e = min(hits)
    lam = mesh.barycentric(z)[e]
    phi = shape_values(space.family, lam[None, :])[0]
    rhs = np.zeros(space.n_dofs)
    np.add.at(rhs, space.element_dofs[e], strength * phi)
    return rhs


def skew_trilinear(mesh: Mesh, velocity: DofMap, w: FieldVec, u: FieldVec,
                   v: FieldVec) -> float:
    """N(w; u, v) = ((w . grad) u, v) + 1/2 ((div w) u, v).

    Vanishes when u = v has zero boundary trace, which keeps the convective
    term energy-neutral.
    """
    _check_same_mesh(mesh, velocity, w, u, v)
    vb = _Batch(mesh, velocity)
    w_vals = vb.vector_values(w)
    div_w = vb.divergence(w)
    u_vals = vb.vector_values(u)
    v_vals = vb.vector_values(v)

    total = 0.0
    for c in range(2):
        coef = u.component(c)[vb.dofs]
        grad_uc = np.einsum("ea,eqad->eqd", coef, vb.gphys)
        conv = np.einsum("eqd,eqd->eq", w_vals, grad_uc)
        total += np.einsum("eq,eq,eq->", vb.detw, conv, v_vals[:, :, c])
    dot_uv = np.einsum("eqc,eqc->eq", u_vals, v_vals)
    total += 0.5 * np.einsum("eq,eq,eq->", vb.detw, div_w, dot_uv)
    return float(total)
