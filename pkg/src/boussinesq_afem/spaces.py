"""Lagrange finite element spaces on triangle meshes.

Supports scalar and two-component P1, P2 and bubble-enriched P1 spaces with
homogeneous Dirichlet bookkeeping, nodal interpolation, point evaluation and
the weighted gradient seminorm used for diagnostics.

Vector fields are stored component-major: all x-coefficients first, then all
y-coefficients.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .mesh import Mesh, locate
from .quadrature import simplex_rule

P1 = "P1"
P2 = "P2"
P1BUBBLE = "P1Bubble"

N_LOCAL = {P1: 3, P2: 6, P1BUBBLE: 4}

# gradients of (l0, l1, l2) with respect to reference coordinates (xi, eta)
_DLAMBDA = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])


def shape_values(family: str, bary) -> np.ndarray:
    """Basis values at barycentric points, shape (nq, n_local)."""
    lam = np.atleast_2d(np.asarray(bary, dtype=float))
    l0, l1, l2 = lam[:, 0], lam[:, 1], lam[:, 2]
    if family == P1:
        return lam.copy()
    if family == P2:
        return np.column_stack([
            l0 * (2 * l0 - 1), l1 * (2 * l1 - 1), l2 * (2 * l2 - 1),
            4 * l0 * l1, 4 * l1 * l2, 4 * l2 * l0,
        ])
    if family == P1BUBBLE:
        return np.column_stack([l0, l1, l2, 27 * l0 * l1 * l2])
    raise ValueError(f"unknown element family {family!r}")


def shape_ref_grads(family: str, bary) -> np.ndarray:
    """Reference-coordinate basis gradients, shape (nq, n_local, 2)."""
    lam = np.atleast_2d(np.asarray(bary, dtype=float))
    nq = len(lam)
    d = _DLAMBDA
    if family == P1:
        return np.broadcast_to(d, (nq, 3, 2)).copy()
    if family == P2:
        g = np.empty((nq, 6, 2))
        for i in range(3):
            g[:, i] = (4 * lam[:, i, None] - 1) * d[i]
        for k, (i, j) in enumerate(((0, 1), (1, 2), (2, 0))):
            g[:, 3 + k] = 4 * (lam[:, j, None] * d[i] + lam[:, i, None] * d[j])
        return g
    if family == P1BUBBLE:
        g = np.empty((nq, 4, 2))
        g[:, :3] = d
        g[:, 3] = 27 * (
            (lam[:, 1] * lam[:, 2])[:, None] * d[0]
            + (lam[:, 0] * lam[:, 2])[:, None] * d[1]
            + (lam[:, 0] * lam[:, 1])[:, None] * d[2]
        )
        return g
    raise ValueError(f"unknown element family {family!r}")


def eval_basis(family: str, bary) -> tuple[np.ndarray, np.ndarray]:
    """Values and reference gradients of all local basis functions."""
    lam = np.asarray(bary, dtype=float)
    if abs(lam.sum() - 1.0) > 1e-10:
        raise ValueError("barycentric coordinates must sum to 1")
    return shape_values(family, lam)[0], shape_ref_grads(family, lam)[0]


@dataclass(frozen=True)
class DofMap:
    """Scalar degree-of-freedom layout for one family on one mesh.

    ``n_dofs`` counts scalar dofs; a field with c components has
    ``c * n_dofs`` coefficients.
    """

    mesh: Mesh
    family: str
    components: int
    n_dofs: int
    element_dofs: np.ndarray
    dirichlet_dofs: np.ndarray
    generation: int

    @property
    def n_local(self) -> int:
        return N_LOCAL[self.family]

    @property
    def n_total(self) -> int:
        return self.n_dofs * self.components

    def dirichlet_all_components(self) -> np.ndarray:
        """Global coefficient indices of all Dirichlet entries."""
        offs = np.arange(self.components) * self.n_dofs
        return (self.dirichlet_dofs[None, :] + offs[:, None]).ravel()


def build_space(mesh: Mesh, family: str, components: int = 1,
                homogeneous_dirichlet: bool = True) -> DofMap:
    """Construct the dof map of a P1 / P2 / bubble space on a mesh."""
    if family not in N_LOCAL:
        raise ValueError(f"unknown element family {family!r}")
    if components not in (1, 2):
        raise ValueError("components must be 1 or 2")
    nv, ne = mesh.n_vertices, mesh.n_elements
    if family == P1:
        n_dofs = nv
        element_dofs = mesh.elements.copy()
    elif family == P2:
        n_dofs = nv + mesh.n_edges
        element_dofs = np.hstack([mesh.elements, nv + mesh.element_edges])
    else:
        n_dofs = nv + ne
        element_dofs = np.hstack([
            mesh.elements, (nv + np.arange(ne, dtype=np.int64))[:, None]
        ])

    if homogeneous_dirichlet:
        dirichlet = [np.flatnonzero(mesh.boundary_vertex)]
        if family == P2:
            dirichlet.append(nv + np.flatnonzero(mesh.boundary_edge))
        dirichlet = np.sort(np.concatenate(dirichlet)).astype(np.int64)
    else:
        dirichlet = np.empty(0, dtype=np.int64)

    element_dofs = np.ascontiguousarray(element_dofs, dtype=np.int64)
    element_dofs.flags.writeable = False
    dirichlet.flags.writeable = False
    return DofMap(mesh, family, components, n_dofs, element_dofs,
                  dirichlet, mesh.generation)


@dataclass
class FieldVec:
    """Coefficient vector bound to a dof map."""

    values: np.ndarray
    space: DofMap

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.space.n_total,):
            raise ValueError(
                f"coefficient vector has length {self.values.shape}, "
                f"expected ({self.space.n_total},)"
            )

    @classmethod
    def zeros(cls, space: DofMap) -> "FieldVec":
        return cls(np.zeros(space.n_total), space)

    def component(self, c: int) -> np.ndarray:
        n = self.space.n_dofs
        return self.values[c * n:(c + 1) * n]


def node_coordinates(space: DofMap) -> np.ndarray:
    """Coordinates of the nodal points of a scalar space, (n_dofs, 2)."""
    mesh = space.mesh
    if space.family == P1:
        return mesh.vertices.copy()
    if space.family == P2:
        mids = 0.5 * (mesh.vertices[mesh.edges[:, 0]]
                      + mesh.vertices[mesh.edges[:, 1]])
        return np.vstack([mesh.vertices, mids])
    centers = mesh.vertices[mesh.elements].mean(axis=1)
    return np.vstack([mesh.vertices, centers])


def interpolate(space: DofMap, fn) -> FieldVec:
    """Nodal interpolation of fn(x, y); bubble dofs match the barycenter."""
    nodes = node_coordinates(space)
    vals = []
    for c in range(space.components):
        v = np.asarray([float(np.atleast_1d(fn(x, y))[c]) for x, y in nodes])
        if space.family == P1BUBBLE:
            nv = space.mesh.n_vertices
            lin = v[space.mesh.elements].mean(axis=1)
            v[nv:] = v[nv:] - lin  # bubble = 1 at barycenter, P1 part removed
        vals.append(v)
    return FieldVec(np.concatenate(vals), space)


# -- batched evaluation on elements -------------------------------------


def values_on(field: FieldVec, elems, bary) -> np.ndarray:
    """Field values at barycentric points of elements.

    Returns (ne, nq) for scalar fields or (ne, nq, 2) for vector fields.
    """
    sp = field.space
    phi = shape_values(sp.family, bary)
    dofs = sp.element_dofs[elems]
    comps = []
    for c in range(sp.components):
        coef = field.component(c)[dofs]
        comps.append(np.einsum("ea,qa->eq", coef, phi))
    if sp.components == 1:
        return comps[0]
    return np.stack(comps, axis=-1)


def gradients_on(field: FieldVec, elems, bary) -> np.ndarray:
    """Physical gradients at barycentric points of elements.

    Returns (ne, nq, 2) for scalar fields, or (ne, nq, 2, 2) with layout
    [component, derivative] for vector fields.
    """
    sp = field.space
    gref = shape_ref_grads(sp.family, bary)
    inv = sp.mesh.inv_jac_t[elems]
    gphys = np.einsum("edk,qak->eqad", inv, gref)
    dofs = sp.element_dofs[elems]
    comps = []
    for c in range(sp.components):
        coef = field.component(c)[dofs]
        comps.append(np.einsum("ea,eqad->eqd", coef, gphys))
    if sp.components == 1:
        return comps[0]
    return np.stack(comps, axis=-2)


def laplacian_vertex_values(field: FieldVec, elems) -> np.ndarray:
    """Laplacian of the field at the 3 vertices of each element.

    The elementwise Laplacian is affine (zero for P1, constant for P2),
    so vertex values determine it exactly.  Returns (ne, 3) or (ne, 3, 2).
    """
    sp = field.space
    elems = np.asarray(elems, dtype=np.int64)
    g = sp.mesh.inv_jac_t[elems] @ _DLAMBDA.T  # (ne, 2, 3): physical grad l_i
    gdot = np.einsum("edi,edj->eij", g, g)
    out_shape = (len(elems), 3) if sp.components == 1 else (len(elems), 3, 2)
    out = np.zeros(out_shape)
    if sp.family == P1:
        return out
    dofs = sp.element_dofs[elems]
    for c in range(sp.components):
        coef = field.component(c)[dofs]
        if sp.family == P2:
            const = 4 * np.einsum("ei,eii->e", coef[:, :3], gdot)
            for k, (i, j) in enumerate(((0, 1), (1, 2), (2, 0))):
                const = const + 8 * coef[:, 3 + k] * gdot[:, i, j]
            vals = np.repeat(const[:, None], 3, axis=1)
        else:
            # bubble: affine with vertex-k value 54 (g_{k+1} . g_{k+2})
            vert = 54 * np.column_stack(
                [gdot[:, 1, 2], gdot[:, 2, 0], gdot[:, 0, 1]]
            )
            vals = coef[:, 3, None] * vert
        if sp.components == 1:
            out = vals
        else:
            out[:, :, c] = vals
    return out


def laplacian_on(field: FieldVec, elems, bary) -> np.ndarray:
    """Laplacian values at barycentric points; (ne, nq) or (ne, nq, 2)."""
    lam = np.atleast_2d(np.asarray(bary, dtype=float))
    vert = laplacian_vertex_values(field, elems)
    if field.space.components == 1:
        return np.einsum("ek,qk->eq", vert, lam)
    return np.einsum("ekc,qk->eqc", vert, lam)


def element_laplacian(field: FieldVec, element: int) -> np.ndarray:
    """Affine coefficients (c0, cx, cy) of the field Laplacian on an element.

    Shape (3,) for scalar fields, (2, 3) per component for vector fields.
    """
    mesh = field.space.mesh
    vert = laplacian_vertex_values(field, [element])[0]
    pts = mesh.vertices[mesh.elements[element]]
    vander = np.column_stack([np.ones(3), pts])
    if field.space.components == 1:
        return np.linalg.solve(vander, vert)
    return np.linalg.solve(vander, vert).T


def point_evaluate(field: FieldVec, p):
    """Value of the finite element function at a point of the closed domain."""
    mesh = field.space.mesh
    hits = locate(mesh, p)
    if not hits:
        raise ValueError(f"point {tuple(p)} lies outside the mesh")
    e = min(hits)
    lam = mesh.barycentric(p)[e]
    vals = values_on(field, np.array([e]), lam[None, :])
    if field.space.components == 1:
        return float(vals[0, 0])
    return vals[0, 0].copy()


# -- weighted gradient seminorm ------------------------------------------


def _quadrisect(corners):
    """Split a barycentric triangle into 4 similar children."""
    c0, c1, c2 = corners
    m01, m12, m20 = 0.5 * (c0 + c1), 0.5 * (c1 + c2), 0.5 * (c2 + c0)
    return [
        (c0, m01, m20), (m01, c1, m12), (m20, m12, c2), (m01, m12, m20),
    ]


def _contains_bary(corners, z_bary) -> bool:
    """Is z_bary inside the barycentric sub-triangle spanned by corners?"""
    basis = np.column_stack([corners[1] - corners[0], corners[2] - corners[0]])
    loc, *_ = np.linalg.lstsq(basis, z_bary - corners[0], rcond=None)
    return bool(loc[0] >= -1e-12 and loc[1] >= -1e-12 and loc.sum() <= 1 + 1e-12)


def _graded_cells(z_bary, levels):
    """Leaf sub-triangles of the reference cell, graded toward z_bary.

    Yields (corners, area_fraction) pairs; corners are barycentric triples.
    One child per level keeps refining toward z, the rest become leaves.
    """
    unit = (np.array([1.0, 0, 0]), np.array([0, 1.0, 0]), np.array([0, 0, 1.0]))
    cells = [(unit, 1.0)]
    for _ in range(levels):
        next_cells = []
        for corners, frac in cells:
            refined = False
            for ch in _quadrisect(corners):
                if not refined and _contains_bary(ch, z_bary):
                    next_cells.append((ch, frac / 4))
                    refined = True
                else:
                    yield ch, frac / 4
        cells = next_cells
        if not cells:
            break
    yield from cells


def weighted_grad_norm(field: FieldVec, alpha: float, z,
                       levels: int = 8, degree: int = 8) -> float:
    """(integral of |grad field|^2 |x - z|^alpha)^(1/2) by graded quadrature.

    Elements whose closure contains z are recursively quadrisected toward z
    before the base rule is applied; the integrand is bounded for alpha > 0.
    """
    if not 0.0 < alpha < 2.0:
        raise ValueError(f"alpha must lie in (0, 2), got {alpha}")
    sp = field.space
    mesh = sp.mesh
    z = np.asarray(z, dtype=float)
    rule = simplex_rule(degree)
    nq = len(rule.weights)

    singular = sorted(locate(mesh, z))
    regular = np.setdiff1d(np.arange(mesh.n_elements), singular)

    total = 0.0
    if len(regular):
        grads = gradients_on(field, regular, rule.points)
        sq = (grads ** 2).sum(axis=tuple(range(2, grads.ndim)))
        pts = _physical_points(mesh, regular, rule.points)
        wdist = np.linalg.norm(pts - z, axis=-1) ** alpha
        total += float(np.einsum(
            "e,q,eq,eq->", mesh.det_jac[regular], rule.weights, sq, wdist))

    for e in singular:
        lam_z = mesh.barycentric(z)[e]
        for corners, frac in _graded_cells(lam_z, levels):
            # map rule points into the sub-triangle (still barycentric)
            sub = (rule.points @ np.vstack(corners))
            grads = gradients_on(field, np.array([e]), sub)
            sq = (grads ** 2).sum(axis=tuple(range(2, grads.ndim)))[0]
            pts = _physical_points(mesh, np.array([e]), sub)[0]
            wdist = np.linalg.norm(pts - z, axis=-1) ** alpha
            total += float(mesh.det_jac[e] * frac
                           * np.einsum("q,q,q->", rule.weights, sq, wdist))
    return float(np.sqrt(total))


def _physical_points(mesh: Mesh, elems, bary) -> np.ndarray:
    """Physical coordinates of barycentric points, (ne, nq, 2)."""
    lam = np.atleast_2d(np.asarray(bary, dtype=float))
    corners = mesh.vertices[mesh.elements[elems]]
    return np.einsum("qk,ekd->eqd", lam, corners)
