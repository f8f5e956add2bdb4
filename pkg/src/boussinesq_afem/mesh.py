"""Conforming triangulations of the unit square and L-shaped domains.

Meshes are immutable: refinement returns a new :class:`Mesh` with a bumped
generation counter.  Refinement is longest-edge bisection with a recursive
conformity closure, so the returned mesh never contains hanging nodes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np

# A point is inside a closed element if all barycentric coordinates clear
# this (negative) threshold; z = (0.5, 0.5) sits exactly on grid vertices.
BARYCENTRIC_TOL = 1.0e-12

SQUARE = "square"
LSHAPE = "lshape"


class Point2(NamedTuple):
    x: float
    y: float


class MeshError(ValueError):
    """Raised when mesh data violates a structural invariant."""


@dataclass(frozen=True)
class Patch:
    """Elements surrounding a center element (the center is a member)."""

    center: int
    members: frozenset[int]

    def __post_init__(self):
        if self.center not in self.members:
            raise MeshError("patch center must belong to its member set")


class Mesh:
    """Triangle mesh with edge adjacency and bisection bookkeeping.

    Parameters
    ----------
    vertices : (nv, 2) float array
    elements : (ne, 3) int array
        Vertex index triples, counterclockwise.
    generation : int
        Refinement generation, 0 for an initial mesh.
    """

    def __init__(self, vertices, elements, generation: int = 0):
        vertices = np.ascontiguousarray(vertices, dtype=float)
        elements = np.ascontiguousarray(elements, dtype=np.int64)
        if vertices.ndim != 2 or vertices.shape[1] != 2:
            raise MeshError("vertices must be an (nv, 2) array")
        if elements.ndim != 2 or elements.shape[1] != 3:
            raise MeshError("elements must be an (ne, 3) array")
        if not np.all(np.isfinite(vertices)):
            raise MeshError("vertex coordinates must be finite")
        if elements.min(initial=0) < 0 or elements.max(initial=-1) >= len(vertices):
            raise MeshError("element vertex index out of range")

        self.vertices = vertices
        self.elements = elements
        self.generation = int(generation)

        p0 = vertices[elements[:, 0]]
        p1 = vertices[elements[:, 1]]
        p2 = vertices[elements[:, 2]]
        d1 = p1 - p0
        d2 = p2 - p0
        signed = 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])
        if np.any(signed <= 0.0):
            bad = int(np.argmin(signed))
            raise MeshError(
                f"element {bad} has non-positive signed area {signed[bad]:.3e}; "
                "vertices must be counterclockwise and non-degenerate"
            )
        self.areas = signed

        self._build_edges()
        self._build_boundary()

        e01 = np.linalg.norm(p1 - p0, axis=1)
        e12 = np.linalg.norm(p2 - p1, axis=1)
        e20 = np.linalg.norm(p0 - p2, axis=1)
        self.element_edge_lengths = np.column_stack([e01, e12, e20])
        self.h = self.element_edge_lengths.max(axis=1)
        self.edge_lengths = np.linalg.norm(
            vertices[self.edges[:, 1]] - vertices[self.edges[:, 0]], axis=1
        )

        self._inv_jac_t = None
        for arr in (self.vertices, self.elements, self.areas, self.edges,
                    self.edge_elements, self.element_edges, self.h,
                    self.element_edge_lengths, self.edge_lengths):
            arr.flags.writeable = False

    def _build_edges(self):
        ne = len(self.elements)
        edge_of: dict[tuple[int, int], int] = {}
        edges: list[tuple[int, int]] = []
        edge_elements: list[list[int]] = []
        element_edges = np.empty((ne, 3), dtype=np.int64)
        # local edge k of an element joins local vertices k and (k + 1) % 3
        for e in range(ne):
            tri = self.elements[e]
            for k in range(3):
                a, b = int(tri[k]), int(tri[(k + 1) % 3])
                key = (a, b) if a < b else (b, a)
                eid = edge_of.get(key)
                if eid is None:
                    eid = len(edges)
                    edge_of[key] = eid
                    edges.append(key)
                    edge_elements.append([e])
                else:
                    edge_elements[eid].append(e)
                element_edges[e, k] = eid
        adj = np.full((len(edges), 2), -1, dtype=np.int64)
        for eid, elems in enumerate(edge_elements):
            if len(elems) > 2:
                raise MeshError(f"edge {eid} is shared by {len(elems)} elements")
            adj[eid, : len(elems)] = elems
        self.edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        self.edge_elements = adj
        self.element_edges = element_edges

    def _build_boundary(self):
        self.boundary_edge = self.edge_elements[:, 1] < 0
        bmask = np.zeros(len(self.vertices), dtype=bool)
        bverts = self.edges[self.boundary_edge]
        bmask[bverts.ravel()] = True
        self.boundary_vertex = bmask
        self.boundary_edge.flags.writeable = False
        self.boundary_vertex.flags.writeable = False

    # -- basic queries ---------------------------------------------------

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_elements(self) -> int:
        return len(self.elements)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def total_area(self) -> float:
        return float(self.areas.sum())

    @property
    def inv_jac_t(self) -> np.ndarray:
        """Per-element inverse transpose of the reference-map Jacobian."""
        if self._inv_jac_t is None:
            p0 = self.vertices[self.elements[:, 0]]
            d1 = self.vertices[self.elements[:, 1]] - p0
            d2 = self.vertices[self.elements[:, 2]] - p0
            det = 2.0 * self.areas
            inv = np.empty((self.n_elements, 2, 2))
            # J = [d1 d2] columnwise; inv(J)^T = adj(J)^T / det
            inv[:, 0, 0] = d2[:, 1]
            inv[:, 0, 1] = -d1[:, 1]
            inv[:, 1, 0] = -d2[:, 0]
            inv[:, 1, 1] = d1[:, 0]
            inv /= det[:, None, None]
            inv.flags.writeable = False
            self._inv_jac_t = inv
        return self._inv_jac_t

    @property
    def det_jac(self) -> np.ndarray:
        return 2.0 * self.areas

    def refinement_edge(self, element: int) -> int:
        """Longest edge of the element; ties go to the smallest edge id."""
        eids = self.element_edges[element]
        lengths = self.edge_lengths[eids]
        best = np.flatnonzero(lengths == lengths.max())
        return int(eids[best].min())

    def min_angle(self) -> float:
        """Smallest interior angle over all elements, in radians."""
        lens = self.element_edge_lengths
        a, b, c = lens[:, 0], lens[:, 1], lens[:, 2]
        angles = []
        for opp, e1, e2 in ((a, b, c), (b, c, a), (c, a, b)):
            cosv = np.clip((e1**2 + e2**2 - opp**2) / (2 * e1 * e2), -1.0, 1.0)
            angles.append(np.arccos(cosv))
        return float(np.min(angles))

    def barycentric(self, p) -> np.ndarray:
        """Barycentric coordinates of point p in every element, (ne, 3)."""
        p = np.asarray(p, dtype=float)
        d = p[None, :] - self.vertices[self.elements[:, 0]]
        # reference coordinates need inv(J); inv_jac_t stores its transpose
        loc = np.einsum("ekd,ek->ed", self.inv_jac_t, d)
        lam = np.empty((self.n_elements, 3))
        lam[:, 1] = loc[:, 0]
        lam[:, 2] = loc[:, 1]
        lam[:, 0] = 1.0 - loc[:, 0] - loc[:, 1]
        return lam

    def has_hanging_nodes(self) -> bool:
        """Diagnostic conformity scan: any vertex strictly inside an edge?"""
        v = self.vertices
        for eid, (a, b) in enumerate(self.edges):
            pa, pb = v[a], v[b]
            d = pb - pa
            ll = d @ d
            t = ((v - pa) @ d) / ll
            dist2 = np.sum((v - (pa + np.outer(t, d))) ** 2, axis=1)
            on = (dist2 < 1e-24 * ll) & (t > 1e-12) & (t < 1 - 1e-12)
            on[a] = on[b] = False
            if np.any(on):
                return True
        return False


def build_initial_mesh(domain: str, n: int) -> Mesh:
    """Structured initial mesh with n subdivisions per unit length.

    Every grid square is split by its diagonal of positive slope.  The
    L-shaped domain is (-1,1)^2 minus the closed fourth-quadrant square.
    """
    if n < 1:
        raise ValueError("n must be a positive integer")
    if domain == SQUARE:
        lo, hi = 0, n
        removed = lambda i, j: False  # noqa: E731
    elif domain == LSHAPE:
        lo, hi = -n, n
        removed = lambda i, j: i >= 0 and j < 0  # noqa: E731
    else:
        raise ValueError(f"unknown domain {domain!r}")

    index = {}
    verts = []

    def vid(i, j):
        key = (i, j)
        if key not in index:
            index[key] = len(verts)
            verts.append((i / n, j / n))
        return index[key]

    tris = []
    for j in range(lo, hi):
        for i in range(lo, hi):
            if removed(i, j):
                continue
            bl, br = vid(i, j), vid(i + 1, j)
            tr, tl = vid(i + 1, j + 1), vid(i, j + 1)
            tris.append((bl, br, tr))
            tris.append((bl, tr, tl))
    return Mesh(np.array(verts, dtype=float), np.array(tris, dtype=np.int64))


def _rotate_to_edge(tri, local_edge: int):
    """Cyclic relabeling (a, b, c) of tri so the given local edge is (a, b)."""
    k = local_edge
    return tri[k], tri[(k + 1) % 3], tri[(k + 2) % 3]


def bisect(mesh: Mesh, marked: Iterable[int], return_parents: bool = False):
    """Bisect marked elements through their longest edges.

    Neighbors are refined recursively until the result is conforming.  An
    empty marked set returns the input mesh unchanged.  With
    ``return_parents`` the parent element id of every new element is
    returned alongside the refined mesh.
    """
    marked = sorted(set(int(k) for k in marked))
    if not marked:
        if return_parents:
            return mesh, np.arange(mesh.n_elements, dtype=np.int64)
        return mesh
    if marked[0] < 0 or marked[-1] >= mesh.n_elements:
        raise ValueError("marked element id out of range")

    # Closure: an edge set such that every element touching a split edge
    # has its own refinement edge split as well.
    split: set[int] = set()
    stack = list(marked)
    while stack:
        e = stack.pop()
        re = mesh.refinement_edge(e)
        if re in split:
            continue
        split.add(re)
        for nb in mesh.edge_elements[re]:
            if nb >= 0:
                stack.append(int(nb))

    # One midpoint vertex per split edge, created in edge-id order.
    new_verts = [mesh.vertices]
    midpoint = {}
    next_id = mesh.n_vertices
    for eid in sorted(split):
        a, b = mesh.edges[eid]
        new_verts.append(0.5 * (mesh.vertices[a] + mesh.vertices[b])[None, :])
        midpoint[eid] = next_id
        next_id += 1
    vertices = np.vstack(new_verts)

    def halves(a, b, c, mid):
        # (a, b) is the split edge; both children stay counterclockwise
        return (a, mid, c), (mid, b, c)

    tris = []
    parents = []
    for e in range(mesh.n_elements):
        eids = mesh.element_edges[e]
        local_split = [k for k in range(3) if eids[k] in split]
        if not local_split:
            tris.append(tuple(mesh.elements[e]))
            parents.append(e)
            continue
        kref = int(np.where(eids == mesh.refinement_edge(e))[0][0])
        a, b, c = _rotate_to_edge(mesh.elements[e], kref)
        child1, child2 = halves(a, b, c, midpoint[eids[kref]])
        # child1 keeps parent edge (c, a) = local kref+2; child2 keeps (b, c)
        for child, inherited in ((child1, (kref + 2) % 3), (child2, (kref + 1) % 3)):
            eid = eids[inherited]
            if eid in split:
                ia, ib = mesh.edges[eid]
                k = next(k for k in range(3)
                         if {child[k], child[(k + 1) % 3]} == {int(ia), int(ib)})
                ca, cb, cc = _rotate_to_edge(child, k)
                tris.extend(halves(ca, cb, cc, midpoint[eid]))
                parents.extend((e, e))
            else:
                tris.append(child)
                parents.append(e)

    refined = Mesh(vertices, np.array(tris, dtype=np.int64), mesh.generation + 1)
    if return_parents:
        return refined, np.asarray(parents, dtype=np.int64)
    return refined


def element_patches(mesh: Mesh, element: int) -> tuple[Patch, Patch]:
    """Edge patch and vertex patch of an element (both contain it)."""
    if not 0 <= element < mesh.n_elements:
        raise ValueError("element id out of range")
    edge_members = {element}
    for eid in mesh.element_edges[element]:
        for nb in mesh.edge_elements[eid]:
            if nb >= 0:
                edge_members.add(int(nb))
    vmask = np.isin(mesh.elements, mesh.elements[element]).any(axis=1)
    vertex_members = set(np.flatnonzero(vmask).tolist())
    return (
        Patch(element, frozenset(edge_members)),
        Patch(element, frozenset(vertex_members)),
    )


def locate(mesh: Mesh, p) -> set[int]:
    """All elements whose closure contains p; empty if p is outside."""
    lam = mesh.barycentric(p)
    hits = np.flatnonzero(np.all(lam >= -BARYCENTRIC_TOL, axis=1))
    return set(int(k) for k in hits)


def geometry(mesh: Mesh, element: int, z) -> tuple[float, float, float]:
    """Diameter h_K, max vertex distance to z, and area of an element."""
    if not 0 <= element < mesh.n_elements:
        raise ValueError("element id out of range")
    z = np.asarray(z, dtype=float)
    pts = mesh.vertices[mesh.elements[element]]
    h = float(mesh.h[element])
    dist = float(np.linalg.norm(pts - z[None, :], axis=1).max())
    return h, dist, float(mesh.areas[element])
