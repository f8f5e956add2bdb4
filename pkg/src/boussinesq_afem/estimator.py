"""Residual error indicators for the coupled flow and heat approximation.

Per element K the flow indicator collects the momentum residual, the
divergence defect and the normal-flux jumps of the discrete stress; the heat
indicator carries the distance-weighted residual and flux jumps of the
temperature plus a point-source term |h| h_K^alpha on every closed element
containing the source.  Indicator totals are plain sums of squares.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .config import ProblemConfig
from .mesh import Mesh, locate
from .quadrature import edge_rule, simplex_rule
from .solver import SolutionState
from .spaces import (
    gradients_on,
    laplacian_on,
    shape_ref_grads,
    shape_values,
    values_on,
)

VOLUME_DEGREE = 10
EDGE_DEGREE = 8


@dataclass(frozen=True)
class Indicators:
    """Per-element squared indicators and their global roots."""

    ns_sq: np.ndarray
    heat_sq: np.ndarray

    def __post_init__(self):
        self.ns_sq.flags.writeable = False
        self.heat_sq.flags.writeable = False

    @property
    def total_sq(self) -> np.ndarray:
        return self.ns_sq + self.heat_sq

    @property
    def per_element(self) -> np.ndarray:
        return np.sqrt(self.total_sq)

    @property
    def estimator_ns(self) -> float:
        return float(np.sqrt(self.ns_sq.sum()))

    @property
    def estimator_heat(self) -> float:
        return float(np.sqrt(self.heat_sq.sum()))

    @property
    def estimator_total(self) -> float:
        return float(np.sqrt(self.total_sq.sum()))

    def __len__(self) -> int:
        return len(self.ns_sq)


def _check_state(mesh: Mesh, state: SolutionState):
    if state.generation != mesh.generation or state.u.space.mesh is not mesh:
        raise ValueError("solution state does not live on this mesh")


def _volume_residuals(mesh: Mesh, state: SolutionState, cfg: ProblemConfig,
                      elems: np.ndarray, degree: int):
    """Squared L2 norms of the strong residuals on the given elements."""
    rule = simplex_rule(degree)
    pts = rule.points
    detw = mesh.det_jac[elems, None] * rule.weights[None, :]

    u_vals = values_on(state.u, elems, pts)
    grad_u = gradients_on(state.u, elems, pts)
    lap_u = laplacian_on(state.u, elems, pts)
    div_u = grad_u[:, :, 0, 0] + grad_u[:, :, 1, 1]
    grad_p = gradients_on(state.p, elems, pts)
    t_vals = values_on(state.t, elems, pts)
    grad_t = gradients_on(state.t, elems, pts)
    lap_t = laplacian_on(state.t, elems, pts)

    conv_u = np.einsum("eqd,eqcd->eqc", u_vals, grad_u)
    r_ns = (cfg.nu * lap_u - conv_u - 0.5 * div_u[:, :, None] * u_vals
            - grad_p + t_vals[:, :, None] * np.asarray(cfg.g))
    conv_t = np.einsum("eqd,eqd->eq", u_vals, grad_t)
    r_heat = cfg.kappa * lap_t - conv_t - div_u * t_vals

    return (
        kernels.sq_norm(np.ascontiguousarray(r_ns), detw),
        kernels.sq_norm(np.ascontiguousarray(div_u), detw),
        kernels.sq_norm(np.ascontiguousarray(r_heat), detw),
    )


def _edge_tables(family: str, t_params: np.ndarray):
    """Trace tables for all (lo, hi) local-vertex placements.

    Index code = 3 * local(lo) + local(hi); diagonal codes stay unused.
    """
    nq = len(t_params)
    bary = np.zeros((9, nq, 3))
    for il in range(3):
        for ih in range(3):
            if il == ih:
                continue
            code = 3 * il + ih
            bary[code, :, il] = 1.0 - t_params
            bary[code, :, ih] = t_params
    flat = bary.reshape(-1, 3)
    phi = shape_values(family, flat)
    gref = shape_ref_grads(family, flat)
    nl = phi.shape[1]
    return phi.reshape(9, nq, nl), gref.reshape(9, nq, nl, 2)


def _side_traces(mesh: Mesh, state: SolutionState, edge_ids, side,
                 rule) -> dict[str, np.ndarray]:
    """Velocity/pressure/temperature traces seen from one edge side."""
    lo = mesh.edges[edge_ids, 0]
    hi = mesh.edges[edge_ids, 1]
    es = mesh.edge_elements[edge_ids, side]
    tri = mesh.elements[es]
    loc_lo = np.argmax(tri == lo[:, None], axis=1)
    loc_hi = np.argmax(tri == hi[:, None], axis=1)
    codes = 3 * loc_lo + loc_hi
    inv = mesh.inv_jac_t[es]

    out = {"elements": es, "codes": codes, "loc_lo": loc_lo, "loc_hi": loc_hi}
    for name, field in (("u", state.u), ("p", state.p), ("t", state.t)):
        sp = field.space
        phi_tab, gref_tab = _edge_tables(sp.family, rule.points)
        phi = phi_tab[codes]
        gphys = np.einsum("ndk,nqak->nqad", inv, gref_tab[codes])
        dofs = sp.element_dofs[es]
        vals, grads = [], []
        for c in range(sp.components):
            coef = field.component(c)[dofs]
            vals.append(np.einsum("na,nqa->nq", coef, phi))
            grads.append(np.einsum("na,nqad->nqd", coef, gphys))
        if sp.components == 1:
            out[name] = vals[0]
            out[f"grad_{name}"] = grads[0]
        else:
            out[name] = np.stack(vals, axis=-1)
            out[f"grad_{name}"] = np.stack(grads, axis=-2)
    return out


def _edge_jump_integrals(mesh: Mesh, state: SolutionState, cfg: ProblemConfig,
                         edge_ids: np.ndarray, degree: int):
    """Integrated squared normal-flux jumps per interior edge."""
    rule = edge_rule(degree)
    if len(edge_ids) == 0:
        return np.zeros(0), np.zeros(0)

    plus = _side_traces(mesh, state, edge_ids, 0, rule)
    minus = _side_traces(mesh, state, edge_ids, 1, rule)

    lo = mesh.edges[edge_ids, 0]
    hi = mesh.edges[edge_ids, 1]
    d = mesh.vertices[hi] - mesh.vertices[lo]
    length = np.linalg.norm(d, axis=1)
    normal = np.column_stack([d[:, 1], -d[:, 0]]) / length[:, None]
    # orient outward from the side-0 element (counterclockwise triples)
    forward = plus["loc_hi"] == (plus["loc_lo"] + 1) % 3
    normal[~forward] *= -1.0

    def normal_grad(traces, name):
        return np.einsum("nqcd,nd->nqc", traces[f"grad_{name}"], normal) \
            if traces[name].ndim == 3 else \
            np.einsum("nqd,nd->nq", traces[f"grad_{name}"], normal)

    jump_ns = cfg.nu * (normal_grad(plus, "u") - normal_grad(minus, "u")) \
        - (plus["p"] - minus["p"])[:, :, None] * normal[:, None, :]

    u_n_plus = np.einsum("nqd,nd->nq", plus["u"], normal)
    u_n_minus = np.einsum("nqd,nd->nq", minus["u"], normal)
    jump_heat = cfg.kappa * (normal_grad(plus, "t") - normal_grad(minus, "t")) \
        - (plus["t"] * u_n_plus - minus["t"] * u_n_minus)

    detw = length[:, None] * rule.weights[None, :]
    return (
        kernels.sq_norm(np.ascontiguousarray(jump_ns), detw),
        kernels.sq_norm(np.ascontiguousarray(jump_heat), detw),
    )


def _source_distance_factor(mesh: Mesh, elems, z, alpha: float) -> np.ndarray:
    pts = mesh.vertices[mesh.elements[elems]]
    dist = np.linalg.norm(pts - np.asarray(z)[None, None, :], axis=2)
    return dist.max(axis=1) ** alpha


def compute_indicators(mesh: Mesh, state: SolutionState, cfg: ProblemConfig,
                       volume_degree: int = VOLUME_DEGREE,
                       edge_degree: int = EDGE_DEGREE) -> Indicators:
    """All element indicators plus global estimator values."""
    _check_state(mesh, state)
    ne = mesh.n_elements
    elems = np.arange(ne)
    vol_ns, vol_div, vol_heat = _volume_residuals(
        mesh, state, cfg, elems, volume_degree)

    interior = np.flatnonzero(~mesh.boundary_edge)
    jump_ns_edge, jump_heat_edge = _edge_jump_integrals(
        mesh, state, cfg, interior, edge_degree)
    jump_ns = np.zeros(ne)
    jump_heat = np.zeros(ne)
    for side in (0, 1):
        np.add.at(jump_ns, mesh.edge_elements[interior, side], jump_ns_edge)
        np.add.at(jump_heat, mesh.edge_elements[interior, side], jump_heat_edge)

    h = mesh.h
    dist_alpha = _source_distance_factor(mesh, elems, cfg.z, cfg.alpha)
    delta = np.zeros(ne)
    for e in locate(mesh, cfg.z):
        delta[e] = abs(cfg.h_strength) * h[e] ** cfg.alpha

    ns_sq = h**2 * vol_ns + vol_div + h * jump_ns
    heat_sq = h**2 * dist_alpha * vol_heat + h * dist_alpha * jump_heat + delta
    return Indicators(ns_sq, heat_sq)


def _element_parts(mesh: Mesh, state: SolutionState, cfg: ProblemConfig,
                   element: int, volume_degree: int, edge_degree: int):
    _check_state(mesh, state)
    if not 0 <= element < mesh.n_elements:
        raise ValueError("element id out of range")
    elems = np.array([element])
    vol_ns, vol_div, vol_heat = _volume_residuals(
        mesh, state, cfg, elems, volume_degree)
    own_edges = np.asarray(
        [eid for eid in mesh.element_edges[element]
         if not mesh.boundary_edge[eid]], dtype=np.int64)
    jns, jheat = _edge_jump_integrals(mesh, state, cfg, own_edges, edge_degree)
    return vol_ns[0], vol_div[0], vol_heat[0], jns.sum(), jheat.sum()


def navier_indicator(mesh: Mesh, state: SolutionState, cfg: ProblemConfig,
                     element: int, volume_degree: int = VOLUME_DEGREE,
                     edge_degree: int = EDGE_DEGREE) -> float:
    """Squared flow indicator of one element."""
    vol_ns, vol_div, _, jump_ns, _ = _element_parts(
        mesh, state, cfg, element, volume_degree, edge_degree)
    h = float(mesh.h[element])
    return float(h**2 * vol_ns + vol_div + h * jump_ns)


def heat_indicator(mesh: Mesh, state: SolutionState, cfg: ProblemConfig,
                   element: int, volume_degree: int = VOLUME_DEGREE,
                   edge_degree: int = EDGE_DEGREE) -> float:
    """Squared heat indicator of one element, including the source term."""
    _, _, vol_heat, _, jump_heat = _element_parts(
        mesh, state, cfg, element, volume_degree, edge_degree)
    h = float(mesh.h[element])
    d_alpha = float(_source_distance_factor(
        mesh, np.array([element]), cfg.z, cfg.alpha)[0])
    value = h**2 * d_alpha * vol_heat + h * d_alpha * jump_heat
    if element in locate(mesh, cfg.z):
        value += abs(cfg.h_strength) * h ** cfg.alpha
    return float(value)
