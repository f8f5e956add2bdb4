import numpy as np
import pytest
import scipy.sparse as sp

from boussinesq_afem.assembly import (
    assemble_buoyancy_rhs,
    assemble_heat,
    assemble_oseen,
    delta_load,
    family_spaces,
    pressure_mean_vector,
    skew_trilinear,
)
from boussinesq_afem.config import ProblemConfig
from boussinesq_afem.mesh import bisect
from boussinesq_afem.solver import solve_oseen_system, solve_sparse
from boussinesq_afem.spaces import FieldVec, build_space, interpolate


def random_velocity(space, rng, scale=1.0, zero_boundary=True):
    field = FieldVec(rng.normal(size=space.n_total) * scale, space)
    if zero_boundary:
        field.values[space.dirichlet_all_components()] = 0.0
    return field


@pytest.fixture
def cfg():
    return ProblemConfig()


class TestOseen:
    def test_zero_data_gives_zero_solution(self, square4, cfg):
        velocity, pressure, _ = family_spaces(square4, "taylor_hood")
        temp = build_space(square4, "P2")
        system = assemble_oseen(square4, velocity, pressure,
                                FieldVec.zeros(velocity),
                                FieldVec.zeros(temp), cfg)
        x = solve_sparse(system)
        assert np.abs(x).max() < 1e-12

    def test_buoyancy_entry_single_element_hat(self, ref_triangle):
        # mini velocity vertex basis is the P1 hat; with T the same hat and
        # g = (1, 0) the raw x-load at that vertex is the hat mass |K| / 6
        velocity = build_space(ref_triangle, "P1Bubble", components=2)
        temp = build_space(ref_triangle, "P1", homogeneous_dirichlet=False)
        t_hat = FieldVec(np.array([1.0, 0.0, 0.0]), temp)
        rhs = assemble_buoyancy_rhs(ref_triangle, velocity, t_hat, (1.0, 0.0))
        area = 0.5
        assert rhs[0] == pytest.approx(area / 6.0, rel=1e-13)
        # y-components receive nothing for horizontal gravity
        assert np.abs(rhs[velocity.n_dofs:]).max() == 0.0

    def test_buoyancy_scales_linearly(self, square4, cfg):
        velocity, _, temp = family_spaces(square4, "taylor_hood")
        t_field = interpolate(temp, lambda x, y: x * y * (1 - x))
        r1 = assemble_buoyancy_rhs(square4, velocity, t_field, (1.0, 0.0))
        r2 = assemble_buoyancy_rhs(square4, velocity, t_field, (2.0, 0.0))
        assert np.array_equal(2.0 * r1, r2)
        doubled = FieldVec(2.0 * t_field.values, temp)
        r3 = assemble_buoyancy_rhs(square4, velocity, doubled, (1.0, 0.0))
        assert np.allclose(r3, 2.0 * r1, rtol=1e-15, atol=0.0)

    def test_viscous_block_symmetric_psd(self, square4, cfg):
        velocity, pressure, temp = family_spaces(square4, "taylor_hood")
        system = assemble_oseen(square4, velocity, pressure,
                                FieldVec.zeros(velocity),
                                FieldVec.zeros(temp), cfg)
        n_u2 = velocity.n_total
        a_block = system.matrix[:n_u2, :n_u2].toarray()
        assert np.abs(a_block - a_block.T).max() < 1e-12
        eigs = np.linalg.eigvalsh(a_block)
        assert eigs.min() > -1e-10

    def test_mesh_generation_mismatch(self, square4, cfg):
        velocity, pressure, temp = family_spaces(square4, "taylor_hood")
        other = bisect(square4, {0})
        v2, _, _ = family_spaces(other, "taylor_hood")
        with pytest.raises(ValueError, match="generation"):
            assemble_oseen(square4, velocity, pressure,
                           FieldVec.zeros(v2), FieldVec.zeros(temp), cfg)

    def test_traversal_order_independent(self, square4, cfg):
        velocity, pressure, temp = family_spaces(square4, "taylor_hood")
        rng = np.random.default_rng(0)
        w = random_velocity(velocity, rng, 0.3)
        t_field = interpolate(temp, lambda x, y: np.sin(3 * x) * y)
        system = assemble_oseen(square4, velocity, pressure, w, t_field, cfg)
        # permuting the assembled triplets must reproduce the same matrix
        coo = system.matrix.tocoo()
        perm = rng.permutation(coo.nnz)
        shuffled = sp.coo_matrix(
            (coo.data[perm], (coo.row[perm], coo.col[perm])),
            shape=coo.shape).tocsr()
        shuffled.sum_duplicates()
        diff = (system.matrix - shuffled)
        scale = np.abs(coo.data).max()
        assert np.abs(diff.data).max() if diff.nnz else 0.0 <= 1e-13 * scale


class TestHeat:
    def test_pure_diffusion_point_load(self, square4, cfg):
        temp = build_space(square4, "P1")
        velocity, _, _ = family_spaces(square4, "taylor_hood")
        system = assemble_heat(square4, temp, FieldVec.zeros(velocity), cfg)
        sym = system.matrix - system.matrix.T
        assert np.abs(sym.data).max() if sym.nnz else 0.0 < 1e-12

    def test_delta_at_vertex_node(self, square4, cfg):
        temp = build_space(square4, "P1")
        # z = (0.5, 0.5) is interior vertex 12 of the n=4 grid
        rhs = delta_load(square4, temp, (0.5, 0.5), cfg.h_strength)
        v = int(np.flatnonzero(
            np.all(np.isclose(square4.vertices, [0.5, 0.5]), axis=1))[0])
        assert rhs[v] == pytest.approx(1.0)
        rhs[v] = 0.0
        assert np.abs(rhs).max() < 1e-14

    def test_delta_at_barycenter_thirds(self, square4):
        temp = build_space(square4, "P1")
        interior = next(
            e for e in range(square4.n_elements)
            if not square4.boundary_vertex[square4.elements[e]].any())
        z = square4.vertices[square4.elements[interior]].mean(axis=0)
        rhs = delta_load(square4, temp, z, 3.0)
        vals = rhs[square4.elements[interior]]
        assert vals == pytest.approx([1.0, 1.0, 1.0], rel=1e-12)

    def test_delta_outside_domain(self, square4):
        temp = build_space(square4, "P1")
        with pytest.raises(ValueError):
            delta_load(square4, temp, (1.5, 0.5), 1.0)

    def test_rhs_linear_in_strength(self, square4, cfg):
        temp = build_space(square4, "P2")
        velocity, _, _ = family_spaces(square4, "taylor_hood")
        s1 = assemble_heat(square4, temp, FieldVec.zeros(velocity), cfg)
        s2 = assemble_heat(square4, temp, FieldVec.zeros(velocity),
                           cfg.with_updates(h_strength=2.0))
        assert np.array_equal(2.0 * s1.rhs, s2.rhs)


class TestSkewTrilinear:
    def test_vanishes_for_zero_trace_second_argument(self, square4):
        velocity, _, _ = family_spaces(square4, "taylor_hood")
        rng = np.random.default_rng(42)
        for _ in range(10):
            w = random_velocity(velocity, rng, zero_boundary=False)
            v = random_velocity(velocity, rng)
            value = skew_trilinear(square4, velocity, w, v, v)
            scale = np.linalg.norm(w.values) * np.linalg.norm(v.values) ** 2
            assert abs(value) <= 1e-10 * scale

    def test_zero_transport_field(self, square4):
        velocity, _, _ = family_spaces(square4, "taylor_hood")
        rng = np.random.default_rng(1)
        u = random_velocity(velocity, rng)
        v = random_velocity(velocity, rng)
        value = skew_trilinear(square4, velocity,
                               FieldVec.zeros(velocity), u, v)
        assert value == 0.0

    def test_against_independent_tensor_quadrature(self, two_elem_square):
        velocity = build_space(two_elem_square, "P2", components=2)
        w = FieldVec(np.zeros(velocity.n_total), velocity)
        w.values[:velocity.n_dofs] = interpolate(
            build_space(two_elem_square, "P2", homogeneous_dirichlet=False),
            lambda x, y: 1.0).values  # constant w = (1, 0)
        poly_u = lambda x, y: x * (1 - x) * y * 0.5 + 0.1 * x * y
        scalar = build_space(two_elem_square, "P2", homogeneous_dirichlet=False)
        u = FieldVec(np.concatenate([
            interpolate(scalar, poly_u).values,
            interpolate(scalar, lambda x, y: 0.2 * x * y).values]), velocity)
        value = skew_trilinear(two_elem_square, velocity, w, u, u)

        # independent oracle: pure Gauss-Legendre tensor rule per element,
        # evaluating the integrand from point_evaluate-style basis math
        from numpy.polynomial.legendre import leggauss
        from boussinesq_afem.spaces import gradients_on, values_on

        xg, wg = leggauss(8)
        s = 0.5 * (xg + 1)
        ws = 0.5 * wg
        ss, tt = np.meshgrid(s, s, indexing="ij")
        lam1 = ss.ravel()
        lam2 = (tt * (1 - ss)).ravel()
        bary = np.column_stack([1 - lam1 - lam2, lam1, lam2])
        wq = np.outer(ws, ws).ravel() * (1 - lam1)
        elems = np.arange(two_elem_square.n_elements)
        uv = values_on(u, elems, bary)
        gu = gradients_on(u, elems, bary)
        wv = values_on(w, elems, bary)
        conv = np.einsum("eqd,eqcd,eqc->eq", wv, gu, uv)
        divw = np.zeros_like(conv)  # w constant
        integrand = conv + 0.5 * divw
        oracle = np.einsum("e,q,eq->", two_elem_square.det_jac, wq, integrand)
        assert value == pytest.approx(oracle, rel=1e-12)


class TestSolvedStateInvariants:
    def test_incompressibility_and_zero_mean(self, square4, cfg):
        velocity, pressure, temp = family_spaces(square4, "taylor_hood")
        t_field = interpolate(temp, lambda x, y: x * (1 - x) * y * (1 - y))
        t_field.values[temp.dirichlet_dofs] = 0.0
        rng = np.random.default_rng(5)
        w = random_velocity(velocity, rng, 0.2)
        system = assemble_oseen(square4, velocity, pressure, w, t_field, cfg)
        x = solve_oseen_system(system, velocity, pressure)
        u = x[:velocity.n_total]
        p = x[velocity.n_total:velocity.n_total + pressure.n_dofs]

        m = pressure_mean_vector(square4, pressure)
        assert abs(m @ p) <= 1e-9 * max(1.0, np.abs(p).max())

        # discrete divergence orthogonality against every pressure basis
        div_rows = system.matrix[
            velocity.n_total:velocity.n_total + pressure.n_dofs,
            :velocity.n_total]
        residual = div_rows @ u
        assert np.abs(residual).max() <= 1e-9 * max(1.0, np.abs(u).max())
