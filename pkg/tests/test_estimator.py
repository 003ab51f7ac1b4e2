import numpy as np
import pytest

from afem2d.estimator import (
    estimate,
    oscillations_dirichlet,
    oscillations_element,
    oscillations_neumann,
)
from afem2d.fem import DiscreteFunction, assemble, nodal_interpolant, solve
from afem2d.mesh import DIRICHLET, NEUMANN, Mesh, refine_uniform, seed_refinement_edges
from afem2d.problems import linear_patch_problem, zshape_problem
from afem2d.trace import compute_trace


def make_spec(mesh, f=None, g=None, g_tan=None, phi=None):
    zero = lambda pts: np.zeros(len(pts))

    class Spec:
        volume_load = staticmethod(f or zero)
        dirichlet_trace = staticmethod(g or zero)
        dirichlet_tangential_derivative = staticmethod(g_tan or (lambda pts, t: np.zeros(len(pts))))
        neumann_flux = staticmethod(phi or (lambda pts, n: np.zeros(len(pts))))
        initial_mesh = mesh

    return Spec


def reference_triangle_mesh():
    vertices = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    elements = seed_refinement_edges(vertices, np.array([[0, 1, 2]]))
    facets = np.array([[0, 1], [1, 2], [2, 0]])
    return Mesh(vertices, elements, facets, np.array([DIRICHLET] * 3))


def all_dirichlet_square():
    vertices = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    elements = seed_refinement_edges(vertices, np.array([[0, 1, 2], [0, 2, 3]]))
    facets = np.array([[0, 1], [1, 2], [2, 3], [3, 0]])
    return Mesh(vertices, elements, facets, np.array([DIRICHLET] * 4))


def test_exact_patch_solution_gives_zero_breakdown():
    spec = linear_patch_problem()
    mesh = refine_uniform(spec.initial_mesh)
    solution = solve(assemble(mesh, spec), compute_trace("nodal", mesh, spec))
    bd = estimate(mesh, spec, solution)
    for arr in (bd.rho_sq_per_element, bd.oscD_sq_per_facet, bd.oscN_sq_per_facet,
                bd.oscT_sq_per_element, bd.jump_sq_per_edge, bd.volume_sq_per_element,
                bd.neumann_sq_per_facet):
        assert np.abs(arr).max() <= 1e-10 if len(arr) else True
    assert bd.eta_sq <= 1e-10


def test_single_triangle_volume_residual():
    # area 1/2, f = 1, U = 0, no interior edges, no Neumann facets:
    # rho^2 = |T| * ||f||^2 = 1/4
    mesh = reference_triangle_mesh()
    spec = make_spec(mesh, f=lambda pts: np.ones(len(pts)))
    bd = estimate(mesh, spec, DiscreteFunction(mesh, np.zeros(3)))
    assert bd.rho_sq_per_element[0] == pytest.approx(0.25, abs=1e-10)
    assert bd.volume_sq == pytest.approx(0.25, abs=1e-10)
    assert bd.jump_sq == 0.0
    assert bd.neumann_sq == 0.0


def test_two_triangle_hat_jump():
    # hat at (0,0) has gradient (-1,0) on the lower triangle and (0,-1) on
    # the upper one; the jump across the diagonal is sqrt(2) in magnitude,
    # integrated over length sqrt(2) and weighted by sqrt(1/2) per element
    mesh = all_dirichlet_square()
    spec = make_spec(mesh)
    hat = np.zeros(4)
    hat[0] = 1.0
    bd = estimate(mesh, spec, DiscreteFunction(mesh, hat))
    assert len(bd.jump_sq_per_edge) == 1
    assert bd.jump_sq == pytest.approx(2.0, abs=1e-12)
    assert bd.rho_sq_per_element[0] == pytest.approx(2.0, abs=1e-12)
    assert bd.rho_sq_per_element[1] == pytest.approx(2.0, abs=1e-12)
    assert bd.rho_sq == pytest.approx(2.0 * bd.jump_sq, rel=1e-12)


def test_dirichlet_oscillation_oracle():
    # facet [0,1]x{0}, owner area 1/2, g(x) = x^2: the tangential derivative
    # 2x has mean 1 and integral of (2x-1)^2 is 1/3
    mesh = Mesh(np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]),
                seed_refinement_edges(np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]),
                                      np.array([[0, 1, 2], [0, 2, 3]])),
                np.array([[0, 1], [1, 2], [2, 3], [3, 0]]),
                np.array([DIRICHLET, NEUMANN, NEUMANN, NEUMANN]))
    spec = make_spec(mesh, g=lambda pts: pts[:, 0] ** 2,
                     g_tan=lambda pts, t: 2.0 * pts[:, 0] * np.broadcast_to(np.asarray(t), pts.shape)[:, 0])
    ids, owners, osc = oscillations_dirichlet(mesh, spec)
    assert len(osc) == 1
    assert osc[0] == pytest.approx(np.sqrt(0.5) / 3.0, abs=1e-10)
    assert mesh.element_areas()[owners[0]] == pytest.approx(0.5)


def test_neumann_oscillation_oracle():
    # phi(x) = x on the unit facet with owner area 1/2:
    # sqrt(1/2) * integral of (x - 1/2)^2 = sqrt(1/2)/12
    mesh = Mesh(np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]),
                seed_refinement_edges(np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]),
                                      np.array([[0, 1, 2], [0, 2, 3]])),
                np.array([[0, 1], [1, 2], [2, 3], [3, 0]]),
                np.array([NEUMANN, DIRICHLET, DIRICHLET, DIRICHLET]))
    spec = make_spec(mesh, phi=lambda pts, n: pts[:, 0])
    ids, owners, osc = oscillations_neumann(mesh, spec)
    assert len(osc) == 1
    assert osc[0] == pytest.approx(np.sqrt(0.5) / 12.0, abs=1e-10)


def test_element_oscillation_oracle():
    # f(x,y) = x on the reference triangle: mean 1/3 and
    # integral of (x-1/3)^2 = 1/36, weighted by the area 1/2
    mesh = reference_triangle_mesh()
    spec = make_spec(mesh, f=lambda pts: pts[:, 0])
    osc = oscillations_element(mesh, spec)
    assert osc[0] == pytest.approx(1.0 / 72.0, abs=1e-10)


def test_constant_data_oscillations_vanish():
    spec = linear_patch_problem()
    mesh = spec.initial_mesh
    solution = solve(assemble(mesh, spec), compute_trace("nodal", mesh, spec))
    bd = estimate(mesh, spec, solution)
    assert np.abs(bd.oscD_sq_per_facet).max() <= 1e-15
    assert np.abs(bd.oscN_sq_per_facet).max() <= 1e-15
    assert np.abs(bd.oscT_sq_per_element).max() <= 1e-15


def test_zshape_has_no_volume_terms():
    spec = zshape_problem()
    mesh = spec.initial_mesh
    solution = solve(assemble(mesh, spec), compute_trace("l2", mesh, spec))
    bd = estimate(mesh, spec, solution)
    assert bd.volume_sq == 0.0
    assert bd.oscT_sq == 0.0


def test_component_split_identity():
    spec = zshape_problem()
    mesh = refine_uniform(refine_uniform(spec.initial_mesh))
    solution = solve(assemble(mesh, spec), compute_trace("l2", mesh, spec))
    bd = estimate(mesh, spec, solution)
    split = bd.volume_sq + 2.0 * bd.jump_sq + bd.neumann_sq
    assert bd.rho_sq == pytest.approx(split, rel=1e-12)
    assert bd.eta_sq == pytest.approx(bd.rho_sq + bd.oscD_sq, rel=1e-15)
    assert (bd.rho_sq_per_element >= 0).all()
    assert (bd.oscD_sq_per_facet >= 0).all()


def test_oscillations_non_increasing_under_uniform_refinement():
    spec = zshape_problem()
    mesh = spec.initial_mesh
    prev_d = prev_n = np.inf
    for _ in range(4):
        solution = solve(assemble(mesh, spec), compute_trace("l2", mesh, spec))
        bd = estimate(mesh, spec, solution)
        assert bd.oscD_sq <= prev_d + 1e-15
        assert bd.oscN_sq <= prev_n + 1e-15
        prev_d, prev_n = bd.oscD_sq, bd.oscN_sq
        mesh = refine_uniform(mesh)


def test_max_dirichlet_oscillation_touches_origin_on_coarse_meshes():
    spec = zshape_problem()
    mesh = spec.initial_mesh
    for level in range(4):
        solution = solve(assemble(mesh, spec), compute_trace("l2", mesh, spec))
        bd = estimate(mesh, spec, solution)
        worst = bd.dirichlet_facets[int(np.argmax(bd.oscD_sq_per_facet))]
        pts = mesh.vertices[mesh.boundary_facets[worst]]
        assert (np.hypot(pts[:, 0], pts[:, 1]) < 1e-12).any(), f"level {level}"
        mesh = refine_uniform(mesh)


def test_estimator_equivalence_between_projections_on_initial_meshes():
    spec = zshape_problem()
    mesh = refine_uniform(spec.initial_mesh)
    system = assemble(mesh, spec)
    eta_l2 = estimate(mesh, spec, solve(system, compute_trace("l2", mesh, spec))).eta_sq
    eta_sz = estimate(mesh, spec, solve(system, compute_trace("scott-zhang", mesh, spec))).eta_sq
    ratio = np.sqrt(eta_sz / eta_l2)
    assert 0.1 <= ratio <= 10.0


def test_localized_estimator_accounts_for_dirichlet_facets():
    spec = zshape_problem()
    mesh = spec.initial_mesh
    solution = solve(assemble(mesh, spec), compute_trace("l2", mesh, spec))
    bd = estimate(mesh, spec, solution)
    local = bd.eta_local_sq_per_element()
    assert local.sum() == pytest.approx(bd.eta_sq, rel=1e-12)
    assert (local >= bd.rho_sq_per_element - 1e-15).all()
