import numpy as np
import pytest

from afem2d.fem import DiscreteFunction, assemble, nodal_interpolant, solve
from afem2d.mesh import DIRICHLET, refine_uniform
from afem2d.problems import (
    ProblemError,
    ProblemSpec,
    evaluate_energy_error,
    get_problem,
    linear_patch_problem,
    zshape_problem,
)
from afem2d.trace import compute_trace


def test_registry_and_unknown_problem():
    assert get_problem("zshape2d").name == "zshape2d"
    assert get_problem("linear-patch").name == "linear-patch"
    with pytest.raises(ProblemError, match="unknown problem"):
        get_problem("nope")


def test_zshape_pointwise_values():
    spec = zshape_problem()
    assert spec.exact_solution(np.array([[1.0, 0.0]]))[0] == pytest.approx(1.0, abs=1e-15)
    corner = spec.exact_solution(np.array([[-1.0, -1.0]]))[0]
    assert corner == pytest.approx(2 ** (2 / 7) * np.cos(5 * np.pi / 7), abs=1e-14)
    pts = np.array([[0.3, 0.4], [-0.5, 0.25], [0.1, -0.9]])
    assert np.allclose(spec.volume_load(pts), 0.0)


def test_zshape_gradient_magnitude():
    spec = zshape_problem()
    # |grad u| = (4/7) r^(-3/7) regardless of the angle
    for x, y in [(1.0, 0.0), (0.0, 1.0), (-0.7, 0.7), (0.5, -0.5)]:
        g = spec.exact_gradient(np.array([[x, y]]))[0]
        r = np.hypot(x, y)
        assert np.hypot(*g) == pytest.approx(4 / 7 * r ** (-3 / 7), rel=1e-13)


def test_zshape_angle_branch_is_continuous():
    spec = zshape_problem()
    # sweep the full domain opening just inside the boundary rays
    phi = np.linspace(-np.pi / 2 + 1e-9, 5 * np.pi / 4 - 1e-9, 2000)
    pts = 0.5 * np.stack([np.cos(phi), np.sin(phi)], axis=1)
    values = spec.exact_solution(pts)
    assert np.abs(np.diff(values)).max() < 1e-2


def test_zshape_gradient_is_harmonic_conjugate_consistent():
    # finite-difference check of the closed-form gradient
    spec = zshape_problem()
    rng = np.random.default_rng(0)
    pts = rng.uniform(0.2, 0.7, size=(20, 2))  # first quadrant, far from cut
    h = 1e-6
    gx = (spec.exact_solution(pts + [h, 0]) - spec.exact_solution(pts - [h, 0])) / (2 * h)
    gy = (spec.exact_solution(pts + [0, h]) - spec.exact_solution(pts - [0, h])) / (2 * h)
    grad = spec.exact_gradient(pts)
    assert np.allclose(grad[:, 0], gx, atol=1e-8)
    assert np.allclose(grad[:, 1], gy, atol=1e-8)


def test_linear_patch_boundary_data():
    spec = linear_patch_problem()
    assert spec.dirichlet_trace(np.array([[0.0, 0.5]]))[0] == pytest.approx(0.5)
    right = spec.neumann_flux(np.array([[1.0, 0.5]]), np.array([1.0, 0.0]))[0]
    assert right == pytest.approx(2.0)
    bottom = spec.dirichlet_tangential_derivative(np.array([[0.5, 0.0]]), np.array([1.0, 0.0]))[0]
    assert bottom == pytest.approx(2.0)


def test_compatibility_check_rejects_wrong_flux():
    good = linear_patch_problem()
    with pytest.raises(ProblemError, match="neumann"):
        ProblemSpec(
            name="broken",
            volume_load=good.volume_load,
            dirichlet_trace=good.dirichlet_trace,
            dirichlet_tangential_derivative=good.dirichlet_tangential_derivative,
            neumann_flux=lambda pts, n: np.full(len(pts), 17.0),
            initial_mesh=good.initial_mesh,
            exact_solution=good.exact_solution,
            exact_gradient=good.exact_gradient,
        )


def test_positive_dirichlet_measure_required():
    good = linear_patch_problem()
    mesh = good.initial_mesh
    from afem2d.mesh import NEUMANN, Mesh

    all_neumann = Mesh(mesh.vertices, mesh.elements, mesh.boundary_facets,
                       np.array([NEUMANN] * len(mesh.boundary_labels)))
    with pytest.raises(ProblemError, match="positive"):
        ProblemSpec(
            name="no-dirichlet",
            volume_load=good.volume_load,
            dirichlet_trace=good.dirichlet_trace,
            dirichlet_tangential_derivative=good.dirichlet_tangential_derivative,
            neumann_flux=good.neumann_flux,
            initial_mesh=all_neumann,
        )


def test_energy_error_of_interpolant_vanishes_on_patch():
    spec = linear_patch_problem()
    mesh = refine_uniform(spec.initial_mesh)
    interp = nodal_interpolant(mesh, spec.exact_solution)
    assert evaluate_energy_error(spec, mesh, interp) <= 1e-10


def test_energy_error_of_zero_solution_is_sqrt13():
    spec = linear_patch_problem()
    zero = DiscreteFunction(spec.initial_mesh, np.zeros(spec.initial_mesh.num_vertices))
    assert evaluate_energy_error(spec, spec.initial_mesh, zero) == pytest.approx(np.sqrt(13.0), rel=1e-12)


def test_energy_error_requires_exact_solution():
    good = linear_patch_problem()
    spec = ProblemSpec(
        name="data-only",
        volume_load=good.volume_load,
        dirichlet_trace=good.dirichlet_trace,
        dirichlet_tangential_derivative=good.dirichlet_tangential_derivative,
        neumann_flux=good.neumann_flux,
        initial_mesh=good.initial_mesh,
    )
    zero = DiscreteFunction(spec.initial_mesh, np.zeros(spec.initial_mesh.num_vertices))
    with pytest.raises(ProblemError, match="no exact solution"):
        evaluate_energy_error(spec, spec.initial_mesh, zero)


def test_zshape_initial_mesh_shape():
    mesh = zshape_problem().initial_mesh
    assert mesh.num_elements == 6
    assert mesh.invariant_violations() == []
    assert mesh.boundary_length(DIRICHLET) == pytest.approx(2.0 + np.sqrt(2.0), rel=1e-14)
    # the singular corner is a mesh vertex
    assert any(np.allclose(v, [0.0, 0.0]) for v in mesh.vertices)


def test_zshape_energy_error_decreases_after_transient():
    from afem2d.driver import RunConfig, run

    records = run(RunConfig(problem="zshape2d", max_elements=2500))
    errors = [r.energy_error for r in records]
    assert all(b < a for a, b in zip(errors[3:], errors[4:]))
