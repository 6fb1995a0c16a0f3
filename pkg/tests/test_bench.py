import csv

import numpy as np
import pytest
from scipy.integrate import tplquad

from ma3d.bench import (
    TABLE_FIELDS,
    consistency_sphere_map,
    convergence_table,
    family_matrix,
    fibonacci_sphere,
    linf_error,
    make_test_case,
    max_workers,
    random_spd,
    run_case,
    write_sphere_csv,
    write_table_csv,
)
from ma3d.grid import build_grid, unit_cube
from ma3d.lattice import is_consistent, kappa_of, make_table1_stencil
from ma3d.newton import NewtonConfig

SMALL = make_table1_stencil("small")


def fd_hessian_det(U, x, h=1e-4):
    """Determinant of the central finite-difference hessian of U at x."""
    H = np.empty((3, 3))
    E = np.eye(3) * h
    for i in range(3):
        for j in range(3):
            pts = np.array([x + E[i] + E[j], x + E[i] - E[j], x - E[i] + E[j], x - E[i] - E[j]])
            f = U(pts)
            H[i, j] = (f[0] - f[1] - f[2] + f[3]) / (4 * h * h)
    return np.linalg.det(H)


# -- test cases --------------------------------------------------------------------

def test_smoothed_cone_density_at_apex():
    tc = make_test_case("smoothed_cone")
    assert tc.density(np.array([[0.5, 0.5, 0.5]]))[0] == pytest.approx(1e3, rel=1e-12)


def test_quadratic_diag_case():
    M = np.diag([1.0, 2.0, 3.0])
    tc = make_test_case("quadratic", {"M": M})
    p = np.random.default_rng(0).random((10, 3))
    np.testing.assert_allclose(tc.density(p), 6.0)
    face = p.copy()
    face[:, 1] = 1.0
    np.testing.assert_allclose(tc.boundary(face), 0.5 * np.einsum("ij,jk,ik->i", face, M, face))


def test_singular_density_at_origin():
    tc = make_test_case("singular")
    assert tc.density(np.zeros((1, 3)))[0] == pytest.approx(3 ** -1.5, rel=1e-14)


@pytest.mark.parametrize("name", ["smoothed_cone", "singular"])
def test_density_matches_finite_difference_hessian(name):
    tc = make_test_case(name)
    rng = np.random.default_rng(5)
    for x in rng.uniform(0.1, 0.9, size=(5, 3)):
        assert tc.density(x[None])[0] == pytest.approx(fd_hessian_det(tc.exact, x), rel=1e-5)


@pytest.mark.parametrize("name", ["quadratic", "smoothed_cone", "singular"])
def test_exact_solution_convex_on_cube(name):
    tc = make_test_case(name)
    rng = np.random.default_rng(9)
    for x in rng.uniform(0.02, 0.98, size=(20, 3)):
        H = np.empty((3, 3))
        h = 1e-4
        E = np.eye(3) * h
        for i in range(3):
            for j in range(3):
                pts = np.array([x + E[i] + E[j], x + E[i] - E[j], x - E[i] + E[j], x - E[i] - E[j]])
                f = tc.exact(pts)
                H[i, j] = (f[0] - f[1] - f[2] + f[3]) / (4 * h * h)
        assert np.linalg.eigvalsh(0.5 * (H + H.T))[0] > 0


def test_random_quadratic_default_kappa():
    tc = make_test_case("quadratic")
    assert kappa_of(tc.params["M"]) == pytest.approx(8.5)
    again = make_test_case("quadratic")
    np.testing.assert_array_equal(tc.params["M"], again.params["M"])
    other = make_test_case("quadratic", {"seed": 1})
    assert not np.array_equal(tc.params["M"], other.params["M"])


def test_random_spd_kappa_bound():
    rng = np.random.default_rng(0)
    for kappa in (1.5, 4.0, 10.0):
        for _ in range(20):
            assert kappa_of(random_spd(rng, kappa)) <= kappa * (1 + 1e-9)


@pytest.mark.parametrize("name,params", [
    ("nope", {}),
    ("quadratic", {"M": np.diag([1.0, -1.0, 1.0])}),
    ("quadratic", {"M": np.eye(2)}),
    ("smoothed_cone", {"delta": 0.0}),
])
def test_invalid_test_case(name, params):
    with pytest.raises(ValueError):
        make_test_case(name, params)


def test_density_riemann_sums_converge():
    tc = make_test_case("smoothed_cone")
    d = 0.1
    exact, _ = tplquad(lambda z, y, x: d * d / (d * d + (x - .5) ** 2 + (y - .5) ** 2 + (z - .5) ** 2) ** 2.5,
                       0, 1, 0, 1, 0, 1, epsabs=1e-10, epsrel=1e-10)
    errs = []
    for n in (10, 20, 40):
        g = build_grid(unit_cube(), n, SMALL)
        errs.append(abs(tc.density(g.points[: g.n_interior]).sum() / n**3 - exact))
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 0.05 * exact


# -- error metric -------------------------------------------------------------------

def test_linf_error_trivial_cases():
    tc = make_test_case("smoothed_cone")
    g = build_grid(unit_cube(), 5, SMALL)
    u = g.sample(tc.exact)
    assert linf_error(u, tc, g) == 0.0
    assert linf_error(u + 0.25, tc, g) == pytest.approx(0.25)
    assert linf_error(u - 3.0, tc, g) == pytest.approx(3.0)


@pytest.mark.parametrize("n", [6, 10])
def test_linf_error_consistent_quadratic(n):
    rec = run_case("quadratic", "proposed:small", n, {"M": np.diag([1.0, 2.0, 3.0])})[0]
    assert rec.converged and rec.linf_error <= 1e-8


# -- sphere maps ----------------------------------------------------------------------

def test_family_matrices():
    v = np.array([1.0, 2.0, 2.0]) / 3
    for fam, eigs in [("aniso_plus", [1, 1, 36]), ("aniso_minus", [1 / 36, 1, 1]),
                      ("rotated", [1 / 6, 1, 6])]:
        M = family_matrix(fam, v)
        np.testing.assert_allclose(np.linalg.eigvalsh(M), eigs, rtol=1e-12)
    np.testing.assert_allclose(family_matrix("aniso_plus", v) @ v, 36 * v, rtol=1e-12)
    with pytest.raises(ValueError):
        family_matrix("isotropic", v)


def test_fibonacci_sphere_unit():
    P = fibonacci_sphere(500)
    np.testing.assert_allclose(np.linalg.norm(P, axis=1), 1.0, rtol=1e-12)
    assert abs(P.mean(0)).max() < 5e-3


def test_sphere_axis_direction_is_exact():
    rows = consistency_sphere_map("aniso_plus", "proposed:small", directions=[[1, 0, 0]])
    assert abs(rows[0, 3]) <= 1e-9


def test_sphere_generic_has_errors_and_range():
    rows = consistency_sphere_map("aniso_plus", "proposed:small", 200)
    assert np.any(rows[:, 3] > 1e-6)
    for fam in ("aniso_plus", "aniso_minus", "rotated"):
        for scheme in ("proposed:small", "ws:small"):
            err = consistency_sphere_map(fam, scheme, 100)[:, 3]
            assert np.all(err >= -1e-9) and np.all(err < 1)


@pytest.mark.parametrize("family", ["aniso_plus", "aniso_minus", "rotated"])
def test_sphere_zero_where_consistent(family):
    rows = consistency_sphere_map(family, "proposed:small", 120)
    for v, err in zip(rows[:, :3], rows[:, 3]):
        if is_consistent(family_matrix(family, v), SMALL):
            assert abs(err) <= 1e-9
        else:
            assert err > 0


def test_sphere_csv(tmp_path):
    rows = consistency_sphere_map("rotated", "proposed:small", 10)
    path = tmp_path / "s.csv"
    write_sphere_csv(rows, path)
    with open(path) as fh:
        data = list(csv.reader(fh))
    assert data[0] == ["vx", "vy", "vz", "rel_error"]
    np.testing.assert_array_equal(np.array(data[1:], dtype=float), rows)


# -- tables -------------------------------------------------------------------------------

def test_table_keeps_failed_runs(tmp_path):
    recs = convergence_table("singular", ["proposed:small", "fd"], [4, 6],
                             ncfg=NewtonConfig(max_iters=1))
    assert len(recs) == 4
    assert not any(r.converged for r in recs)
    path = tmp_path / "t.csv"
    write_table_csv(recs, path)
    with open(path) as fh:
        data = list(csv.DictReader(fh))
    assert list(data[0]) == TABLE_FIELDS
    assert [r["converged"] for r in data] == ["False"] * 4


def test_table_deterministic_with_seed():
    a = convergence_table("quadratic", ["proposed:small"], [5], {"seed": 3})
    b = convergence_table("quadratic", ["proposed:small"], [5], {"seed": 3})
    assert a[0].linf_error == b[0].linf_error and a[0].iters == b[0].iters


def test_parallel_table_matches_serial(monkeypatch):
    serial = convergence_table("singular", ["proposed:small", "ws:small"], [4, 5])
    monkeypatch.setenv("MA3D_THREADS", "2")
    assert max_workers() == 2
    parallel = convergence_table("singular", ["proposed:small", "ws:small"], [4, 5])
    assert [(r.scheme, r.n, r.linf_error) for r in serial] == [(r.scheme, r.n, r.linf_error) for r in parallel]
    monkeypatch.setenv("MA3D_THREADS", "many")
    assert max_workers() == 1
