import math

import numpy as np
import pytest
from scipy.special import gamma as gamma_fn

from tfac.mesh import (
    AdaptiveConfig,
    MeshError,
    MeshSpec,
    TimeMesh,
    adaptive_next_tau,
    ag_check,
    example1_mesh,
    graded_mesh,
    random_mesh,
    solvability_cap,
    uniform_mesh,
)


def test_time_mesh_validation():
    with pytest.raises(MeshError):
        TimeMesh(np.array([0.0]))
    with pytest.raises(MeshError):
        TimeMesh(np.array([0.1, 0.5]))
    with pytest.raises(MeshError):
        TimeMesh(np.array([0.0, 0.5, 0.5]))
    mesh = TimeMesh(np.array([0.0, 0.25, 1.0]))
    assert mesh.N == 2 and mesh.T == 1.0
    np.testing.assert_allclose(mesh.steps, [0.25, 0.75])
    np.testing.assert_allclose(mesh.ratios, [3.0])
    assert mesh.tau_max == 0.75
    with pytest.raises(ValueError):
        mesh.nodes[0] = 1.0  # immutable


def test_graded_mesh_values():
    np.testing.assert_allclose(graded_mesh(1.0, 4, 1.0).nodes, [0, 0.25, 0.5, 0.75, 1.0])
    np.testing.assert_allclose(graded_mesh(1.0, 2, 2.0).nodes, [0, 0.25, 1.0])
    t1 = graded_mesh(0.25, 23, 4.0).nodes[1]
    assert t1 == pytest.approx(0.25 * (1.0 / 23) ** 4, rel=1e-15)
    assert t1 == pytest.approx(8.93e-7, rel=1e-3)


def test_graded_mesh_domain_errors():
    with pytest.raises(MeshError):
        graded_mesh(0.0, 4, 2.0)
    with pytest.raises(MeshError):
        graded_mesh(1.0, 0, 2.0)
    with pytest.raises(MeshError):
        graded_mesh(1.0, 4, 0.5)


def test_example1_mesh_split_arithmetic():
    mesh = example1_mesh(40, 4.0, 1.0, seed=7)
    # T0 = 1/4, N0 = ceil(40/1.75) = 23, so 17 random steps
    graded_part = mesh.nodes[mesh.nodes <= 0.25 + 1e-14]
    assert graded_part.size == 24
    assert mesh.N == 40

    mesh80 = example1_mesh(80, 3.0, 1.0, seed=7)
    third = mesh80.nodes[mesh80.nodes <= 1.0 / 3.0 + 1e-14]
    assert third.size == 49  # N0 = ceil(80/(2 - 1/3)) = 48 exactly


def test_example1_mesh_end_point_and_positivity(rng):
    for seed in range(10):
        N = int(rng.integers(10, 200))
        gamma = float(rng.uniform(1.0, 5.0))
        mesh = example1_mesh(N, gamma, 1.0, seed=seed)
        assert mesh.nodes[-1] == 1.0
        assert np.all(mesh.steps > 0)
        assert abs(mesh.steps.sum() - 1.0) <= 10 * np.spacing(1.0)


def test_example1_mesh_reproducible():
    a = example1_mesh(64, 4.0, 1.0, seed=123)
    b = example1_mesh(64, 4.0, 1.0, seed=123)
    assert np.array_equal(a.nodes, b.nodes)
    c = example1_mesh(64, 4.0, 1.0, seed=124)
    assert not np.array_equal(a.nodes, c.nodes)


def test_example1_mesh_no_room_error():
    # gamma=1, T tiny: N0 = ceil(N/T') swallows everything
    with pytest.raises(MeshError):
        example1_mesh(4, 4.0, 0.05, seed=0)


def test_ag_check_uniform_and_graded():
    ok, idx = ag_check(uniform_mesh(1.0, 16), 1.0, 2.0)
    assert ok and idx is None
    mesh = graded_mesh(1.0, 64, 3.0)
    ok, idx = ag_check(mesh, 3.0, 2.0**3.0)
    assert ok, idx


def test_ag_check_graded_family(rng):
    for gamma in (1.0, 2.0, 3.5, 5.0):
        for N in (16, 256, 10_000):
            mesh = graded_mesh(1.0, N, gamma)
            C = max(2.0**gamma, 2.0**gamma)
            ok, idx = ag_check(mesh, gamma, C)
            assert ok, (gamma, N, idx)


def test_ag_check_violation():
    mesh = TimeMesh(np.array([0.0, 0.001, 0.101]))  # tau2 = 100 tau1
    ok, idx = ag_check(mesh, 1.0, 1.5)
    assert not ok and idx == 2


def test_solvability_cap_values():
    for alpha in (0.1, 0.5, 0.9):
        kappa = 1.0 / gamma_fn(2.0 - alpha)
        assert solvability_cap(alpha, kappa) == pytest.approx(1.0, rel=1e-13)
    assert solvability_cap(0.5, 1.0) == pytest.approx(4.0 / math.pi, rel=1e-13)
    assert solvability_cap(0.999, 2.0) == pytest.approx(0.5, rel=1e-2)


def test_solvability_cap_is_a0_threshold():
    # uniform mesh at the cap puts a_0 exactly at kappa
    from tfac.kernels import l1_row

    alpha, kappa = 0.6, 2.5
    cap = solvability_cap(alpha, kappa)
    row = l1_row(uniform_mesh(cap, 1), 1, alpha)
    assert row.coeffs[0] == pytest.approx(kappa, rel=1e-13)


def test_solvability_cap_domain():
    for bad in (0.0, 1.0, -0.2):
        with pytest.raises(ValueError):
            solvability_cap(bad, 1.0)
    with pytest.raises(ValueError):
        solvability_cap(0.5, 0.0)


def test_adaptive_next_tau():
    cfg = AdaptiveConfig(tau_max=0.1, tau_min=1e-3, eta=1e3)
    assert adaptive_next_tau(0.0, cfg) == 0.1
    assert adaptive_next_tau(0.0, cfg, cap=0.05) == 0.05
    # eta * norm^2 = 3  ->  tau_max / 2
    norm = math.sqrt(3.0 / 1e3)
    assert adaptive_next_tau(norm, cfg) == pytest.approx(0.05, rel=1e-12)
    assert adaptive_next_tau(1e9, cfg) == 1e-3


def test_adaptive_next_tau_stays_in_band(rng):
    cfg = AdaptiveConfig(tau_max=0.1, tau_min=1e-3, eta=1e3)
    cap = 0.07
    for _ in range(200):
        tau = adaptive_next_tau(float(rng.uniform(0, 50)), cfg, cap)
        assert 1e-3 <= tau <= min(cap, 0.1)


def test_adaptive_config_validation():
    with pytest.raises(MeshError):
        AdaptiveConfig(tau_max=1e-3, tau_min=0.1, eta=1.0)
    with pytest.raises(MeshError):
        AdaptiveConfig(tau_max=0.1, tau_min=0.0, eta=1.0)


def test_mesh_spec_build():
    assert MeshSpec("uniform", T=1.0, N=4).build().N == 4
    assert MeshSpec("graded", T=1.0, N=8, gamma=2.0).build().nodes[1] == pytest.approx(1 / 64)
    m = MeshSpec("composite_random", T=1.0, N=40, gamma=4.0, seed=3).build()
    assert m.N == 40
    with pytest.raises(MeshError):
        MeshSpec("adaptive", T=1.0).build()
    with pytest.raises(MeshError):
        MeshSpec("weird", T=1.0, N=4)


def test_random_mesh_properties(rng):
    for _ in range(20):
        mesh = random_mesh(rng, 50)
        assert mesh.nodes[-1] == 1.0
        assert np.all(mesh.steps > 0)


def test_mesh_dump_csv(tmp_path):
    mesh = graded_mesh(1.0, 4, 2.0)
    path = tmp_path / "mesh.csv"
    mesh.dump_csv(path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "k,t_k,tau_k,r_k"
    assert len(lines) == 6
    assert lines[1].startswith("0,0,")
    parts = lines[3].split(",")
    assert float(parts[1]) == pytest.approx(0.25)
    assert float(parts[3]) == pytest.approx(3.0)  # r_2 on a gamma=2 graded mesh
