import numpy as np
import pytest
from scipy.linalg import expm

from nmgme.oracle import (
    JointModel,
    build_joint,
    compare_with_me,
    evolve_joint,
    mode_convergence_check,
    recurrence_estimate,
)
from nmgme.propagate import trace_distance
from nmgme.system import fock_operators, quadratic_hamiltonian

SZ = np.diag([1.0, -1.0]).astype(complex)
PLUS = np.array([1.0, 1.0], dtype=complex) / np.sqrt(2.0)


def dephasing_model(g=0.2, omega=1.0, dim=8, h_sys=None):
    return JointModel(
        h_system=h_sys if h_sys is not None else np.zeros((2, 2), dtype=complex),
        channel_ops=(SZ,),
        mode_freqs=(omega,),
        couplings=np.array([[g]]),
        mode_dims=(dim,),
    )


def test_decoupled_hamiltonian_is_direct_sum():
    model = dephasing_model(g=0.0, dim=4)
    H = build_joint(model)
    b = np.diag(np.sqrt(np.arange(1, 4, dtype=float)), k=1).astype(complex)
    expected = np.kron(np.zeros((2, 2)), np.eye(4)) + np.kron(
        np.eye(2), 1.0 * b.conj().T @ b
    )
    assert np.max(np.abs(H - expected)) < 1e-14


def test_joint_dimension():
    model = dephasing_model(dim=5)
    assert model.joint_dim == 10
    assert build_joint(model).shape == (10, 10)


def test_dimension_cap_enforced():
    with pytest.raises(ValueError, match="8192"):
        JointModel(
            h_system=np.zeros((2, 2), dtype=complex),
            channel_ops=(SZ,),
            mode_freqs=(1.0, 2.0, 3.0, 4.0),
            couplings=np.array([[0.1, 0.1, 0.1, 0.1]]),
            mode_dims=(8, 8, 8, 8),
        )


def test_dephasing_block_structure():
    # sigma_z coupling block-diagonalizes into two shifted oscillators
    g, omega, dim = 0.3, 1.2, 6
    model = dephasing_model(g=g, omega=omega, dim=dim)
    H = build_joint(model)
    # qubit-major ordering: blocks are H(+/-) = omega n ± (g b + g* b^dag)
    upper = H[:dim, :dim]
    lower = H[dim:, dim:]
    off = H[:dim, dim:]
    b = np.diag(np.sqrt(np.arange(1, dim, dtype=float)), k=1).astype(complex)
    n_op = b.conj().T @ b
    phi = g * b + np.conj(g) * b.conj().T
    assert np.max(np.abs(off)) == 0.0
    assert np.max(np.abs(upper - (omega * n_op + phi))) < 1e-14
    assert np.max(np.abs(lower - (omega * n_op - phi))) < 1e-14


def test_correlation_kernel_consistency():
    rng = np.random.default_rng(2)
    g = rng.normal(size=(1, 3)) + 1j * rng.normal(size=(1, 3))
    freqs = (0.9, 1.4, 2.2)
    model = JointModel(
        h_system=np.zeros((2, 2), dtype=complex),
        channel_ops=(SZ,),
        mode_freqs=freqs,
        couplings=g,
        mode_dims=(2, 2, 2),
    )
    D = model.correlation_kernel()
    pts = np.linspace(0.0, 3.0, 9)
    T, S = np.meshgrid(pts, pts, indexing="ij")
    expected = sum(
        g[0, m] * np.conj(g[0, m]) * np.exp(-1j * freqs[m] * (T - S))
        for m in range(3)
    )
    assert np.max(np.abs(D(0, 0, T, S) - expected)) < 1e-12


def test_evolve_decoupled_matches_free_evolution():
    dim = 6
    h_sys = quadratic_hamiltonian(dim)
    model = JointModel(
        h_system=h_sys,
        channel_ops=(fock_operators(dim)["q"],),
        mode_freqs=(1.0,),
        couplings=np.array([[0.0]]),
        mode_dims=(3,),
    )
    psi0 = np.zeros(dim, dtype=complex)
    psi0[0], psi0[1] = 1 / np.sqrt(2), 1 / np.sqrt(2)
    traj = evolve_joint(model, psi0, 1.0, 1e-2, n_samples=5)
    t = traj.times[-1]
    U = expm(-1j * h_sys * t)
    expected = U @ np.outer(psi0, psi0.conj()) @ U.conj().T
    assert trace_distance(traj.states[-1], expected) < 1e-10


def test_evolve_t0_returns_initial_state():
    model = dephasing_model()
    traj = evolve_joint(model, PLUS, 1.0, 1e-2, n_samples=5)
    assert trace_distance(traj.states[0], np.outer(PLUS, PLUS.conj())) < 1e-14


def test_single_mode_dephasing_decay_and_revival():
    # closed form: |rho01(t)| = 1/2 exp(-4 g^2 / w^2 (1 - cos w t)),
    # full revival at t = 2 pi / w
    g, omega = 0.2, 1.0
    model = dephasing_model(g=g, omega=omega, dim=8)
    t_rev = 2.0 * np.pi / omega
    traj = evolve_joint(model, PLUS, t_rev, 1e-3, n_samples=9)
    coh = np.abs(traj.states[:, 0, 1])
    expected = 0.5 * np.exp(-4.0 * g**2 / omega**2 * (1.0 - np.cos(omega * traj.times)))
    assert np.max(np.abs(coh - expected)) < 1e-6
    assert coh[4] < 0.5 - 1e-3  # decayed mid-way
    assert coh[-1] == pytest.approx(0.5, abs=1e-6)  # revived


def test_norm_conservation_and_state_validity():
    model = dephasing_model(g=0.3)
    traj = evolve_joint(model, PLUS, 3.0, 1e-2, n_samples=11)
    norms = np.array(traj.diagnostics["norm"])
    assert np.max(np.abs(norms - 1.0)) < 1e-9
    assert np.min(traj.diagnostics["min_eigenvalue"]) >= -1e-10
    assert np.max(np.abs(np.array(traj.diagnostics["trace"]) - 1.0)) < 1e-10


def test_requires_normalized_state():
    model = dephasing_model()
    with pytest.raises(ValueError, match="normalized"):
        evolve_joint(model, np.array([1.0, 1.0]), 1.0, 1e-2)


def test_compare_identical_trajectories():
    model = dephasing_model()
    traj = evolve_joint(model, PLUS, 1.0, 1e-2, n_samples=5)
    report = compare_with_me(traj, traj, mode_freqs=model.mode_freqs)
    assert report["max_trace_distance"] == 0.0
    assert report["recurrence_time_estimate"] == pytest.approx(2 * np.pi)


def test_compare_rejects_mismatched_sampling():
    model = dephasing_model()
    t1 = evolve_joint(model, PLUS, 1.0, 1e-2, n_samples=5)
    t2 = evolve_joint(model, PLUS, 1.0, 1e-2, n_samples=7)
    with pytest.raises(ValueError, match="times"):
        compare_with_me(t1, t2)


def test_recurrence_estimate_uses_min_gap():
    assert recurrence_estimate([1.0]) == pytest.approx(2 * np.pi)
    assert recurrence_estimate([1.0, 1.6]) == pytest.approx(2 * np.pi / 0.6)


def test_decoupled_oracle_matches_zero_coefficient_me():
    # g = 0 brute force against the master equation with all rates zero
    from nmgme.coefficients import MECoefficients
    from nmgme.grids import make_grid
    from nmgme.propagate import evolve
    from nmgme.scenarios import coherent_state

    dim = 10
    h_sys = quadratic_hamiltonian(dim)
    ops_f = fock_operators(dim)
    model = JointModel(
        h_system=h_sys,
        channel_ops=(ops_f["q"],),
        mode_freqs=(1.0,),
        couplings=np.array([[0.0]]),
        mode_dims=(3,),
    )
    psi0 = coherent_state(dim, 0.8)
    traj_or = evolve_joint(model, psi0, 2.0, 2e-3, n_samples=9)

    grid = make_grid(2.0, 9)
    shape = (9, 1, 1)
    zeros = np.zeros(shape, dtype=complex)
    coeffs = MECoefficients(
        grid=grid, scenario="linear", Gamma=zeros, Theta=zeros.copy(),
        Xi=zeros.copy(), Upsilon=zeros.copy(),
    )
    ops = {"A": [ops_f["q"]], "V": [ops_f["p"]], "H0": h_sys}
    traj_me = evolve(
        np.outer(psi0, psi0.conj()), coeffs, ops, 2.0, 1e-3, n_samples=9,
        truncation_guard=False,
    )
    report = compare_with_me(traj_or, traj_me)
    assert report["max_trace_distance"] < 1e-9


def test_mode_convergence_check_weak_coupling():
    model = dephasing_model(g=0.2, dim=6)
    obs = np.kron(SZ, np.eye(1))  # system observable
    shift = mode_convergence_check(
        model, PLUS, 2.0, 1e-2, np.diag([1.0, -1.0]).astype(complex)
    )
    assert shift < 1e-7
