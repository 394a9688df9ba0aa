"""Brute-force ground truth: exact unitary evolution of the system plus
a few discrete bath modes, followed by a partial trace.

The joint Hamiltonian is time independent, so the evolution is a
repeated application of one scaled-and-squared matrix exponential: exact
per step, with no integrator coupling between oracle and master-equation
errors.  The induced bath correlation kernel of a model equals
``make_discrete_modes`` on the same ``(frequencies, couplings)`` by
construction, so both sides of a comparison share one bath definition.

Discrete-mode kernels are quasi-periodic; comparisons are meaningful
only below the bath recurrence time, which the comparison report
estimates as ``2 pi / min gap(frequencies)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .bath import CorrelationKernel, make_discrete_modes
from .propagate import Trajectory, aligned_steps, diagnostics, trace_distance

__all__ = [
    "JointModel",
    "build_joint",
    "evolve_joint",
    "compare_with_me",
    "recurrence_estimate",
    "mode_convergence_check",
]

DEFAULT_DIMENSION_CAP = 4096


@dataclass(frozen=True)
class JointModel:
    """System plus a finite list of bosonic bath modes.

    ``channel_ops`` are the Hermitian system coupling operators ``A_j``;
    ``couplings[j, m]`` couples channel ``j`` to mode ``m`` through the
    field ``g_jm b_m + conj(g_jm) b_m^dag``.  ``mode_dims`` truncates
    each mode's Fock space (6 is plenty at weak coupling).
    """

    h_system: np.ndarray = field(repr=False)
    channel_ops: tuple = field(repr=False)
    mode_freqs: tuple
    couplings: np.ndarray = field(repr=False)
    mode_dims: tuple = ()
    dimension_cap: int = DEFAULT_DIMENSION_CAP

    def __post_init__(self):
        freqs = np.asarray(self.mode_freqs, dtype=float)
        if freqs.size == 0:
            raise ValueError("need at least one bath mode")
        g = np.atleast_2d(np.asarray(self.couplings, dtype=complex))
        if g.shape != (len(self.channel_ops), freqs.size):
            raise ValueError(
                f"couplings shape {g.shape} inconsistent with "
                f"{len(self.channel_ops)} channels x {freqs.size} modes"
            )
        if not self.mode_dims:
            object.__setattr__(self, "mode_dims", tuple(6 for _ in freqs))
        if len(self.mode_dims) != freqs.size:
            raise ValueError("one Fock dimension per mode required")
        dim = self.joint_dim
        if dim > self.dimension_cap:
            raise ValueError(
                f"joint dimension {dim} exceeds cap {self.dimension_cap}"
            )
        ds = self.h_system.shape[0]
        for op in self.channel_ops:
            if op.shape != (ds, ds):
                raise ValueError("channel operator dimension mismatch with system")

    @property
    def system_dim(self) -> int:
        return self.h_system.shape[0]

    @property
    def joint_dim(self) -> int:
        return self.system_dim * int(np.prod(self.mode_dims))

    def correlation_kernel(self) -> CorrelationKernel:
        """The bath kernel induced by the mode list (vacuum state)."""
        return make_discrete_modes(self.mode_freqs, self.couplings)


def _mode_operator(op: np.ndarray, which: int, mode_dims) -> np.ndarray:
    """Embed a single-mode operator into the bath tensor product."""
    out = np.array([[1.0 + 0j]])
    for m, dm in enumerate(mode_dims):
        factor = op if m == which else np.eye(dm, dtype=complex)
        out = np.kron(out, factor)
    return out


def build_joint(model: JointModel) -> np.ndarray:
    """Assemble the joint Hamiltonian matrix.

    ``H = H_S x 1 + 1 x sum_m w_m n_m + sum_jm A_j x (g_jm b_m + h.c.)``.
    Hermiticity defect of the result is checked below 1e-12.
    """
    dims = model.mode_dims
    d_bath = int(np.prod(dims))
    eye_s = np.eye(model.system_dim, dtype=complex)
    eye_b = np.eye(d_bath, dtype=complex)

    H = np.kron(model.h_system.astype(complex), eye_b)
    g = np.atleast_2d(np.asarray(model.couplings, dtype=complex))
    for m, (freq, dm) in enumerate(zip(model.mode_freqs, dims)):
        b = np.diag(np.sqrt(np.arange(1, dm, dtype=float)), k=1).astype(complex)
        number = b.conj().T @ b
        H += freq * np.kron(eye_s, _mode_operator(number, m, dims))
        for j, A in enumerate(model.channel_ops):
            if g[j, m] == 0:
                continue
            phi = g[j, m] * b + np.conj(g[j, m]) * b.conj().T
            H += np.kron(A.astype(complex), _mode_operator(phi, m, dims))

    defect = np.max(np.abs(H - H.conj().T))
    if defect > 1e-12:
        raise ValueError(f"joint Hamiltonian not Hermitian: defect {defect:.3e}")
    return H


def _vacuum(model: JointModel) -> np.ndarray:
    vac = np.zeros(int(np.prod(model.mode_dims)), dtype=complex)
    vac[0] = 1.0
    return vac


def _reduce(psi: np.ndarray, d_s: int) -> np.ndarray:
    mat = psi.reshape(d_s, -1)
    return mat @ mat.conj().T


def evolve_joint(
    model: JointModel,
    psi0_system: np.ndarray,
    t_final: float,
    h: float,
    n_samples: int = 101,
    scenario: str = "",
    params: dict | None = None,
) -> Trajectory:
    """Exact reduced dynamics of a factorized initial state.

    ``psi0_system`` is the (pure) system state; the bath starts in the
    vacuum.  The joint state is advanced by a precomputed one-step
    propagator; samples are reduced by partial trace over the bath.
    Norm drift beyond 1e-8 aborts the run.
    """
    psi_s = np.asarray(psi0_system, dtype=complex)
    norm = np.linalg.norm(psi_s)
    if abs(norm - 1.0) > 1e-10:
        raise ValueError("system state must be normalized")
    psi = np.kron(psi_s, _vacuum(model))

    H = build_joint(model)
    sample_times = np.linspace(0.0, t_final, n_samples)
    n_steps, h_eff = aligned_steps(t_final, h, n_samples)
    U = expm(-1j * H * h_eff)

    d_s = model.system_dim
    states = [_reduce(psi, d_s)]
    logs = {
        "trace": [],
        "hermiticity_defect": [],
        "min_eigenvalue": [],
        "purity": [],
        "norm": [],
    }

    def record(rho, vec):
        diag = diagnostics(rho)
        for key in ("trace", "hermiticity_defect", "min_eigenvalue", "purity"):
            logs[key].append(diag[key])
        logs["norm"].append(float(np.linalg.norm(vec)))

    record(states[0], psi)
    next_sample = 1
    t = 0.0
    for step in range(n_steps):
        psi = U @ psi
        t = (step + 1) * h_eff
        norm = np.linalg.norm(psi)
        if abs(norm - 1.0) > 1e-8:
            raise RuntimeError(f"joint norm drifted to {norm} at t={t:.6g}")
        while next_sample < n_samples and sample_times[next_sample] <= t + 1e-12:
            rho = _reduce(psi, d_s)
            states.append(rho)
            record(rho, psi)
            next_sample += 1

    return Trajectory(
        times=sample_times[: len(states)],
        states=np.array(states),
        diagnostics=logs,
        scenario=scenario,
        params=params or {},
        source="oracle",
    )


def recurrence_estimate(mode_freqs) -> float:
    """Rough bath recurrence time ``2 pi / min gap`` of the mode comb.

    The gap set contains the frequencies themselves and their pairwise
    differences; a single mode gives ``2 pi / omega``.
    """
    freqs = np.sort(np.asarray(mode_freqs, dtype=float))
    gaps = list(freqs)
    for i in range(len(freqs)):
        for j in range(i + 1, len(freqs)):
            diff = freqs[j] - freqs[i]
            if diff > 1e-12:
                gaps.append(diff)
    return float(2.0 * np.pi / min(gaps))


def compare_with_me(
    oracle_traj: Trajectory, me_traj: Trajectory, mode_freqs=None
) -> dict:
    """Pointwise trace distances between matched trajectories.

    Rejects mismatched sample times or dimensions.  The report carries
    the distance curve, its maximum, and (when the mode comb is given)
    the bath recurrence estimate that bounds the meaningful window.
    """
    ta, tb = oracle_traj.times, me_traj.times
    if len(ta) != len(tb) or np.max(np.abs(np.asarray(ta) - np.asarray(tb))) > 1e-9:
        raise ValueError("trajectories sampled at different times")
    if oracle_traj.states.shape != me_traj.states.shape:
        raise ValueError("trajectories have different system dimensions")
    dists = [
        trace_distance(a, b) for a, b in zip(oracle_traj.states, me_traj.states)
    ]
    report = {
        "times": [float(t) for t in ta],
        "trace_distance": [float(d) for d in dists],
        "max_trace_distance": float(np.max(dists)),
    }
    if mode_freqs is not None:
        report["recurrence_time_estimate"] = recurrence_estimate(mode_freqs)
    return report


def mode_convergence_check(
    model: JointModel,
    psi0_system: np.ndarray,
    t_final: float,
    h: float,
    observable: np.ndarray,
    mode_index: int = 0,
    n_samples: int = 21,
) -> float:
    """Doubling one mode's Fock dimension: max shift of an observable.

    Returns the largest absolute change over the sample times; weak
    coupling runs should stay below 1e-7.
    """
    traj = evolve_joint(model, psi0_system, t_final, h, n_samples)
    dims = list(model.mode_dims)
    dims[mode_index] *= 2
    bigger = JointModel(
        h_system=model.h_system,
        channel_ops=model.channel_ops,
        mode_freqs=model.mode_freqs,
        couplings=model.couplings,
        mode_dims=tuple(dims),
        dimension_cap=max(model.dimension_cap, model.joint_dim * 2),
    )
    traj2 = evolve_joint(bigger, psi0_system, t_final, h, n_samples)
    vals1 = [np.real(np.trace(observable @ r)) for r in traj.states]
    vals2 = [np.real(np.trace(observable @ r)) for r in traj2.states]
    return float(np.max(np.abs(np.array(vals1) - np.array(vals2))))
