"""Linear-system definitions: Heisenberg propagator kernels, commutator
kernels, and truncated Fock-space operator matrices.

For a quadratic Hamiltonian the Heisenberg flow of ``(q, p)`` is a 2x2
matrix ``Phi(u) = exp(-A u)`` mapping time-``t`` operators to earlier
operators at ``s = t - u``.  Propagator kernels, channel commutators and
the closed master-equation coefficients are all built from this flow.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "LinearSystem",
    "PropagatorKernels",
    "CommutatorKernel",
    "harmonic_kernels",
    "qmupl_kernels",
    "commutator_kernel",
    "zero_commutator",
    "fock_operators",
    "quadratic_hamiltonian",
    "SYMPLECTIC_FORM",
]

#: Symplectic form of the canonical pair, [q, p] = i * SYMPLECTIC_FORM[0, 1].
SYMPLECTIC_FORM = np.array([[0.0, 1.0], [-1.0, 0.0]])


@dataclass(frozen=True)
class LinearSystem:
    """Parameters of a quadratic single-mode system.

    ``coupling`` names the channel structure: ``"q"`` for pure position
    coupling, ``"qp"`` for the position-momentum pair ``(q, -mu p)`` of
    the dissipative collapse model.
    """

    m: float = 1.0
    omega: float = 1.0
    mu: float = 0.0
    lam: float = 0.0
    coupling: str = "q"

    def __post_init__(self):
        if self.m <= 0:
            raise ValueError(f"mass must be positive, got {self.m}")
        if self.omega < 0 or self.mu < 0 or self.lam < 0:
            raise ValueError("omega, mu and lam must be non-negative")
        if self.coupling not in ("q", "qp"):
            raise ValueError(f"unknown coupling spec {self.coupling!r}")
        if self.coupling == "qp":
            lm = self.lam * self.mu
            if self.omega**2 <= lm**2:
                raise ValueError(
                    "effective frequency sqrt(omega^2 - (lam*mu)^2) must be real: "
                    f"omega^2={self.omega**2} <= (lam*mu)^2={lm**2}"
                )

    @property
    def omega_tilde(self) -> float:
        """Shifted frequency ``sqrt(omega^2 - (lam mu)^2)``."""
        lm = self.lam * self.mu
        return float(np.sqrt(self.omega**2 - lm**2))


@dataclass(frozen=True)
class PropagatorKernels:
    """Homogeneous Heisenberg-solution kernels of a linear system.

    ``C(u)`` and ``C_tilde(u)`` are the ``d x d`` channel kernels that
    expand a channel operator at time ``t - u`` over the boundary pair at
    time ``t``; ``flow(u)`` is the underlying 2x2 flow of ``(q, p)``.
    For single-channel position coupling ``C_tilde`` multiplies the
    momentum operator (the mass factor is absorbed in ``C_tilde``, so
    ``C_tilde'(0) = -1/m``).
    """

    dim: int
    m: float
    flow: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    C: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    C_tilde: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    generator: np.ndarray = field(repr=False, default=None)
    label: str = "linear"


def _harmonic_flow(m: float, omega: float) -> Callable[[np.ndarray], np.ndarray]:
    def flow(u):
        u = np.asarray(u, dtype=float)
        out = np.empty((2, 2) + u.shape)
        if omega == 0.0:
            out[0, 0] = 1.0
            out[0, 1] = -u / m
            out[1, 0] = 0.0
            out[1, 1] = 1.0
        else:
            c, s = np.cos(omega * u), np.sin(omega * u)
            out[0, 0] = c
            out[0, 1] = -s / (m * omega)
            out[1, 0] = m * omega * s
            out[1, 1] = c
        return out

    return flow


def harmonic_kernels(m: float, omega: float) -> PropagatorKernels:
    """Kernels of the harmonic oscillator with position coupling.

    ``C(u) = cos(omega u)`` and ``C_tilde(u) = -sin(omega u) / (m omega)``;
    the free-particle limit ``omega = 0`` extends continuously to
    ``C = 1``, ``C_tilde = -u / m``.
    """
    if m <= 0:
        raise ValueError(f"mass must be positive, got {m}")
    if omega < 0:
        raise ValueError(f"frequency must be non-negative, got {omega}")
    flow = _harmonic_flow(m, omega)
    gen = np.array([[0.0, 1.0 / m], [-m * omega**2, 0.0]])
    return PropagatorKernels(
        dim=1,
        m=m,
        flow=flow,
        C=lambda u: flow(u)[0, 0][np.newaxis, np.newaxis],
        C_tilde=lambda u: flow(u)[0, 1][np.newaxis, np.newaxis],
        generator=gen,
        label="harmonic",
    )


def qmupl_kernels(m: float, omega: float, lam: float, mu: float) -> PropagatorKernels:
    """Kernels of the dissipative collapse model with channels
    ``(q, -mu p)``.

    The 2x2 flow uses the shifted frequency
    ``omega_tilde = sqrt(omega^2 - (lam mu)^2)``; construction is rejected
    when the shift would make it imaginary.  ``C`` is the flow itself and
    ``C_tilde`` its transpose.
    """
    sys = LinearSystem(m=m, omega=omega, mu=mu, lam=lam, coupling="qp")
    wt = sys.omega_tilde
    lm = lam * mu

    def flow(u):
        u = np.asarray(u, dtype=float)
        c, s = np.cos(wt * u), np.sin(wt * u)
        out = np.empty((2, 2) + u.shape)
        out[0, 0] = c - (lm / wt) * s
        out[0, 1] = -s / (m * wt)
        out[1, 0] = (m * omega**2 / wt) * s
        out[1, 1] = c + (lm / wt) * s
        return out

    gen = np.array([[lm, 1.0 / m], [-m * omega**2, -lm]])
    return PropagatorKernels(
        dim=2,
        m=m,
        flow=flow,
        C=flow,
        C_tilde=lambda u: np.swapaxes(flow(u), 0, 1),
        generator=gen,
        label="qmupl",
    )


@dataclass(frozen=True)
class CommutatorKernel:
    """c-number commutator kernel ``f_jk(t, s) = [A_j(t), A_k(s)]``.

    Values are purely imaginary for canonical ``q``/``p`` channel
    combinations and antisymmetric under ``(j, t) <-> (k, s)``.
    ``is_zero`` marks constant coupling operators (pure dephasing), for
    which all Wick corrections vanish identically.
    """

    n_channels: int
    evaluator: Callable[[int, int, np.ndarray, np.ndarray], np.ndarray] = field(repr=False)
    is_zero: bool = False

    def __call__(self, j: int, k: int, t, s):
        if not (0 <= j < self.n_channels and 0 <= k < self.n_channels):
            raise ValueError(f"channel pair ({j}, {k}) outside range")
        return self.evaluator(j, k, np.asarray(t, dtype=float), np.asarray(s, dtype=float))


def zero_commutator(n_channels: int = 1) -> CommutatorKernel:
    """Kernel of constant (mutually commuting) coupling operators."""

    def evaluator(j, k, t, s):
        return np.zeros(np.broadcast(t, s).shape, dtype=complex)

    return CommutatorKernel(n_channels, evaluator, is_zero=True)


def _channel_matrix(channel_ops: Sequence) -> np.ndarray:
    rows = []
    for spec in channel_ops:
        if isinstance(spec, str):
            if spec == "q":
                rows.append((1.0, 0.0))
            elif spec == "p":
                rows.append((0.0, 1.0))
            else:
                raise ValueError(
                    f"channel spec {spec!r} is not a linear combination of q and p"
                )
        else:
            cq, cp = spec
            rows.append((float(cq), float(cp)))
    return np.array(rows)


def commutator_kernel(kernels: PropagatorKernels, channel_ops: Sequence) -> CommutatorKernel:
    """Commutator kernel of linear channels under a quadratic Hamiltonian.

    Each entry of ``channel_ops`` is either ``"q"``, ``"p"`` or a pair of
    coefficients ``(c_q, c_p)`` defining the channel operator
    ``c_q q + c_p p``; anything else is rejected as outside the
    linear-system scope.  With ``S`` the channel matrix and ``Phi`` the
    flow, ``f_jk(t, s) = i [S Phi(s - t) Omega S^T]_jk``, which for
    single-channel position coupling reduces to
    ``f(t, s) = i sin(omega (s - t)) / (m omega)``.
    """
    S = _channel_matrix(channel_ops)
    flow = kernels.flow

    def evaluator(j, k, t, s):
        u = np.asarray(s, dtype=float) - np.asarray(t, dtype=float)
        phi = flow(u)
        # contract channel rows against the symplectic form
        mat = np.einsum("a,abX,bc,c->X", S[j], phi.reshape(2, 2, -1), SYMPLECTIC_FORM, S[k])
        return 1j * mat.reshape(u.shape)

    return CommutatorKernel(S.shape[0], evaluator, is_zero=not S.any())


def fock_operators(dim: int, m: float = 1.0, omega: float = 1.0) -> dict:
    """Position, momentum and number matrices in a truncated Fock basis.

    Standard ladder construction with ``q = (a + a^dag) / sqrt(2 m omega)``
    and ``p = i sqrt(m omega / 2) (a^dag - a)``.  The bottom-right
    row/column violates the canonical commutator; accuracy assertions
    should exclude the last basis state.
    """
    if dim < 2:
        raise ValueError(f"Fock dimension must be at least 2, got {dim}")
    if m <= 0 or omega <= 0:
        raise ValueError("m and omega must be positive")
    a = np.diag(np.sqrt(np.arange(1, dim, dtype=float)), k=1).astype(complex)
    ad = a.conj().T
    q = (a + ad) / np.sqrt(2.0 * m * omega)
    p = 1j * np.sqrt(m * omega / 2.0) * (ad - a)
    return {"q": q, "p": p, "number": ad @ a}


def quadratic_hamiltonian(
    dim: int, m: float = 1.0, omega: float = 1.0, lam_mu: float = 0.0
) -> np.ndarray:
    """Fock matrix of ``p^2/2m + m omega^2 q^2 / 2 + (lam mu / 2) {q, p}``."""
    ops = fock_operators(dim, m, omega)
    q, p = ops["q"], ops["p"]
    h = p @ p / (2.0 * m) + 0.5 * m * omega**2 * (q @ q)
    if lam_mu:
        h = h + 0.5 * lam_mu * (q @ p + p @ q)
    return h
