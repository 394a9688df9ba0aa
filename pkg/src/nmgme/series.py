"""Wick-contraction kernel recursions and the nonlocal kernel series.

At a fixed outer time ``t`` the memory kernels ``A_jk(t, s1)`` and
``B_jk(t, s1)`` of the closed master equation are sums of contraction
chains built from the bath correlation ``D`` and the channel commutator
``f``.  A chain is a sequence of elementary contractions; splitting a
chain at its last link yields closed two-table recursions:

* ``b^n`` chains end by leaving a bath-correlation factor behind and are
  represented by a table over ``(s1, t2)``.  Their source-time dependence
  factorizes through ``D^Im(t, s1)``, so the recursion composes the
  source-independent factor (stored alongside the table).
* ``a^n`` chains end by leaving a commutator-channel operator behind.
  Their dependence on the final pair time ``t2`` enters only through the
  last bath factor, so the table is stored as a pair ``(P, Q)`` with
  ``a^n(s1; t2, s2) = P(s1, s2) D^Re(t2, s2) + Q(s1, s2) D^Im(t2, s2)``
  (channel indices contracted against the last factor).

All integrals are iterated rules on the triangle ``0 <= s <= tau <= t``
with the half-weight diagonal convention of :func:`nmgme.grids.theta_mask`.
Builds at distinct outer times are independent pure computations and can
run concurrently; within one build the reduction order is fixed, so
results are reproducible bit for bit.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .bath import CorrelationKernel
from .grids import TimeGrid, prefix_weights, quad_weights, suffix_weights, theta_mask
from .system import CommutatorKernel

__all__ = [
    "SeriesConfig",
    "KernelTable",
    "ABKernels",
    "SeriesContext",
    "contraction_BA",
    "contraction_BB",
    "recurse_b",
    "recurse_a",
    "alpha_beta",
    "assemble_AB",
    "dump_convergence_csv",
]


@dataclass(frozen=True)
class SeriesConfig:
    """Truncation control for the kernel series.

    ``max_order`` bounds the number of contraction orders; the series is
    cut earlier once the relative sup-norm of the last included order
    drops below ``eps_series``.
    """

    max_order: int = 3
    eps_series: float = 1e-6
    method: str = "trapezoid"

    def __post_init__(self):
        if self.max_order < 0:
            raise ValueError(f"max_order must be >= 0, got {self.max_order}")
        if self.eps_series <= 0:
            raise ValueError(f"eps_series must be positive, got {self.eps_series}")


class SeriesContext:
    """Sampled inputs shared by every table at one outer time.

    Holds the correlation and commutator samples on the prefix grid
    ``[0, t]``, the quadrature weight matrices, and preallocated scratch
    buffers so the order-``n`` recursion does not allocate in its inner
    contractions.
    """

    def __init__(
        self,
        D: CorrelationKernel,
        f: CommutatorKernel,
        grid: TimeGrid,
        outer_index: int,
        method: str = "trapezoid",
    ):
        if D.n_channels != f.n_channels:
            raise ValueError(
                f"correlation kernel has {D.n_channels} channels, "
                f"commutator kernel has {f.n_channels}"
            )
        self.D = D
        self.f = f
        self.grid = grid
        self.outer_index = int(outer_index)
        self.method = method
        self.d = D.n_channels
        pts = grid.prefix(self.outer_index)
        self.n = pts.size
        self.outer_time = float(pts[-1])

        T1, T2 = np.meshgrid(pts, pts, indexing="ij")
        d, n = self.d, self.n
        self.DRe = np.empty((d, d, n, n))
        self.DIm = np.empty((d, d, n, n))
        self.F = np.empty((d, d, n, n), dtype=complex)
        for j in range(d):
            for k in range(d):
                val = D(j, k, T1, T2)
                self.DRe[j, k] = np.real(val)
                self.DIm[j, k] = np.imag(val)
                self.F[j, k] = f(j, k, T1, T2)

        theta = theta_mask(n)
        # F with step mask theta(first - second) resp. theta(second - first)
        self.F_above = self.F * theta
        self.F_below = self.F * theta.T

        self.w = quad_weights(n, grid.h, method) if n > 1 else np.zeros(1)
        self.Wpre = prefix_weights(n, grid.h, method)
        self.Wsuf = suffix_weights(n, grid.h, method)

        # D evaluated with the first slot pinned at the outer time
        self.DRe_t = self.DRe[:, :, -1, :]
        self.DIm_t = self.DIm[:, :, -1, :]

        # preallocated intermediates reused by every recursion order
        shape = (d, d, n, n)
        self._scratch = {
            "H": np.empty(shape, dtype=complex),
            "V1": np.empty(shape, dtype=complex),
            "V2": np.empty(shape, dtype=complex),
            "wa": np.empty(shape, dtype=complex),
        }


@dataclass(frozen=True)
class KernelTable:
    """Grid-sampled kernel of one series order at a fixed outer time.

    ``kind`` is ``"b"`` or ``"a"``.  For ``kind == "b"`` the payload
    ``values[j, k, a, b]`` samples ``b^n_{j,k}(s_a, t_b)`` with the
    source pinned at the outer time; ``values_aux`` holds the
    source-independent chain factor consumed by the next recursion step.
    For ``kind == "a"`` the payload is the pair ``(P, Q)`` described in
    the module docstring.
    """

    kind: str
    order: int
    ctx: SeriesContext = field(repr=False)
    values: np.ndarray = field(repr=False)
    values_aux: np.ndarray = field(repr=False)

    def __post_init__(self):
        if not np.isfinite(self.values).all() or not np.isfinite(self.values_aux).all():
            raise ValueError(f"non-finite entries in order-{self.order} {self.kind} table")

    @property
    def outer_time(self) -> float:
        return self.ctx.outer_time

    @property
    def n_channels(self) -> int:
        return self.ctx.d

    def a_values(self, t2_index: int) -> np.ndarray:
        """Materialize ``a^n[j, j2](s1, s2)`` at final pair time ``t_2``.

        Only meaningful for ``kind == "a"``; contracts the stored pair
        against the bath correlation evaluated at ``t2``.
        """
        if self.kind != "a":
            raise ValueError("a_values is defined for 'a' tables only")
        DRe, DIm = self.ctx.DRe, self.ctx.DIm
        return np.einsum(
            "jlab,mlb->jmab", self.values, DRe[:, :, t2_index, :]
        ) + np.einsum("jlab,mlb->jmab", self.values_aux, DIm[:, :, t2_index, :])


def _check_same_build(*tables: KernelTable) -> SeriesContext:
    ctx = tables[0].ctx
    for t in tables[1:]:
        if t.ctx is not ctx and (
            t.ctx.outer_index != ctx.outer_index
            or t.ctx.grid is not ctx.grid
            or t.ctx.d != ctx.d
        ):
            raise ValueError("kernel tables come from different grids or outer times")
    return ctx


def _make_context(D, f, t, grid, method) -> SeriesContext:
    idx = int(round(t / grid.h))
    if idx >= grid.n_points or abs(grid.points[min(idx, grid.n_points - 1)] - t) > 1e-9 * max(
        1.0, grid.t_max
    ):
        raise ValueError(f"outer time {t} is not a grid point of the given grid")
    return SeriesContext(D, f, grid, idx, method)


def contraction_BA(
    D: CorrelationKernel,
    f: CommutatorKernel,
    t: float,
    grid: TimeGrid,
    method: str = "trapezoid",
    ctx: SeriesContext | None = None,
) -> KernelTable:
    """Order-1 chain ending in a bath-correlation factor.

    ``b^1_{j,j2}(s1, t2) = 2i D^Im_{jl}(t, s1) f^{j2 l}(t2, s1)
    theta(t2 - s1)``; the step function is sampled with the half-weight
    diagonal convention.
    """
    if ctx is None:
        ctx = _make_context(D, f, t, grid, method)
    # source-independent factor g^1[l, j2](s1, t2) = f^{j2 l}(t2, s1) theta(t2 - s1)
    g1 = np.ascontiguousarray(np.einsum("mlba->lmab", ctx.F_above))
    b1 = 2j * np.einsum("jla,lmab->jmab", ctx.DIm_t, g1)
    return KernelTable(kind="b", order=1, ctx=ctx, values=b1, values_aux=g1)


def contraction_BB(
    D: CorrelationKernel,
    f: CommutatorKernel,
    t: float,
    grid: TimeGrid,
    method: str = "trapezoid",
    ctx: SeriesContext | None = None,
) -> KernelTable:
    """Order-1 chain ending in a channel operator.

    Stored as the pair ``(P, Q)`` with
    ``a^1_{j,j2}(s1; t2, s2) = P_{j,l}(s1, s2) D^Re_{j2 l}(t2, s2)
    + Q_{j,l}(s1, s2) D^Im_{j2 l}(t2, s2)`` where

    ``P^1_{j,l}(s1, s2) = 2i D^Im_{jm}(t, s1) f^{l m}(s2, s1) theta(s2 - s1)``
    ``Q^1_{j,l}(s1, s2) = 2i D^Re_{jm}(t, s1) f^{l m}(s2, s1) theta(s2 - s1)``

    i.e. the commutator is oriented later-time-first, consistent with the
    time-ordered contraction of the two bath vertices.
    """
    if ctx is None:
        ctx = _make_context(D, f, t, grid, method)
    # f^{l m}(s2, s1) theta(s2 - s1) reindexed to [l, m, s1, s2]
    fnode = np.einsum("lmba->lmab", ctx.F_above)
    P1 = 2j * np.einsum("jma,lmab->jlab", ctx.DIm_t, fnode)
    Q1 = 2j * np.einsum("jma,lmab->jlab", ctx.DRe_t, fnode)
    return KernelTable(kind="a", order=1, ctx=ctx, values=P1, values_aux=Q1)


def recurse_b(n: int, b1: KernelTable, b_prev: KernelTable) -> KernelTable:
    """Chain composition ``b^n = b^1 o b^{n-1}`` over the time triangle.

    The inner chain is re-sourced at the integrated pair, which is what
    the stored source-independent factor provides.
    """
    if n < 2:
        raise ValueError("recursion starts at order 2")
    if b1.kind != "b" or b_prev.kind != "b":
        raise ValueError("recurse_b needs two 'b' tables")
    if b_prev.order != n - 1:
        raise ValueError(f"need order {n - 1} table, got order {b_prev.order}")
    ctx = _check_same_build(b1, b_prev)
    g_prev = b_prev.values_aux
    # H[k, j2](tau', t2) = int_0^{tau'} dsig' D^Im[k, m](tau', sig') g^{n-1}[m, j2](sig', t2)
    H = ctx._scratch["H"]
    np.einsum("ts,kmts,mjsu->kjtu", ctx.Wpre, ctx.DIm, g_prev, out=H, optimize=False)
    # g^n[l, j2](s1, t2) = 2i int dtau' f^{k l}(tau', s1) theta(tau' - s1) H[k, j2](tau', t2)
    g_n = np.einsum("t,klts,kjtu->ljsu", ctx.w, ctx.F_above, H, optimize=False)
    g_n *= 2j
    b_n = 2j * np.einsum("jla,lmab->jmab", ctx.DIm_t, g_n)
    return KernelTable(kind="b", order=n, ctx=ctx, values=b_n, values_aux=g_n)


def recurse_a(n: int, a_prev: KernelTable, b_prev: KernelTable) -> KernelTable:
    """Order-``n`` operator-terminated chains from order ``n - 1``.

    Splitting at the last link, either a bath-terminated chain of order
    ``n - 1`` is closed by a two-vertex contraction, or an
    operator-terminated chain is extended by the mixed
    channel-bath contraction
    ``-2i D^Im_{j2 l}(t2, s2) f^{k l}(t', s2) theta(s2 - t')`` (the
    time-ordered orientation: the surviving vertex sits later).
    """
    if n < 2:
        raise ValueError("recursion starts at order 2")
    if a_prev.kind != "a" or b_prev.kind != "b":
        raise ValueError("recurse_a needs an 'a' table and a 'b' table")
    if a_prev.order != n - 1 or b_prev.order != n - 1:
        raise ValueError(f"need order {n - 1} tables, got {a_prev.order}, {b_prev.order}")
    ctx = _check_same_build(a_prev, b_prev)
    w, Wpre = ctx.w, ctx.Wpre
    DRe, DIm = ctx.DRe, ctx.DIm

    # last link of bath-terminated type: V_X[k, m](tau', s2)
    #   = int_0^{tau'} dsig' D^X[k, l](tau', sig') f^{m l}(s2, sig') theta(s2 - sig')
    V_im = ctx._scratch["V1"]
    V_re = ctx._scratch["V2"]
    np.einsum("ts,klts,mlus->kmtu", Wpre, DIm, ctx.F_above, out=V_im, optimize=False)
    np.einsum("ts,klts,mlus->kmtu", Wpre, DRe, ctx.F_above, out=V_re, optimize=False)
    P_n = 2j * np.einsum("t,jkat,kmtu->jmau", w, b_prev.values, V_im, optimize=False)
    Q_n = 2j * np.einsum("t,jkat,kmtu->jmau", w, b_prev.values, V_re, optimize=False)

    # last link of channel type extends a^{n-1}: needs its inner s'-integral
    # wa[j, k](s1, tau') = int_0^{tau'} dsig' a^{n-1}[j, k](s1; tau', sig')
    wa = ctx._scratch["wa"]
    np.einsum("ts,jlas,klts->jkat", Wpre, a_prev.values, DRe, out=wa, optimize=False)
    wa += np.einsum("ts,jlas,klts->jkat", Wpre, a_prev.values_aux, DIm, optimize=False)
    Q_n -= 2j * np.einsum("t,jkat,kmtu->jmau", w, wa, ctx.F_below, optimize=False)

    return KernelTable(kind="a", order=n, ctx=ctx, values=P_n, values_aux=Q_n)


def alpha_beta(n: int, b_table: KernelTable, a_table: KernelTable) -> dict:
    """Order-``n`` series corrections ``alpha^n_{jk}(t, s1)``,
    ``beta^n_{jk}(t, s1)``.

    ``alpha^n = (-1)^n (int_{s1}^t dtau int_0^t dsig b^n(sig, tau)
    D^Re(tau, s1) + int_0^t dsig int_0^{s1} ds2 a^n(sig; s1, s2))`` and
    ``beta^n`` is the bath-terminated part against ``D^Im``.
    """
    if b_table.kind != "b" or a_table.kind != "a":
        raise ValueError("alpha_beta needs a 'b' table and an 'a' table")
    if b_table.order != n or a_table.order != n:
        raise ValueError(
            f"order mismatch: requested {n}, tables are "
            f"{b_table.order} and {a_table.order}"
        )
    ctx = _check_same_build(b_table, a_table)
    sign = (-1.0) ** n
    w, Wpre, Wsuf = ctx.w, ctx.Wpre, ctx.Wsuf
    DRe, DIm = ctx.DRe, ctx.DIm

    M = np.einsum("s,jlst->jlt", w, b_table.values)
    alpha = np.einsum("at,jlt,lkta->jka", Wsuf, M, DRe, optimize=False)
    beta = np.einsum("at,jlt,lkta->jka", Wsuf, M, DIm, optimize=False)

    Pbar = np.einsum("s,jlsb->jlb", w, a_table.values)
    Qbar = np.einsum("s,jlsb->jlb", w, a_table.values_aux)
    alpha += np.einsum("ab,jlb,klab->jka", Wpre, Pbar, DRe, optimize=False)
    alpha += np.einsum("ab,jlb,klab->jka", Wpre, Qbar, DIm, optimize=False)

    alpha *= sign
    beta *= sign
    return {"alpha": alpha, "beta": beta}


@dataclass(frozen=True)
class ABKernels:
    """Assembled nonlocal kernels at one outer time.

    ``A[j, k, a]`` samples ``A_jk(t, s_a)`` on the prefix grid, likewise
    ``B``.  ``per_order`` records ``(n, sup|alpha^n|, sup|beta^n|)`` for
    every included order; ``converged`` is False when the last order still
    exceeded the threshold (a reported warning, not a failure).
    """

    outer_index: int
    outer_time: float
    grid: TimeGrid
    A: np.ndarray
    B: np.ndarray
    achieved_order: int
    last_order_norm: float
    per_order: tuple
    converged: bool


def assemble_AB(
    D: CorrelationKernel,
    f: CommutatorKernel,
    config: SeriesConfig,
    t: float,
    grid: TimeGrid,
    force_series: bool = False,
) -> ABKernels:
    """Truncated kernel series ``A = D^Re + sum alpha^n``,
    ``B = D^Im + sum beta^n`` at outer time ``t``.

    Two exact closures short-circuit the series: constant coupling
    operators (``f`` identically zero) and purely real correlation
    kernels, for which every correction vanishes identically and the
    zeroth order is returned bit for bit.  ``force_series`` disables the
    shortcut (the recursions then produce exact zeros anyway).
    """
    ctx = _make_context(D, f, t, grid, config.method)
    A0 = ctx.DRe_t.copy()
    B0 = ctx.DIm_t.copy()

    closure = (f.is_zero or D.is_real) and not force_series
    if closure or config.max_order == 0 or ctx.n == 1:
        return ABKernels(
            outer_index=ctx.outer_index,
            outer_time=ctx.outer_time,
            grid=grid,
            A=A0,
            B=B0,
            achieved_order=0,
            last_order_norm=0.0,
            per_order=(),
            converged=True,
        )

    ref = max(np.max(np.abs(A0)), np.max(np.abs(B0)), 1e-300)
    A, B = A0, B0
    per_order = []
    b_table = contraction_BA(D, f, t, grid, ctx=ctx)
    a_table = contraction_BB(D, f, t, grid, ctx=ctx)
    b1 = b_table
    last_rel = 0.0
    achieved = 0
    converged = True
    for n in range(1, config.max_order + 1):
        if n >= 2:
            a_table = recurse_a(n, a_table, b_table)
            b_table = recurse_b(n, b1, b_table)
        corr = alpha_beta(n, b_table, a_table)
        alpha_n, beta_n = corr["alpha"], corr["beta"]
        norm_a = float(np.max(np.abs(alpha_n)))
        norm_b = float(np.max(np.abs(beta_n)))
        per_order.append((n, norm_a, norm_b))
        A = A + alpha_n
        B = B + beta_n
        achieved = n
        last_rel = (norm_a + norm_b) / ref
        if last_rel < config.eps_series:
            break
    else:
        converged = last_rel < config.eps_series

    return ABKernels(
        outer_index=ctx.outer_index,
        outer_time=ctx.outer_time,
        grid=grid,
        A=A,
        B=B,
        achieved_order=achieved,
        last_order_norm=last_rel,
        per_order=tuple(per_order),
        converged=converged,
    )


def dump_convergence_csv(results, path) -> None:
    """Write per-order sup-norms of a sequence of builds to CSV.

    Columns: ``t, n, norm_alpha, norm_beta``, one row per included order.
    """
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "n", "norm_alpha", "norm_beta"])
        for res in results:
            for n, na, nb in res.per_order:
                writer.writerow(
                    [f"{res.outer_time:.17g}", n, f"{na:.17g}", f"{nb:.17g}"]
                )
