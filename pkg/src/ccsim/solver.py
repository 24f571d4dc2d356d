"""MNA assembly, dense LU solve, Newton iteration, quasi-static transient.

Unknown ordering: node voltages in ``Circuit.node_index`` order, then one
branch current per voltage source and per conveyor X port, in declaration
order. The dialect has no energy-storage elements, so a transient run is a
sequence of independent operating-point solves, one per timepoint.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import devices
from .errors import NoConvergenceError, SingularMatrixError, UnknownNodeError
from .netlist import (
    KIND_CCCII,
    KIND_ISOURCE,
    KIND_RESISTOR,
    KIND_VSOURCE,
    Circuit,
    ElementDecl,
)

PIVOT_RTOL = 1e-13  # pivot threshold relative to the matrix infinity norm


@dataclass
class SystemMatrix:
    """Dense linear(ized) MNA system A x = b."""

    matrix: np.ndarray
    rhs: np.ndarray

    @property
    def dimension(self) -> int:
        return self.rhs.shape[0]


@dataclass(frozen=True)
class NewtonOptions:
    abs_tol: float = 1e-9
    max_iter: int = 50
    damping: bool = True

    def __post_init__(self):
        if not self.abs_tol > 0:
            raise ValueError("abs_tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")


@dataclass(eq=False, frozen=True)
class Solution:
    """Solved unknowns at one timepoint, keyed by label.

    Ground is implicitly 0 V and absent from ``voltages``. ``vector`` is the
    raw unknown vector in dense order, kept for residual checks and
    warm starts.
    """

    time: float
    voltages: dict[str, float]
    currents: dict[str, float]
    vector: np.ndarray


@dataclass(eq=False, frozen=True)
class Waveform:
    """Time-indexed solutions plus per-source delivered power."""

    times: np.ndarray  # (T,)
    node_order: tuple[str, ...]
    voltages: np.ndarray  # (T, n_nodes)
    branch_order: tuple[str, ...]
    currents: np.ndarray  # (T, n_branches)
    source_names: tuple[str, ...]
    source_power: np.ndarray  # (T, n_sources), delivery-positive
    sin_freqs: tuple[float, ...] = ()

    def voltage(self, node: str) -> np.ndarray:
        if node == "0":
            return np.zeros_like(self.times)
        try:
            return self.voltages[:, self.node_order.index(node)]
        except ValueError:
            raise UnknownNodeError(f"no trace for node {node!r}") from None

    def current(self, name: str) -> np.ndarray:
        try:
            return self.currents[:, self.branch_order.index(name)]
        except ValueError:
            raise KeyError(f"no branch current for element {name!r}") from None

    def total_source_power(self) -> np.ndarray:
        return self.source_power.sum(axis=1)

    def solution_at(self, index: int) -> Solution:
        return Solution(
            time=float(self.times[index]),
            voltages=dict(zip(self.node_order, self.voltages[index])),
            currents=dict(zip(self.branch_order, self.currents[index])),
            vector=np.concatenate([self.voltages[index], self.currents[index]]),
        )


def source_value(elem: ElementDecl, t: float) -> float:
    """Instantaneous value of an independent source."""
    p = elem.params
    if "dc" in p:
        return p["dc"]
    return p["offset"] + p["amplitude"] * math.sin(2.0 * math.pi * p["freq"] * t)


@dataclass
class _Assembly:
    """Precomputed static stamps plus hooks for time and state dependence."""

    circuit: Circuit
    a_static: np.ndarray = field(init=False)
    rhs_static: np.ndarray = field(init=False)
    vsource_rows: list = field(init=False)  # (element, branch row)
    clamps: list = field(init=False)  # (z row, CcciiParams)

    def __post_init__(self):
        ckt = self.circuit
        n = ckt.size
        self.a_static = np.zeros((n, n))
        self.rhs_static = np.zeros(n)
        self.vsource_rows = []
        self.clamps = []
        for elem in ckt.elements:
            idx = [ckt.dense_index(lbl) for lbl in elem.nodes]
            if elem.kind == KIND_RESISTOR:
                stamp = devices.stamp_resistor((idx[0], idx[1]), elem.params["value"])
            elif elem.kind == KIND_ISOURCE:
                stamp = devices.stamp_isource((idx[0], idx[1]), elem.params["dc"])
            elif elem.kind == KIND_VSOURCE:
                b = ckt.branch_dense_index(elem.name)
                stamp = devices.stamp_vsource((idx[0], idx[1]), b, 0.0)
                stamp = devices.StampContribution(stamp.matrix_entries, ())
                self.vsource_rows.append((elem, b))
            else:
                assert elem.kind == KIND_CCCII
                b = ckt.branch_dense_index(elem.name)
                params = devices.CcciiParams.from_netlist_params(elem.params)
                stamp = devices.stamp_cccii_linear((idx[0], idx[1], idx[2]), b, params)
                if params.level == 2 and idx[2] is not None:
                    self.clamps.append((idx[2], params))
            for r, c, v in stamp.matrix_entries:
                self.a_static[r, c] += v
            for r, v in stamp.rhs_entries:
                self.rhs_static[r] += v

    @property
    def nonlinear(self) -> bool:
        return bool(self.clamps)

    def rhs_at(self, t: float) -> np.ndarray:
        b = self.rhs_static.copy()
        for elem, row in self.vsource_rows:
            b[row] += source_value(elem, t)
        return b

    def system(self, t: float, guess: np.ndarray | None) -> SystemMatrix:
        a = self.a_static.copy()
        b = self.rhs_at(t)
        if guess is None:
            guess = np.zeros(self.circuit.size)
        for row, params in self.clamps:
            v0 = guess[row]
            i0, g0 = devices.eval_clamp(v0, params)
            a[row, row] += g0
            b[row] += g0 * v0 - i0
        return SystemMatrix(a, b)

    def residual_vector(self, t: float, x: np.ndarray) -> np.ndarray:
        f = self.a_static @ x - self.rhs_at(t)
        for row, params in self.clamps:
            f[row] += devices.eval_clamp(x[row], params)[0]
        return f


def assemble(
    circuit: Circuit, t: float = 0.0, guess: Solution | np.ndarray | None = None
) -> SystemMatrix:
    """Sum all device stamps at time ``t``, linearizing rail clamps about
    ``guess`` (zeros when omitted)."""
    if isinstance(guess, Solution):
        guess = guess.vector
    return _Assembly(circuit).system(t, guess)


def residual(circuit: Circuit, t: float, x: np.ndarray) -> np.ndarray:
    """Exact nonlinear KCL/branch residual at state ``x``."""
    return _Assembly(circuit).residual_vector(t, x)


# ── dense LU with partial pivoting ──────────────────────────────────


def lu_factor(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """In-place Doolittle factorization with row pivoting.

    Returns the packed LU matrix and the row permutation. Raises
    SingularMatrixError when a pivot falls below PIVOT_RTOL * ||A||_inf.
    """
    lu = np.array(a, dtype=float)
    if lu.ndim != 2 or lu.shape[0] != lu.shape[1] or lu.shape[0] < 1:
        raise ValueError("matrix must be square and non-empty")
    n = lu.shape[0]
    if not np.all(np.isfinite(lu)):
        raise ValueError("matrix entries must be finite")
    anorm = np.abs(lu).sum(axis=1).max()
    threshold = PIVOT_RTOL * anorm
    perm = np.arange(n)
    for k in range(n):
        p = k + int(np.argmax(np.abs(lu[k:, k])))
        if abs(lu[p, k]) <= threshold:
            raise SingularMatrixError(
                f"pivot {abs(lu[p, k]):.3e} below threshold at column {k} "
                "(floating node or unsolvable topology)"
            )
        if p != k:
            lu[[k, p]] = lu[[p, k]]
            perm[[k, p]] = perm[[p, k]]
        lu[k + 1:, k] /= lu[k, k]
        lu[k + 1:, k + 1:] -= np.outer(lu[k + 1:, k], lu[k, k + 1:])
    return lu, perm


def lu_apply(lu: np.ndarray, perm: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve with an existing factorization; ``b`` may hold many columns."""
    n = lu.shape[0]
    x = np.array(b, dtype=float)[perm]
    one_dim = x.ndim == 1
    if one_dim:
        x = x[:, None]
    for k in range(1, n):
        x[k] -= lu[k, :k] @ x[:k]
    for k in range(n - 1, -1, -1):
        x[k] -= lu[k, k + 1:] @ x[k + 1:]
        x[k] /= lu[k, k]
    return x[:, 0] if one_dim else x


def lu_solve(system: SystemMatrix) -> np.ndarray:
    """Solve one assembled system, returning the unknown vector."""
    lu, perm = lu_factor(system.matrix)
    return lu_apply(lu, perm, system.rhs)


# ── Newton-Raphson ─────────────────────────────────────────────────

_MAX_HALVINGS = 8


def _labelled(circuit: Circuit, t: float, x: np.ndarray) -> Solution:
    n = circuit.n_nodes
    labels = circuit.unknown_labels()
    return Solution(
        time=t,
        voltages={lbl: float(x[i]) for i, lbl in enumerate(labels[:n])},
        currents={lbl: float(x[n + i]) for i, lbl in enumerate(labels[n:])},
        vector=x,
    )


def _polish(asm: _Assembly, t: float, x: np.ndarray, fnorm: float) -> np.ndarray:
    """One extra Newton step after convergence, keeping whichever point has
    the smaller residual. Quadratic convergence makes the accepted state
    essentially independent of where the tolerance was crossed, so warm and
    cold starts land on the same solution."""
    x_new = lu_solve(asm.system(t, x))
    fnew = float(np.abs(asm.residual_vector(t, x_new)).max(initial=0.0))
    return x_new if fnew <= fnorm else x


def _newton_vector(
    asm: _Assembly, t: float, x0: np.ndarray, opts: NewtonOptions
) -> np.ndarray:
    x = np.array(x0, dtype=float)
    fnorm = float(np.abs(asm.residual_vector(t, x)).max(initial=0.0))
    if fnorm <= opts.abs_tol:
        return _polish(asm, t, x, fnorm) if asm.nonlinear else x
    for _ in range(opts.max_iter):
        system = asm.system(t, x)
        delta = lu_solve(system) - x
        x_new = x + delta
        fnew = float(np.abs(asm.residual_vector(t, x_new)).max(initial=0.0))
        halvings = 0
        while opts.damping and fnew > fnorm and halvings < _MAX_HALVINGS:
            delta *= 0.5
            x_new = x + delta
            fnew = float(np.abs(asm.residual_vector(t, x_new)).max(initial=0.0))
            halvings += 1
        x, fnorm = x_new, fnew
        if fnorm <= opts.abs_tol:
            return _polish(asm, t, x, fnorm) if asm.nonlinear else x
    raise NoConvergenceError(
        f"no convergence after {opts.max_iter} iterations, residual {fnorm:.3e}",
        residual=fnorm,
        time=t,
    )


def newton_solve(
    circuit: Circuit,
    t: float = 0.0,
    init: Solution | np.ndarray | None = None,
    opts: NewtonOptions | None = None,
) -> Solution:
    """Solve the operating point at time ``t``.

    Purely linear circuits converge in a single iteration; level-2 conveyor
    clamps are iterated with step-halving damping.
    """
    asm = _Assembly(circuit)
    opts = opts or NewtonOptions()
    x0 = init.vector if isinstance(init, Solution) else init
    if x0 is None:
        x0 = np.zeros(circuit.size)
    return _labelled(circuit, t, _newton_vector(asm, t, x0, opts))


# ── transient sweep ─────────────────────────────────────────────────


def transient(
    circuit: Circuit,
    tstep: float,
    tstop: float,
    opts: NewtonOptions | None = None,
    warm_start: bool = True,
) -> Waveform:
    """Solve t = 0, tstep, ..., tstop as independent operating points.

    Linear circuits reuse one LU factorization for every timepoint; clamped
    circuits run Newton per point, warm-started from the previous solution
    unless ``warm_start`` is disabled.
    """
    if not tstep > 0 or tstop < tstep:
        raise ValueError("transient needs tstep > 0 and tstop >= tstep")
    opts = opts or NewtonOptions()
    asm = _Assembly(circuit)
    n_steps = int(math.floor(tstop / tstep + 1e-9))
    times = np.arange(n_steps + 1) * tstep
    size = circuit.size

    if size == 0:
        states = np.zeros((len(times), 0))
    elif not asm.nonlinear:
        lu, perm = lu_factor(asm.a_static)
        rhs_all = np.empty((size, len(times)))
        for j, t in enumerate(times):
            rhs_all[:, j] = asm.rhs_at(t)
        states = lu_apply(lu, perm, rhs_all).T  # (T, size)
    else:
        states = np.empty((len(times), size))
        x = np.zeros(size)
        for j, t in enumerate(times):
            x0 = x if warm_start else np.zeros(size)
            try:
                x = _newton_vector(asm, float(t), x0, opts)
            except SingularMatrixError as exc:
                raise SingularMatrixError(f"at t={t:.6g} s: {exc}") from exc
            states[j] = x

    n = circuit.n_nodes
    labels = circuit.unknown_labels()
    node_order, branch_order = labels[:n], labels[n:]

    sources = [e for e in circuit.elements if e.kind in (KIND_VSOURCE, KIND_ISOURCE)]
    power = np.zeros((len(times), len(sources)))
    for s, elem in enumerate(sources):
        ip, im = (circuit.dense_index(lbl) for lbl in elem.nodes)
        v_branch = (states[:, ip] if ip is not None else 0.0) - (
            states[:, im] if im is not None else 0.0
        )
        if elem.kind == KIND_VSOURCE:
            i_through = states[:, circuit.branch_dense_index(elem.name)]
        else:
            i_through = np.array([source_value(elem, t) for t in times])
        # current enters the + terminal, so delivered power is -v*i
        power[:, s] = -v_branch * i_through

    sin_freqs = tuple(
        e.params["freq"]
        for e in circuit.elements
        if e.kind == KIND_VSOURCE and "freq" in e.params
    )
    return Waveform(
        times=times,
        node_order=node_order,
        voltages=states[:, :n],
        branch_order=branch_order,
        currents=states[:, n:],
        source_names=tuple(e.name for e in sources),
        source_power=power,
        sin_freqs=sin_freqs,
    )
