"""Solver tests: LU oracle checks, Newton behavior, transient properties.

Independent oracles: numpy.linalg.solve for the LU path, series/parallel
ladder reduction for resistive networks, superposition and scaling identities
for linear circuits.
"""

import numpy as np
import pytest

from ccsim.errors import NoConvergenceError, SingularMatrixError
from ccsim.netlist import parse_netlist, validate
from ccsim.solver import (
    NewtonOptions,
    SystemMatrix,
    assemble,
    lu_solve,
    newton_solve,
    residual,
    source_value,
    transient,
)

# ── helpers ─────────────────────────────────────────────────────────


def _circuit(text: str):
    return validate(parse_netlist(text + "\n.end"))


def _parallel(a: float, b: float) -> float:
    return a * b / (a + b)


def _ladder_oracle(vin, series, shunts):
    """Node voltages of a series/shunt resistor ladder by impedance
    reduction from the far end; independent of the MNA path."""
    n = len(series)
    z = [0.0] * n
    z[-1] = shunts[-1]
    for i in range(n - 2, -1, -1):
        z[i] = _parallel(shunts[i], series[i + 1] + z[i + 1])
    voltages = []
    v = vin
    for i in range(n):
        v = v * z[i] / (series[i] + z[i])
        voltages.append(v)
    return voltages


LEVEL2_AMP = """
V1 in 0 DC 0.05
X1 in x out CCCII+ RX=0 LEVEL=2
R1 x 0 1k
R2 out 0 100k
"""


# ── LU decomposition ────────────────────────────────────────────────


def test_lu_identity():
    sol = lu_solve(SystemMatrix(np.eye(2), np.array([1.0, 2.0])))
    assert np.array_equal(sol, [1.0, 2.0])


def test_lu_matches_numpy_on_random_systems():
    rng = np.random.default_rng(42)
    for _ in range(50):
        n = int(rng.integers(1, 13))
        a = rng.standard_normal((n, n)) + n * np.eye(n)
        b = rng.standard_normal(n)
        x = lu_solve(SystemMatrix(a, b))
        expected = np.linalg.solve(a, b)
        assert np.abs(x - expected).max() <= 1e-9 * max(1.0, np.abs(expected).max())
        # residual contract
        assert np.abs(a @ x - b).max() <= 1e-9 * max(1.0, np.abs(b).max())


def test_lu_detects_floating_network():
    g = 1e-3
    a = np.array([[g, -g], [-g, g]])
    with pytest.raises(SingularMatrixError):
        lu_solve(SystemMatrix(a, np.zeros(2)))


def test_lu_rejects_nonfinite():
    with pytest.raises(ValueError):
        lu_solve(SystemMatrix(np.array([[np.nan]]), np.ones(1)))


# ── assembly ────────────────────────────────────────────────────────


def test_assemble_dimensions():
    assert assemble(_circuit("V1 1 0 DC 1\nR1 1 0 1k")).dimension == 2
    amp = _circuit(
        "V1 in 0 DC 1\nX1 in x out CCCII+ RX=0\nR1 x 0 1k\nR2 out 0 100k"
    )
    assert assemble(amp).dimension == 5


def test_inactive_clamp_assembles_like_level_one():
    level1 = _circuit(LEVEL2_AMP.replace("LEVEL=2", "LEVEL=1"))
    level2 = _circuit(LEVEL2_AMP)
    s1, s2 = assemble(level1), assemble(level2)  # zero guess: clamp dead zone
    assert np.array_equal(s1.matrix, s2.matrix)
    assert np.array_equal(s1.rhs, s2.rhs)


# ── operating point ────────────────────────────────────────────────


def test_voltage_divider_midpoint():
    sol = newton_solve(_circuit("V1 1 0 DC 1\nR1 1 2 1k\nR2 2 0 1k"))
    assert sol.voltages["2"] == pytest.approx(0.5, abs=1e-12)


def test_ladder_network_against_reduction_oracle():
    series = [220.0, 4.7e3, 910.0, 12e3]
    shunts = [1.5e3, 680.0, 3.3e3, 470.0]
    vin = 2.5
    lines = [f"V1 n0 0 DC {vin}"]
    for i, (s, p) in enumerate(zip(series, shunts)):
        lines.append(f"RS{i} n{i} n{i+1} {s}")
        lines.append(f"RP{i} n{i+1} 0 {p}")
    sol = newton_solve(_circuit("\n".join(lines)))
    for i, expected in enumerate(_ladder_oracle(vin, series, shunts)):
        assert sol.voltages[f"n{i+1}"] == pytest.approx(expected, rel=1e-9)


def test_linear_circuit_converges_in_one_iteration():
    ckt = _circuit("V1 1 0 DC 1\nR1 1 2 1k\nR2 2 0 1k")
    sol = newton_solve(ckt, opts=NewtonOptions(max_iter=1))
    assert sol.voltages["2"] == pytest.approx(0.5, abs=1e-12)


def test_active_clamp_needs_more_than_one_iteration():
    with pytest.raises(NoConvergenceError) as exc:
        newton_solve(_circuit(LEVEL2_AMP), opts=NewtonOptions(max_iter=1))
    assert exc.value.residual > 0


def test_clamped_output_stays_near_rails():
    sol = newton_solve(_circuit(LEVEL2_AMP))
    assert -0.51 <= sol.voltages["out"] <= 0.51
    # KCL residual of the accepted solve
    ckt = _circuit(LEVEL2_AMP)
    assert np.abs(residual(ckt, 0.0, sol.vector)).max() <= 1e-9


def test_parallel_vsources_are_singular():
    with pytest.raises(SingularMatrixError):
        newton_solve(_circuit("V1 1 0 DC 1\nV2 1 0 DC 2\nR1 1 0 1k"))


def test_cccii_polarity_negates_output():
    plus = newton_solve(
        _circuit("V1 in 0 DC 0.05\nX1 in x out CCCII+ RX=250\nR1 x 0 1k\nR2 out 0 5k")
    )
    minus = newton_solve(
        _circuit("V1 in 0 DC 0.05\nX1 in x out CCCII- RX=250\nR1 x 0 1k\nR2 out 0 5k")
    )
    assert minus.voltages["out"] == pytest.approx(-plus.voltages["out"], rel=1e-12)
    assert minus.voltages["x"] == pytest.approx(plus.voltages["x"], rel=1e-12)


def test_conveyor_dc_solution_matches_hand_solve():
    # ideal plus-type, R1=1k, R2=100k, 0.05 V at Y: i_x = -50 uA, V_Z = 5 V
    sol = newton_solve(
        _circuit("V1 in 0 DC 0.05\nX1 in x out CCCII+ RX=0\nR1 x 0 1k\nR2 out 0 100k")
    )
    assert sol.currents["X1"] == pytest.approx(-50e-6, rel=1e-12)
    assert sol.voltages["out"] == pytest.approx(5.0, rel=1e-12)
    # with intrinsic resistance: V_Z = 0.05 * 15000 / (8000 + 3538)
    sol = newton_solve(
        _circuit("V1 in 0 DC 0.05\nX1 in x out CCCII+ RX=3538\nR1 x 0 8k\nR2 out 0 15k")
    )
    assert sol.voltages["out"] == pytest.approx(0.06500260010400416, rel=1e-12)


# ── transient ───────────────────────────────────────────────────────


def test_sin_source_evaluation():
    (elem,) = parse_netlist("V1 a 0 SIN(0 0.05 1k)\n.end").elements
    assert source_value(elem, 0.0) == 0.0
    assert source_value(elem, 0.25e-3) == pytest.approx(0.05, abs=1e-15)  # quarter period
    assert source_value(elem, 0.75e-3) == pytest.approx(-0.05, abs=1e-15)


def test_dc_transient_is_time_invariant():
    w = transient(_circuit("V1 1 0 DC 1\nR1 1 2 1k\nR2 2 0 1k"), 1e-4, 1e-3)
    assert len(w.times) == 11
    assert np.ptp(w.voltages, axis=0).max() == 0.0
    snapshot = w.solution_at(5)
    assert snapshot.time == pytest.approx(5e-4)
    assert snapshot.voltages["2"] == pytest.approx(0.5, abs=1e-12)


def test_sin_transient_point_count_and_shape():
    ckt = _circuit("V1 in 0 SIN(0 50m 1k)\nR1 in out 1k\nR2 out 0 1k")
    w = transient(ckt, 20e-6, 1e-3)
    assert len(w.times) == 51
    expected = 0.05 * np.sin(2 * np.pi * 1e3 * w.times) / 2
    assert np.abs(w.voltage("out") - expected).max() <= 1e-12


def test_source_scaling_linearity():
    base = "V1 in 0 SIN(0 {a} 1k)\nI1 0 mid DC {i}\nR1 in mid 1k\nR2 mid 0 2k"
    k = 3.7
    w1 = transient(_circuit(base.format(a=0.05, i=1e-3)), 5e-5, 1e-3)
    wk = transient(_circuit(base.format(a=0.05 * k, i=1e-3 * k)), 5e-5, 1e-3)
    scale = np.abs(wk.voltages - k * w1.voltages).max()
    assert scale <= 1e-9 * np.abs(wk.voltages).max()


def test_superposition_of_independent_sources():
    both = _circuit("V1 1 0 DC 2\nI1 0 2 DC 1m\nR1 1 2 1k\nR2 2 0 2k")
    only_v = _circuit("V1 1 0 DC 2\nI1 0 2 DC 0\nR1 1 2 1k\nR2 2 0 2k")
    only_i = _circuit("V1 1 0 DC 0\nI1 0 2 DC 1m\nR1 1 2 1k\nR2 2 0 2k")
    xb = newton_solve(both).vector
    xv = newton_solve(only_v).vector
    xi = newton_solve(only_i).vector
    assert np.abs(xb - (xv + xi)).max() <= 1e-9 * max(1.0, np.abs(xb).max())
    assert newton_solve(both).voltages["2"] == pytest.approx(2.0, rel=1e-12)


def _power_balance_gap(ckt, w) -> float:
    """Relative mismatch between delivered and dissipated power."""
    dissipated = np.zeros_like(w.times)
    delivered = w.total_source_power().copy()
    for elem in ckt.elements:
        if elem.kind == "resistor":
            v = w.voltage(elem.nodes[0]) - w.voltage(elem.nodes[1])
            dissipated += v * v / elem.params["value"]
        elif elem.kind == "cccii":
            vx = w.voltage(elem.nodes[1])
            vz = w.voltage(elem.nodes[2]) if elem.nodes[2] not in ckt.floating_nodes else 0.0
            ix = w.current(elem.name)
            delivered += -(vx * ix + vz * elem.params["polarity"] * ix)
    scale = max(np.abs(dissipated).max(), 1e-30)
    return float(np.abs(delivered - dissipated).max() / scale)


def test_power_balance_resistive():
    ckt = _circuit("V1 in 0 SIN(0 1 1k)\nR1 in mid 1k\nR2 mid 0 2k\nR3 mid 0 3k")
    w = transient(ckt, 5e-5, 2e-3)
    assert _power_balance_gap(ckt, w) <= 1e-6


def test_power_balance_with_conveyor():
    ckt = _circuit(
        "V1 in 0 SIN(0 50m 1k)\nX1 in x out CCCII+ RX=500\nR1 x 0 1k\nR2 out 0 10k"
    )
    w = transient(ckt, 5e-5, 2e-3)
    assert _power_balance_gap(ckt, w) <= 1e-6


def test_transient_kcl_residual_bound():
    for text in (
        "V1 in 0 SIN(0 50m 1k)\nX1 in x out CCCII+ RX=100\nR1 x 0 1k\nR2 out 0 10k",
        "V1 in 0 SIN(0 50m 1k)\nX1 in x out CCCII+ RX=3538 LEVEL=2\nR1 x 0 1k\nR2 out 0 100k",
    ):
        ckt = _circuit(text)
        w = transient(ckt, 5e-5, 1e-3)
        for j, t in enumerate(w.times):
            x = np.concatenate([w.voltages[j], w.currents[j]])
            assert np.abs(residual(ckt, float(t), x)).max() <= 1e-9


def test_warm_and_cold_start_agree():
    ckt = _circuit(
        "V1 in 0 SIN(0 50m 1k)\nX1 in x out CCCII+ RX=3538 LEVEL=2\nR1 x 0 1k\nR2 out 0 100k"
    )
    warm = transient(ckt, 2e-5, 2e-3, warm_start=True)
    cold = transient(ckt, 2e-5, 2e-3, warm_start=False)
    assert np.abs(warm.voltages - cold.voltages).max() <= 1e-9
    assert np.abs(warm.currents - cold.currents).max() <= 1e-9


def test_transient_failure_reports_timepoint():
    ckt = _circuit(LEVEL2_AMP.replace("DC 0.05", "SIN(0 50m 1k)"))
    with pytest.raises(NoConvergenceError) as exc:
        transient(ckt, 2e-5, 1e-3, opts=NewtonOptions(max_iter=1))
    assert exc.value.time is not None


def test_transient_rejects_bad_grid():
    ckt = _circuit("V1 1 0 DC 1\nR1 1 0 1k")
    with pytest.raises(ValueError):
        transient(ckt, 0.0, 1e-3)
