import csv
import json
import math

import pytest

kinfrac = pytest.importorskip("kinfrac")


def test_results_schema_is_frozen():
    assert kinfrac.RESULTS_COLUMNS == (
        "sigma",
        "err_trace_l2",
        "err_trace_sup",
        "err_current_l2",
        "max_principle_margin",
        "entropy_violations",
        "seconds_per_solve",
    )


def test_quadrature_and_kernel():
    q = kinfrac.build_quadrature(2, 8)
    assert q.size == 64
    assert math.isclose(q.weights.sum(), 4 * math.pi, rel_tol=1e-14)
    k = kinfrac.build_kernel(q, "rayleigh-d2")
    om = kinfrac.solve_omega(k)
    assert abs(om.transport_coeff - 1.0) < 1e-10
    assert abs(om.omega_field - q.nodes).max() < 1e-10


def test_fractional_and_extension():
    r = kinfrac.solve_fracdiff(1, 1.0, math.pi / 2, [[-1, 0], [0, 0], [1, 0]], [0.5, 1.0, 0.5])
    assert abs(r[2] - 0.5 / (1 + math.pi**2)) < 1e-14
    assert r[1] == 1.0
    assert abs(kinfrac.extension_neumann(0.5, 1) / math.sqrt(2 * math.pi) - 1) < 1e-2
    assert abs(kinfrac.c_star(1.0, 1.0, 2) - 4 / 3) < 1e-14


def test_dtn_and_audit():
    assert kinfrac.alpha_plus(2, 3) == pytest.approx(3.0)
    assert kinfrac.shooting_log_derivative(2, 2) == pytest.approx(2.0, abs=1e-6)
    a = kinfrac.audit_operator(2, 16, "isotropic")
    assert a["passed"] and a["nullspace_dimension"] == 1


def test_errors_map_to_python():
    with pytest.raises(ValueError):
        kinfrac.build_quadrature(3, 8)
    with pytest.raises(ValueError):
        kinfrac.sweep({"grid": {"cells": -1}})


def test_sweep_writes_the_pipeline_inputs(tmp_path):
    out = kinfrac.sweep({"sigmas": [8, 16], "grid": {"cells": 60}, "output": {"trace_points": 16}}, tmp_path)
    errs = [r["err_trace_l2"] for r in out["records"]]
    assert errs[1] < errs[0]
    with open(tmp_path / "results.csv", newline="") as f:
        rows = list(csv.DictReader(f))
    assert tuple(rows[0].keys()) == kinfrac.RESULTS_COLUMNS
    assert float(rows[1]["sigma"]) == 16.0
    report = json.loads((tmp_path / "report.json").read_text())
    assert len(report["records"]) == 2
    with open(tmp_path / "trace_8.csv", newline="") as f:
        trace = list(csv.reader(f))
    assert trace[0] == ["x", "transport_trace", "fractional_R"]
    assert len(trace) == 17
