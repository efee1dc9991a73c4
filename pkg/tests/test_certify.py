import dataclasses
import json
import math
from fractions import Fraction

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from reebplug.certify import (AssemblyInput, CertificationError, assemble,
                              bound_formula, plan_radii, systolic_bound,
                              tmin_ledger, volume_budget)
from reebplug.diskmap import DiskMap
from reebplug.plug import AxiomCheck, PlugReport, make_plug, verify_a


def unit_plug(radius: float):
    # identity-map plug: volume pi r^2, every orbit has period L = 1
    return make_plug(DiskMap(radius, ()), 1.0)


@pytest.fixture(scope="module")
def small_report():
    # volume pi 0.0025 = 7.85e-3, below every eps used here
    return verify_a(unit_plug(0.05), 0.01, k_max=3)


@pytest.fixture(scope="module")
def tiny_report():
    # volume 7.1e-5, below eps = 1e-4
    return verify_a(unit_plug(0.0048), 1e-4, k_max=3)


def test_plan_radii_exact_quarter():
    assert plan_radii([math.pi], 0.75) == (0.5,)


def test_plan_radii_area_identity():
    areas = (0.7, 1.3, 2.0)
    for a, r in zip(areas, plan_radii(areas, 0.01)):
        assert math.pi * r * r == pytest.approx(0.99 * a, rel=1e-14)


def test_plan_radii_rejects_degenerate():
    with pytest.raises(CertificationError):
        plan_radii([0.0], 0.01)
    with pytest.raises(CertificationError):
        plan_radii([1.0], 0.0)
    with pytest.raises(CertificationError):
        plan_radii([1.0], 1.0)


def test_frozen_bound_one_circle(small_report):
    inp = AssemblyInput(1, 0.01, (1.05,), (small_report,), 0.005)
    cert = systolic_bound(inp)
    assert cert.ratio_exact == Fraction(9801, 400)
    assert cert.ratio_float == pytest.approx(24.5025, rel=1e-12)
    assert cert.total_bound == Fraction(1, 25)
    assert cert.t_min_bound == Fraction(99, 100)


def test_frozen_bound_small_eps(tiny_report):
    rep = dataclasses.replace(tiny_report, search={"eps": 0.001})
    inp = AssemblyInput(1, 0.001, (1.05,), (rep,), 0.0005)
    cert = systolic_bound(inp)
    assert cert.ratio_exact == Fraction(998001, 4000)
    assert float(cert.ratio_exact) == pytest.approx(249.50025, rel=1e-12)


def test_frozen_bound_two_circles():
    rep = verify_a(unit_plug(0.1), 0.04, k_max=3)
    inp = AssemblyInput(2, 0.04, (1.05, 1.1), (rep, rep), 0.02)
    cert = systolic_bound(inp)
    assert cert.ratio_exact == Fraction(576, 175)
    assert float(cert.ratio_exact) == pytest.approx(3.29142857142857,
                                                    rel=1e-12)


def test_trace_reverifies_exactly(small_report):
    inp = AssemblyInput(1, 0.01, (1.05,), (small_report,), 0.005)
    cert = systolic_bound(inp)
    assert all(step.holds for step in cert.trace)
    names = [step.name for step in cert.trace]
    for expected in ("area", "plug[0] a4", "complement collar",
                     "complement identity", "complement drop", "plug total",
                     "total identity", "ratio"):
        assert expected in names
    # every relation is over exact rationals
    for step in cert.trace:
        assert isinstance(step.lhs, Fraction)
        assert isinstance(step.rhs, Fraction)


def test_budget_intermediate_values(small_report):
    inp = AssemblyInput(3, 0.1, (1.2, 1.2, 1.2), (small_report,) * 3, 0.05)
    budget = volume_budget(inp)
    assert budget.complement_bound == Fraction(7, 10)
    assert budget.total_bound == Fraction(1)
    mid = [s for s in budget.steps if s.name == "complement identity"][0]
    # (1 + eps) ell - (1 - eps)(ell - eps) = eps (2 ell + 1) - eps^2
    assert mid.lhs == Fraction(7, 10) - Fraction(1, 100)


def test_tmin_ledger_components(small_report):
    inp = AssemblyInput(1, 0.01, (1.05,), (small_report,), 0.005)
    ledger = tmin_ledger(inp)
    assert ledger.bound == Fraction(99, 100)
    comps = [e.component for e in ledger.entries]
    assert comps == ["plug[0]", "boundary circles", "remaining orbits"]
    assert min(e.bound for e in ledger.entries) == ledger.bound


def test_refused_area(small_report):
    inp = AssemblyInput(1, 0.01, (0.5,), (small_report,), 0.005)
    with pytest.raises(CertificationError, match="area"):
        systolic_bound(inp)


def test_refused_fat_plug():
    # identity plug with pi r^2 > eps fails a4
    rep = verify_a(unit_plug(0.2), 0.01, k_max=3)
    assert not rep.passed
    inp = AssemblyInput(1, 0.01, (1.05,), (rep,), 0.005)
    with pytest.raises(CertificationError, match="a4"):
        systolic_bound(inp)


def test_refused_planted_short_orbit(small_report):
    bad = tuple(c if c.name != "a3" else AxiomCheck("a3", False, 0.5)
                for c in small_report.checks)
    rep = dataclasses.replace(small_report, checks=bad, t_min=0.5)
    inp = AssemblyInput(1, 0.01, (1.05,), (rep,), 0.005)
    with pytest.raises(CertificationError, match="a3"):
        systolic_bound(inp)


def test_refused_tau_bound(small_report):
    inp = AssemblyInput(1, 0.01, (1.05,), (small_report,), 0.02)
    with pytest.raises(CertificationError, match="tau"):
        systolic_bound(inp)


def test_refused_volume_at_budget(small_report):
    # conservative rounding: a reported volume exactly at eps is refused
    rep = dataclasses.replace(small_report,
                              checks=tuple(
                                  c if c.name != "a4"
                                  else AxiomCheck("a4", True, 0.0)
                                  for c in small_report.checks),
                              volume=0.01)
    inp = AssemblyInput(1, 0.01, (1.05,), (rep,), 0.005)
    with pytest.raises(CertificationError, match="a4"):
        systolic_bound(inp)


def test_input_validation(small_report):
    with pytest.raises(CertificationError, match="circle"):
        AssemblyInput(0, 0.01, (), (), 0.005)
    with pytest.raises(CertificationError, match="eps"):
        AssemblyInput(1, 1.5, (1.05,), (small_report,), 0.005)
    with pytest.raises(CertificationError, match="area"):
        AssemblyInput(2, 0.01, (1.05,), (small_report,) * 2, 0.005)
    with pytest.raises(CertificationError, match="report"):
        AssemblyInput(2, 0.01, (1.05, 1.05), (small_report,), 0.005)
    with pytest.raises(CertificationError, match="a-family"):
        bad = dataclasses.replace(small_report, family="b")
        AssemblyInput(1, 0.01, (1.05,), (bad,), 0.005)


def test_assemble_runs_verification():
    inp = assemble(0.01, [1.05], [unit_plug(0.05)], 0.005, k_max=3)
    cert = systolic_bound(inp)
    assert cert.ratio_exact == Fraction(9801, 400)


def test_sweep_monotone_in_eps(small_report, tiny_report):
    reports = {0.01: small_report,
               0.001: dataclasses.replace(tiny_report, search={"eps": 0.001}),
               0.0001: tiny_report}
    bounds = []
    for eps in (0.01, 0.001, 0.0001):
        inp = AssemblyInput(1, eps, (1.05,), (reports[eps],), eps / 2.0)
        bounds.append(systolic_bound(inp).ratio_exact)
    assert bounds[0] < bounds[1] < bounds[2]


def test_bound_formula_matches_certificate(small_report):
    inp = AssemblyInput(1, 0.01, (1.05,), (small_report,), 0.005)
    assert systolic_bound(inp).ratio_exact == bound_formula(1, 0.01)


@given(ell=st.integers(min_value=1, max_value=12),
       e1=st.floats(min_value=1e-6, max_value=0.9),
       e2=st.floats(min_value=1e-6, max_value=0.9))
@settings(max_examples=60, deadline=None)
def test_bound_strictly_decreasing_in_eps(ell, e1, e2):
    assume(Fraction(str(e1)) != Fraction(str(e2)))
    lo, hi = sorted((e1, e2), key=lambda x: Fraction(str(x)))
    assert bound_formula(ell, lo) > bound_formula(ell, hi)


@given(ell=st.integers(min_value=1, max_value=40),
       eps=st.floats(min_value=1e-6, max_value=0.9))
@settings(max_examples=60, deadline=None)
def test_bound_strictly_decreasing_in_circles(ell, eps):
    assert bound_formula(ell, eps) > bound_formula(ell + 1, eps)


def test_certificate_serialization(small_report):
    inp = AssemblyInput(1, 0.01, (1.05,), (small_report,), 0.005)
    cert = systolic_bound(inp)
    blob = json.dumps(cert.to_dict(), sort_keys=True)
    assert json.loads(blob)["ratio"]["exact"] == "9801/400"
    text = cert.render()
    assert "9801/400" in text
    assert "24.5025" in text
    assert "[ok] area" in text
    assert "FAIL" not in text


def test_float_mirror_agreement(small_report):
    inp = AssemblyInput(1, 0.01, (1.05,), (small_report,), 0.005)
    cert = systolic_bound(inp)
    assert abs(cert.ratio_float - float(cert.ratio_exact)) <= 1e-12 * 24.5
