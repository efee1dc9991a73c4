"""Design and verification of the boundary-layer coefficient curve.

The curve gamma(r) = f(r) + i g(r) on [0, rho] encodes a rotational
form via c = kappa f, d = kappa g with kappa = 1/(2 pi (1 + delta)).
Five conditions make its flow sweep a family of disk-angle pages with
return time pinched between 1/(1+delta) and 1:

  B1  gamma = 1 + i s(1 - r^2) on [r1, rho];
  B2  g' < 0 on (0, rho];
  B3  gamma runs along the line x + y = 1 + delta on [0, r0], follows
      the exact arc (r^2, 1 + delta - r^2) near 0, and the drop
      g(r0) - g(rho) is at most 2 delta;
  B4  the argument of gamma strictly decreases on (0, rho];
  B5  the argument of gamma' never increases (tolerance 1e-12, since
      it is exactly constant on the line and on the B1 arc).

The designer fixes the two exact outer arcs and searches a small
family of interpolants in between: an acceleration cubic along the
line (the B3 drop bound forces f to cross most of [0, 1] before r0)
and a bridge cubic pair turning the tangent from the line direction
(1, -1) to the final direction (0, -1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .numerics import RadialFunction
from .rotorus import DISK_PERIOD, RotForm, contact_check

PROFILE_GRID = 10000
# the parabolic parameterization is required on this inner fraction of
# the line segment; the designer always keeps it exact a bit further out
ARC_WINDOW = 0.25

B5_TOL = 1e-12
ARC_TOL = 1e-9


class ProfileError(ValueError):
    """Infeasible parameters or a curve that fails its conditions."""


@dataclass(frozen=True)
class ProfileParams:
    """(s, delta, rho, r0, r1) with 0 < r0 < r1 < rho <= 1."""

    s: float
    delta: float
    rho: float
    r0: float
    r1: float

    def __post_init__(self):
        if not (self.s > 0.0 and self.delta > 0.0):
            raise ValueError("s and delta must be positive")
        if not (0.0 < self.r0 < self.r1 < self.rho <= 1.0):
            raise ValueError("need 0 < r0 < r1 < rho <= 1")

    def feasible(self) -> bool:
        """The outer arc endpoint must sit below the line x + y = 1 + delta."""
        return self.s * (1.0 - self.r1 ** 2) < self.delta

    def to_dict(self) -> dict:
        return {"s": self.s, "delta": self.delta, "rho": self.rho,
                "r0": self.r0, "r1": self.r1}

    @classmethod
    def from_dict(cls, d: dict) -> "ProfileParams":
        return cls(float(d["s"]), float(d["delta"]), float(d["rho"]),
                   float(d["r0"]), float(d["r1"]))


@dataclass(frozen=True)
class ProfileCurve:
    f: RadialFunction
    g: RadialFunction
    params: ProfileParams

    def gamma(self, r):
        r = np.asarray(r, dtype=float)
        return self.f(r) + 1j * self.g(r)

    def gap(self) -> float:
        """Achieved drop g(r0) - g(rho), budgeted at 2 delta by B3."""
        return float(self.g(self.params.r0) - self.g(self.params.rho))

    def to_dict(self) -> dict:
        return {"params": self.params.to_dict(),
                "f": self.f.to_dict(), "g": self.g.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "ProfileCurve":
        return cls(RadialFunction.from_dict(d["f"]),
                   RadialFunction.from_dict(d["g"]),
                   ProfileParams.from_dict(d["params"]))


# ---------------------------------------------------------------------------
# Verification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConditionReport:
    name: str
    passed: bool
    margin: float
    r_at: float
    note: str = ""

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed,
                "margin": self.margin, "r_at": self.r_at, "note": self.note}


@dataclass(frozen=True)
class ProfileReport:
    conditions: tuple[ConditionReport, ...]
    n_grid: int

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.conditions)

    def condition(self, name: str) -> ConditionReport:
        for c in self.conditions:
            if c.name == name:
                return c
        raise KeyError(name)

    def first_failure(self) -> ConditionReport | None:
        for c in self.conditions:
            if not c.passed:
                return c
        return None

    def to_dict(self) -> dict:
        return {"passed": self.passed, "n_grid": self.n_grid,
                "conditions": [c.to_dict() for c in self.conditions]}


def _verify_grid(curve: ProfileCurve, n: int) -> np.ndarray:
    rho = curve.params.rho
    rr = np.linspace(0.0, rho, n)
    ks = np.union1d(curve.f.knots, curve.g.knots)
    return np.union1d(rr, ks[(ks >= 0.0) & (ks <= rho)])


def _worst(rr: np.ndarray, quantity: np.ndarray) -> tuple[float, float]:
    i = int(np.argmax(quantity))
    return float(quantity[i]), float(rr[i])


def verify_profile(curve: ProfileCurve, n_grid: int = PROFILE_GRID) -> ProfileReport:
    """Check B1-B5 on a dense grid and report one margin per condition.

    Margins are the largest value of each violation quantity, so
    negative means pass with room; r_at locates the worst point.
    """
    p = curve.params
    rr = _verify_grid(curve, n_grid)
    fv, gv = curve.f(rr), curve.g(rr)
    fp, gp = curve.f.derivative(rr), curve.g.derivative(rr)
    fpp, gpp = curve.f.second_derivative(rr), curve.g.second_derivative(rr)
    conds = []

    m, r_at = _worst(rr, np.maximum(-fv, -gv))
    conds.append(ConditionReport("positivity", m <= 1e-12, m, r_at))

    outer = rr >= p.r1 - 1e-15
    dev1 = np.maximum(np.abs(fv[outer] - 1.0),
                      np.abs(gv[outer] - p.s * (1.0 - rr[outer] ** 2)))
    m, r_at = _worst(rr[outer], dev1 - ARC_TOL)
    conds.append(ConditionReport("B1", m <= 0.0, m, r_at,
                                 note=f"max deviation {m + ARC_TOL:.3e}"))

    inner = rr > 0.0
    m, r_at = _worst(rr[inner], gp[inner])
    conds.append(ConditionReport("B2", m < 0.0, m, r_at))

    line = rr <= p.r0 + 1e-15
    line_dev = np.abs(fv[line] + gv[line] - (1.0 + p.delta))
    arc = rr <= ARC_WINDOW * p.r0
    arc_dev = np.maximum(np.abs(fv[arc] - rr[arc] ** 2),
                         np.abs(gv[arc] - (1.0 + p.delta - rr[arc] ** 2)))
    gap = float(curve.g(p.r0) - curve.g(p.rho))
    worst_line, r_line = _worst(rr[line], line_dev - ARC_TOL)
    worst_arc, r_arc = _worst(rr[arc], arc_dev - ARC_TOL)
    m = max(worst_line, worst_arc, gap - 2.0 * p.delta)
    r_at = r_line if worst_line >= worst_arc else r_arc
    conds.append(ConditionReport(
        "B3", m <= 0.0, m, r_at,
        note=f"drop g(r0)-g(rho) = {gap:.6g} (bound {2.0 * p.delta:.6g})"))

    q4 = (gp[inner] * fv[inner] - fp[inner] * gv[inner]) \
        / (fv[inner] ** 2 + gv[inner] ** 2)
    m, r_at = _worst(rr[inner], q4)
    conds.append(ConditionReport("B4", m < 0.0, m, r_at))

    den5 = fp ** 2 + gp ** 2
    q5 = np.where(den5 == 0.0, 0.0,
                  (gpp * fp - fpp * gp) / np.where(den5 == 0.0, 1.0, den5))
    m, r_at = _worst(rr, q5 - B5_TOL)
    conds.append(ConditionReport("B5", m <= 0.0, m, r_at))

    return ProfileReport(tuple(conds), n_grid)


# ---------------------------------------------------------------------------
# Design
# ---------------------------------------------------------------------------

def _snap(x: float) -> float:
    """Round to the 2^-46 grid so that (1 + delta) - x subtracts exactly.

    Dyadic values make the g-data on the line segment the bitwise
    complement of the f-data; every Hermite coefficient of g is then
    the exact negation of f's, and the B5 numerator g''f' - f''g'
    evaluates to floating-point zero instead of 1/h^2-amplified noise.
    """
    return math.ldexp(round(math.ldexp(x, 46)), -46)


def _assemble(p: ProfileParams, r_arc: float, g0: float, df0: float) -> ProfileCurve:
    """Exact outer arcs plus the two interior cubics, as 5-knot data."""
    line = 1.0 + p.delta
    f_arc = _snap(r_arc * r_arc)
    f0 = _snap(line - g0)
    g_r1 = p.s * (1.0 - p.r1 ** 2)
    g_rho = p.s * (1.0 - p.rho ** 2)
    knots = np.array([0.0, r_arc, p.r0, p.r1, p.rho])
    f = RadialFunction(
        knots,
        np.array([0.0, f_arc, f0, 1.0, 1.0]),
        np.array([0.0, 2.0 * r_arc, df0, 0.0, 0.0]),
        parity="even")
    g = RadialFunction(
        knots,
        np.array([line, line - f_arc, line - f0, g_r1, g_rho]),
        np.array([0.0, -2.0 * r_arc, -df0, -2.0 * p.s * p.r1,
                  -2.0 * p.s * p.rho]),
        parity="even")
    return ProfileCurve(f, g, p)


def _bridge_margin(curve: ProfileCurve, n: int = 400) -> float:
    """Smallest clockwise-turning margin (B4 and B5 rates) on [r0, r1)."""
    p = curve.params
    rr = np.linspace(p.r0, p.r1, n, endpoint=False)
    fv, gv = curve.f(rr), curve.g(rr)
    fp, gp = curve.f.derivative(rr), curve.g.derivative(rr)
    fpp, gpp = curve.f.second_derivative(rr), curve.g.second_derivative(rr)
    s4 = -(gp * fv - fp * gv) / (fv ** 2 + gv ** 2)
    s5 = -(gpp * fp - fpp * gp) / (fp ** 2 + gp ** 2)
    return float(min(np.min(s4), np.min(s5)))


def design_profile(params: ProfileParams, gap_factor: float = 1.9,
                   n_search: int = 2000) -> ProfileCurve:
    """Construct a curve passing all five conditions.

    The outer arcs are fixed by B1 and B3.  The interior is a two-knot
    family: the radius r_arc up to which the curve keeps the exact
    parabolic parameterization, and the speed df0 at which it leaves
    the line at r0.  Candidates are screened by verify_profile and the
    survivor with the largest minimum turning margin on the bridge
    wins.  The drop g(r0) - g(rho) is set to gap_factor * delta, inside
    the 2*delta budget.
    """
    p = params
    if not p.feasible():
        raise ProfileError(
            f"infeasible: s (1 - r1^2) = {p.s * (1 - p.r1 ** 2):.6g} "
            f"must be < delta = {p.delta:.6g}")
    if not 1.0 < gap_factor < 2.0:
        raise ProfileError("gap_factor must sit in (1, 2)")
    g_rho = p.s * (1.0 - p.rho ** 2)
    g0 = g_rho + gap_factor * p.delta
    f0 = 1.0 + p.delta - g0
    if f0 <= (0.45 * p.r0) ** 2:
        raise ProfileError("delta too large: the drop target swallows "
                           "the whole line segment")

    g_r1 = p.s * (1.0 - p.r1 ** 2)
    sec_f = (1.0 - f0) / (p.r1 - p.r0)
    sec_g = (g0 - g_r1) / (p.r1 - p.r0)
    best: tuple[float, ProfileCurve] | None = None
    failure: ConditionReport | None = None
    for arc_frac in (0.25, 0.3, 0.35, 0.4):
        r_arc = arc_frac * p.r0
        sec_acc = (f0 - r_arc ** 2) / (p.r0 - r_arc)
        hi = 0.95 * 3.0 * min(sec_f, sec_g, sec_acc)
        if hi <= 0.0:
            continue
        for df0 in np.linspace(0.05 * hi, hi, 24):
            curve = _assemble(p, r_arc, g0, float(df0))
            report = verify_profile(curve, n_grid=n_search)
            if not report.passed:
                failure = failure or report.first_failure()
                continue
            score = _bridge_margin(curve)
            if best is None or score > best[0]:
                best = (score, curve)
    if best is None:
        name = failure.name if failure else "feasibility"
        raise ProfileError(f"no admissible interior found "
                           f"(first violated condition: {name})")
    curve = best[1]
    report = verify_profile(curve)
    if not report.passed:
        bad = report.first_failure()
        raise ProfileError(f"designed curve fails {bad.name} "
                           f"at r = {bad.r_at:.6g} on the final grid")
    return curve


# ---------------------------------------------------------------------------
# Return time
# ---------------------------------------------------------------------------

class TauProfile:
    """tau(r) = (g'f - f'g)/((1 + delta) g'), extended by its limit at 0."""

    def __init__(self, curve: ProfileCurve):
        self.curve = curve
        self._scale = 1.0 + curve.params.delta
        g2 = float(curve.g.second_derivative(0.0))
        f2 = float(curve.f.second_derivative(0.0))
        if g2 == 0.0:
            raise ProfileError("tau needs g''(0) != 0 for its limit at 0")
        self._tau0 = -f2 * float(curve.g(0.0)) / (self._scale * g2)

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        fv, gv = self.curve.f(r), self.curve.g(r)
        fp, gp = self.curve.f.derivative(r), self.curve.g.derivative(r)
        at0 = r == 0.0
        den = np.where(at0, 1.0, self._scale * gp)
        out = np.where(at0, self._tau0, (gp * fv - fp * gv) / den)
        return float(out) if r.ndim == 0 else out

    def slope(self, r):
        """d tau/dr = g (f'g'' - g'f'') / ((1 + delta) g'^2); 0 at r = 0."""
        r = np.asarray(r, dtype=float)
        gv = self.curve.g(r)
        fp, gp = self.curve.f.derivative(r), self.curve.g.derivative(r)
        fpp = self.curve.f.second_derivative(r)
        gpp = self.curve.g.second_derivative(r)
        at0 = r == 0.0
        den = np.where(at0, 1.0, self._scale * gp * gp)
        out = np.where(at0, 0.0, gv * (fp * gpp - gp * fpp) / den)
        return float(out) if r.ndim == 0 else out


@dataclass(frozen=True)
class TauReport:
    monotone_margin: float
    min_value: float
    max_value: float
    sup_deviation: float
    deviation_bound: float

    @property
    def passed(self) -> bool:
        # min tau = 1 - sup deviation when monotone, so the lower bound
        # 1/(1+delta) = 1 - deviation_bound is part of the same check
        return (self.monotone_margin <= 1e-10
                and self.max_value <= 1.0 + 1e-10
                and self.min_value >= 1.0 - self.deviation_bound - 1e-10
                and self.sup_deviation <= self.deviation_bound + 1e-12)

    def to_dict(self) -> dict:
        return {"monotone_margin": self.monotone_margin,
                "min_value": self.min_value, "max_value": self.max_value,
                "sup_deviation": self.sup_deviation,
                "deviation_bound": self.deviation_bound,
                "passed": self.passed}


def tau_profile(curve: ProfileCurve,
                n_grid: int = PROFILE_GRID) -> tuple[TauProfile, TauReport]:
    """The return-time profile of the curve plus its monotonicity report.

    Valid under B2; raises if g' is not negative on the grid.
    """
    p = curve.params
    rr = _verify_grid(curve, n_grid)
    inner = rr > 0.0
    gp = curve.g.derivative(rr[inner])
    if np.max(gp) >= 0.0:
        raise ProfileError("tau is undefined where g' >= 0 "
                           f"(r = {float(rr[inner][np.argmax(gp)]):.6g})")
    tau = TauProfile(curve)
    values = tau(rr)
    slopes = tau.slope(rr)
    report = TauReport(
        monotone_margin=float(np.max(slopes)),
        min_value=float(np.min(values)),
        max_value=float(np.max(values)),
        sup_deviation=float(np.max(np.abs(values - 1.0))),
        deviation_bound=p.delta / (1.0 + p.delta))
    return tau, report


def to_rotform(curve: ProfileCurve) -> RotForm:
    """The rotational form of the curve: c = kappa f, d = kappa g.

    kappa = 1/(2 pi (1 + delta)) makes the core orbit period exactly
    2 pi * kappa * g(0) = 1 when g(0) = 1 + delta.
    """
    p = curve.params
    kappa = 1.0 / (DISK_PERIOD * (1.0 + p.delta))
    form = RotForm(p.rho, DISK_PERIOD, curve.f * kappa, curve.g * kappa,
                   kappa=kappa)
    contact_check(form)
    return form
