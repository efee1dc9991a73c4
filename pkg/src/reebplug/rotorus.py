"""Rotationally symmetric contact forms on a solid torus.

A form alpha = c(r) dphi + d(r) dpsi on D^2(R) x (R/P), with phi the
disk angle (period 2*pi) and psi the core angle (period P), is fixed by
two even radial coefficients.  Everything downstream of the contact
condition W = c'd - cd' > 0 is closed-form: the Reeb field rotates both
angles at r-dependent rates, the return systems of the two natural
sections have explicit time and shift, closed orbits sit on resonant
tori detected by a 1D root scan, and the volume reduces to a 1D
integral of W (cross-checked two more ways).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .numerics import (
    OdeSpec,
    RadialFunction,
    gauss_piecewise,
    ode_flow,
)

DISK_PERIOD = 2.0 * math.pi


class ContactError(ValueError):
    """The contact condition W = c'd - cd' > 0 fails somewhere."""


class SectionError(ValueError):
    """A candidate section is not transverse to the flow."""


# ---------------------------------------------------------------------------
# The form
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RotForm:
    """alpha = c(r) dphi + d(r) dpsi on the solid torus of disk radius R.

    c and d already include any overall normalization; kappa records the
    constant that was multiplied in, for reporting only.  Smoothness on
    the core axis forces c(0) = c'(0) = 0 with c''(0) > 0, d even.
    """

    radius: float
    core_period: float
    c: RadialFunction
    d: RadialFunction
    kappa: float = 1.0

    def __post_init__(self):
        if not (self.radius > 0.0 and self.core_period > 0.0):
            raise ValueError("radius and core_period must be positive")
        if self.c.parity != "even" or self.d.parity != "even":
            raise ValueError("coefficients must be even radial functions")
        if abs(float(self.c(0.0))) > 1e-12:
            raise ValueError("smoothness at the core requires c(0) = 0")
        if float(self.c.second_derivative(0.0)) <= 0.0:
            raise ValueError("smoothness at the core requires c''(0) > 0")
        if abs(float(self.d(0.0))) < 1e-12:
            raise ValueError("d(0) must be nonzero")

    def wronskian(self, r):
        """W(r) = c'(r) d(r) - c(r) d'(r); W/r -> c''(0) d(0) at the core."""
        r = np.asarray(r, dtype=float)
        return self.c.derivative(r) * self.d(r) - self.c(r) * self.d.derivative(r)

    def to_dict(self) -> dict:
        return {"R": self.radius, "core_period": self.core_period,
                "kappa": self.kappa,
                "c": self.c.to_dict(), "d": self.d.to_dict()}

    @classmethod
    def from_dict(cls, data: dict) -> "RotForm":
        return cls(float(data["R"]), float(data["core_period"]),
                   RadialFunction.from_dict(data["c"]),
                   RadialFunction.from_dict(data["d"]),
                   float(data.get("kappa", 1.0)))


def _knot_union(form: RotForm) -> np.ndarray:
    ks = np.union1d(form.c.knots, form.d.knots)
    return ks[(ks >= 0.0) & (ks <= form.radius)]


def _scan_grid(form: RotForm, n: int) -> np.ndarray:
    """Uniform radii on (0, R] merged with the interior knots."""
    rr = np.linspace(form.radius / n, form.radius, n)
    ks = _knot_union(form)
    return np.union1d(rr, ks[ks > 0.0])


def contact_check(form: RotForm, n_grid: int = 4096) -> float:
    """Minimum of W(r)/r over a dense grid (limit value at r = 0).

    Raises ContactError at the first radius where the margin is not
    strictly positive.
    """
    m0 = float(form.c.second_derivative(0.0) * form.d(0.0))
    rr = _scan_grid(form, n_grid)
    margins = form.wronskian(rr) / rr
    worst = int(np.argmin(margins))
    margin = min(m0, float(margins[worst]))
    if margin <= 0.0:
        r_bad = 0.0 if m0 <= margins[worst] else float(rr[worst])
        raise ContactError(f"contact condition fails at r = {r_bad:.6g} "
                           f"(W/r = {margin:.3e})")
    return margin


# ---------------------------------------------------------------------------
# Reeb field and flow
# ---------------------------------------------------------------------------

def angular_rates(form: RotForm, r):
    """(dphi/dt, dpsi/dt) along the Reeb flow: (-d', c')/W, limits at 0."""
    r = np.asarray(r, dtype=float)
    cp = form.c.derivative(r)
    dp = form.d.derivative(r)
    W = cp * form.d(r) - form.c(r) * dp
    c2 = float(form.c.second_derivative(0.0))
    d2 = float(form.d.second_derivative(0.0))
    d0 = float(form.d(0.0))
    at0 = r == 0.0
    Wsafe = np.where(at0, 1.0, W)
    rate_disk = np.where(at0, -d2 / (c2 * d0), -dp / Wsafe)
    rate_core = np.where(at0, 1.0 / d0, cp / Wsafe)
    if r.ndim == 0:
        return float(rate_disk), float(rate_core)
    return rate_disk, rate_core


def reeb_field(form: RotForm, point) -> np.ndarray:
    """Reeb vector at (r, phi, psi), components in (d/dr, d/dphi, d/dpsi)."""
    r = float(np.asarray(point, dtype=float).reshape(3)[0])
    if r > 0.0:
        W = float(form.wronskian(r))
        if W <= 0.0:
            raise ContactError(f"W({r:.6g}) = {W:.3e} <= 0")
    else:
        if float(form.c.second_derivative(0.0) * form.d(0.0)) <= 0.0:
            raise ContactError("contact condition fails on the core")
    rate_disk, rate_core = angular_rates(form, r)
    return np.array([0.0, rate_disk, rate_core])


def alpha_pairing(form: RotForm, r: float, v) -> float:
    """alpha(v) for a tangent vector v = (v_r, v_phi, v_psi)."""
    v = np.asarray(v, dtype=float)
    return float(form.c(r) * v[1] + form.d(r) * v[2])


def dalpha_contraction(form: RotForm, r: float, v) -> np.ndarray:
    """Components of i_v dalpha in the coframe (dr, dphi, dpsi)."""
    v = np.asarray(v, dtype=float)
    cp = float(form.c.derivative(r))
    dp = float(form.d.derivative(r))
    return np.array([-(cp * v[1] + dp * v[2]), cp * v[0], dp * v[0]])


def exact_flow(form: RotForm, start, time: float) -> np.ndarray:
    """Reeb flow in closed form: r fixed, both angles advance linearly."""
    r, phi, psi = np.asarray(start, dtype=float).reshape(3)
    rate_disk, rate_core = angular_rates(form, r)
    return np.array([r, phi + rate_disk * time, psi + rate_core * time])


def ode_check(form: RotForm, start, time: float,
              spec: OdeSpec | None = None, n_checks: int = 8) -> float:
    """Integrate the Reeb field numerically and compare with exact_flow.

    The ODE runs in Cartesian disk coordinates (x, y, psi), where the
    radius is not privileged, so conservation of r is genuinely tested.
    Returns the sup over n_checks checkpoints of the coordinate error.
    """
    spec = spec or OdeSpec(tol=1e-10)
    r0, phi0, psi0 = np.asarray(start, dtype=float).reshape(3)

    def field(t, y):
        x, yy, psi = y
        rad = math.hypot(x, yy)
        rate_disk, rate_core = angular_rates(form, rad)
        return np.array([-yy * rate_disk, x * rate_disk, rate_core])

    state = np.array([r0 * math.cos(phi0), r0 * math.sin(phi0), psi0])
    worst = 0.0
    times = np.linspace(0.0, time, n_checks + 1)
    for t_prev, t_next in zip(times[:-1], times[1:]):
        state = ode_flow(field, state, t_next - t_prev, spec).state
        r, phi, psi = exact_flow(form, start, t_next)
        target = np.array([r * math.cos(phi), r * math.sin(phi), psi])
        worst = max(worst, float(np.max(np.abs(state - target))))
    return worst


# ---------------------------------------------------------------------------
# Return systems
# ---------------------------------------------------------------------------

_SECTIONS = {"disk-angle": "disk-angle", "disk": "disk-angle",
             "core-angle": "core-angle", "core": "core-angle"}


@dataclass(frozen=True)
class ReturnSystem:
    """First-return data of a rotational form on one of the two sections.

    disk-angle section {phi = const}: an annulus hit each time the disk
    angle advances one turn; needs d' != 0 off the core.  core-angle
    section {psi = const}: a disk hit each time the core angle advances
    one period; needs c' > 0 off the core and contains r = 0 as the
    fixed point of the return map.
    """

    form: RotForm
    section: str
    fiber: float
    r_min: float
    r_max: float

    def tau(self, r):
        """First return time at radius r (limit value at r = 0)."""
        r = np.asarray(r, dtype=float)
        form = self.form
        W = form.wronskian(r)
        c2 = float(form.c.second_derivative(0.0))
        d2 = float(form.d.second_derivative(0.0))
        d0 = float(form.d(0.0))
        at0 = r == 0.0
        if self.section == "core-angle":
            den = np.where(at0, 1.0, form.c.derivative(r))
            out = np.where(at0, self.fiber * d0, self.fiber * W / den)
        else:
            lim = self.fiber * c2 * d0 / abs(d2) if d2 != 0.0 else math.inf
            den = np.where(at0, 1.0, np.abs(form.d.derivative(r)))
            out = np.where(at0, lim, self.fiber * W / den)
        return float(out) if r.ndim == 0 else out

    def shift(self, r):
        """Advance of the complementary angle over one return."""
        r = np.asarray(r, dtype=float)
        form = self.form
        c2 = float(form.c.second_derivative(0.0))
        d2 = float(form.d.second_derivative(0.0))
        cp = form.c.derivative(r)
        dp = form.d.derivative(r)
        at0 = r == 0.0
        if self.section == "core-angle":
            den = np.where(at0, 1.0, cp)
            out = np.where(at0, -self.fiber * d2 / c2, -self.fiber * dp / den)
        else:
            lim = DISK_PERIOD * c2 / abs(d2) if d2 != 0.0 else math.inf
            den = np.where(at0, 1.0, np.abs(dp))
            out = np.where(at0, lim, DISK_PERIOD * cp / den)
        return float(out) if r.ndim == 0 else out

    def rotation_ratio(self, r):
        """shift / fiber of the complementary angle: the resonance number."""
        other = DISK_PERIOD if self.section == "core-angle" else self.form.core_period
        return self.shift(r) / other


def return_system(form: RotForm, section: str, n_grid: int = 4096) -> ReturnSystem:
    """Return data on a section, after checking transversality on a grid."""
    try:
        sec = _SECTIONS[section]
    except KeyError:
        raise ValueError(f"unknown section {section!r}; "
                         "use 'disk-angle' or 'core-angle'") from None
    rr = _scan_grid(form, n_grid)
    if sec == "core-angle":
        cp = form.c.derivative(rr)
        bad = cp <= 0.0
        if np.any(bad):
            r_bad = float(rr[np.argmax(bad)])
            raise SectionError("core-angle section loses transversality: "
                               f"c'({r_bad:.6g}) <= 0")
        return ReturnSystem(form, sec, form.core_period, 0.0, form.radius)
    dp = form.d.derivative(rr)
    if np.any(dp == 0.0) or (np.min(dp) < 0.0 < np.max(dp)):
        if np.any(dp == 0.0):
            r_bad = float(rr[np.argmax(dp == 0.0)])
        else:
            r_bad = float(rr[np.argmax(dp > 0.0 if dp[0] < 0.0 else dp < 0.0)])
        raise SectionError("disk-angle section loses transversality: "
                           f"d'({r_bad:.6g}) = 0 or changes sign")
    return ReturnSystem(form, sec, DISK_PERIOD, 0.0, form.radius)


# ---------------------------------------------------------------------------
# Closed orbits
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OrbitRecord:
    """One closed-orbit family: the core, or a resonant torus.

    Isolated tori have r_lo = r_hi = r; a tangential resonance that
    holds on an interval is reported once with the interval bounds and
    r placed at the smallest period found on it.
    """

    kind: str
    r: float
    p: int
    q: int
    period: float
    r_lo: float
    r_hi: float
    residual: float

    def is_band(self) -> bool:
        return self.r_hi > self.r_lo


def _closure_residual(form: RotForm, r: float, period: float) -> tuple[int, int, float]:
    """Flow for one period and measure closure of both angles."""
    _, phi, psi = exact_flow(form, (r, 0.0, 0.0), period)
    p = int(round(phi / DISK_PERIOD))
    q = int(round(psi / form.core_period))
    res = max(abs(phi - p * DISK_PERIOD), abs(psi - q * form.core_period))
    if q < 0 or (q == 0 and p < 0):
        p, q = -p, -q
    return p, q, res


def _torus_period(form: RotForm, r: float, p: int, q: int) -> float:
    """Minimal period at a (p, q)-resonant radius."""
    W = float(form.wronskian(r))
    if q != 0:
        return q * form.core_period * W / abs(float(form.c.derivative(r)))
    return abs(p) * DISK_PERIOD * W / abs(float(form.d.derivative(r)))


def _record_torus(form: RotForm, r: float, p: int, q: int, t_max: float,
                  r_lo: float | None = None, r_hi: float | None = None,
                  tol: float = 1e-8) -> OrbitRecord | None:
    period = _torus_period(form, r, p, q)
    if not (0.0 < period <= t_max):
        return None
    p_rec, q_rec, res = _closure_residual(form, r, period)
    if res > tol * max(1.0, period):
        warnings.warn(f"orbit candidate at r = {r:.6g} failed closure "
                      f"re-verification (residual {res:.2e})")
        return None
    return OrbitRecord("resonant-torus", r, p_rec, q_rec, period,
                       r if r_lo is None else r_lo,
                       r if r_hi is None else r_hi, res)


def _runs(indices: np.ndarray):
    """Maximal runs of consecutive integers, as (first, last) pairs."""
    if indices.size == 0:
        return
    cuts = np.flatnonzero(np.diff(indices) > 1)
    starts = np.concatenate(([0], cuts + 1))
    ends = np.concatenate((cuts, [indices.size - 1]))
    for a, b in zip(starts, ends):
        yield int(indices[a]), int(indices[b])


def _coprime_pairs(p_max: int, q_max: int):
    """(p, q) in canonical form: q >= 1 with gcd(|p|, q) = 1, plus (1, 0)."""
    yield 1, 0
    for q in range(1, q_max + 1):
        for p in range(-p_max, p_max + 1):
            if math.gcd(abs(p), q) == 1:
                yield p, q


def orbit_enumerate(form: RotForm, t_max: float, q_max: int,
                    n_grid: int = 10000) -> list[OrbitRecord]:
    """All closed-orbit families with period <= t_max and core turns <= q_max.

    A radius is resonant for coprime (p, q) when q*(-d')/(2*pi) equals
    p*c'/P there (the rate-ratio condition cleared of its denominator W,
    so the scan has no poles).  Sign changes on the grid are refined by
    bisection; stretches where the function vanishes identically are
    reported as bands.  Every record is re-verified by closing the exact
    flow to 1e-8 in both angles.
    """
    if q_max < 0:
        raise ValueError("q_max must be >= 0")
    contact_check(form, n_grid=min(n_grid, 4096))
    records: list[OrbitRecord] = []

    core_T = form.core_period * float(form.d(0.0))
    if core_T <= t_max:
        _, _, res = _closure_residual(form, 0.0, core_T)
        records.append(OrbitRecord("core", 0.0, 0, 1, core_T, 0.0, 0.0, res))

    rr = _scan_grid(form, n_grid)
    cp = form.c.derivative(rr)
    dp = form.d.derivative(rr)
    W = form.wronskian(rr)
    coef_q = -dp / DISK_PERIOD
    coef_p = cp / form.core_period

    # period formulas bound how many angle turns fit below t_max
    p_max = int(math.ceil(t_max * float(np.max(np.abs(dp) / W)) / DISK_PERIOD))
    q_cap = int(math.ceil(t_max * float(np.max(np.abs(cp) / W)) / form.core_period))
    q_eff = min(q_max, max(q_cap, 0))
    if p_max > 10000:
        warnings.warn(f"clamping disk-turn bound from {p_max} to 10000")
        p_max = 10000

    for p, q in _coprime_pairs(p_max, q_eff):
        g = q * coef_q - p * coef_p
        scale = abs(q) * np.abs(coef_q) + abs(p) * np.abs(coef_p)
        zero = np.abs(g) <= 1e-12 * np.maximum(scale, 1e-300)
        # bands: maximal runs of grid zeros (>= 2 points)
        claimed = np.zeros(rr.size, dtype=bool)
        idx = np.flatnonzero(zero)
        for i, j in _runs(idx):
            if j > i:
                lo, hi = float(rr[i]), float(rr[j])
                seg = slice(i, j + 1)
                if q != 0:
                    periods = q * form.core_period * W[seg] / np.abs(cp[seg])
                else:
                    periods = abs(p) * DISK_PERIOD * W[seg] / np.abs(dp[seg])
                best = int(np.argmin(periods))
                rec = _record_torus(form, float(rr[seg][best]), p, q, t_max,
                                    r_lo=lo, r_hi=hi)
                if rec is not None:
                    records.append(rec)
            else:
                rec = _record_torus(form, float(rr[i]), p, q, t_max)
                if rec is not None:
                    records.append(rec)
            claimed[i:j + 1] = True

        sign_change = np.where((g[:-1] * g[1:] < 0.0)
                               & ~claimed[:-1] & ~claimed[1:])[0]
        for i in sign_change:
            a, b = float(rr[i]), float(rr[i + 1])
            try:
                root = brentq(
                    lambda s: q * (-float(form.d.derivative(s))) / DISK_PERIOD
                    - p * float(form.c.derivative(s)) / form.core_period,
                    a, b, xtol=1e-14, rtol=8.9e-16)
            except (RuntimeError, ValueError):
                warnings.warn(f"could not isolate a ({p},{q}) resonance "
                              f"in [{a:.6g}, {b:.6g}]; grid may be too coarse")
                continue
            rec = _record_torus(form, float(root), p, q, t_max)
            if rec is not None:
                records.append(rec)

    records.sort(key=lambda o: (o.period, o.r, o.q, o.p))
    return records


@dataclass(frozen=True)
class TminEstimate:
    """Search-limited minimal period, with the scan parameters on record."""

    value: float
    kind: str
    r: float
    t_max: float
    q_max: int
    n_grid: int
    heuristic: bool = field(default=True)


def tmin(form: RotForm, t_max: float, q_max: int,
         n_grid: int = 10000) -> TminEstimate:
    """Minimum period over the enumerated orbit families (heuristic)."""
    records = orbit_enumerate(form, t_max, q_max, n_grid)
    if not records:
        return TminEstimate(math.inf, "none-found", math.nan,
                            t_max, q_max, n_grid)
    best = records[0]
    return TminEstimate(best.period, best.kind, best.r, t_max, q_max, n_grid)


# ---------------------------------------------------------------------------
# Volume
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class VolumeTriple:
    """The same volume three ways; spread is the worst pairwise mismatch."""

    closed_form: float
    section: float
    quadrature: float

    @property
    def value(self) -> float:
        return self.closed_form

    @property
    def spread(self) -> float:
        vals = (self.closed_form, self.section, self.quadrature)
        lo, hi = min(vals), max(vals)
        return (hi - lo) / max(abs(lo), abs(hi), 1e-300)


def volume(form: RotForm, n_simpson: int = 8193, n_angle: int = 24) -> VolumeTriple:
    """vol = integral of alpha ^ dalpha over the solid torus, three ways.

    (1) exact reduction 2*pi*P*int W dr with per-knot-interval Gauss;
    (2) int tau dalpha over a section, using the return-system tau
        (core-angle section when transverse, else disk-angle);
    (3) a 3D tensor quadrature assembling the wedge coefficient at
        every (r, phi, psi) node: Simpson in r (ignoring the knots),
        uniform midpoint in both angles.
    """
    contact_check(form)
    R, P = form.radius, form.core_period
    breaks = _knot_union(form)

    v1 = DISK_PERIOD * P * gauss_piecewise(
        lambda r: form.wronskian(r), breaks, 0.0, R, npts=4)

    try:
        sys = return_system(form, "core-angle")
        v2 = DISK_PERIOD * gauss_piecewise(
            lambda r: sys.tau(r) * form.c.derivative(r), breaks, 0.0, R, npts=12)
    except SectionError:
        sys = return_system(form, "disk-angle")
        v2 = P * gauss_piecewise(
            lambda r: sys.tau(r) * np.abs(form.d.derivative(r)),
            breaks, 0.0, R, npts=12)

    if n_simpson % 2 == 0:
        n_simpson += 1
    rr = np.linspace(0.0, R, n_simpson)
    w = np.ones(n_simpson)
    w[1:-1:2], w[2:-1:2] = 4.0, 2.0
    w *= (R / (n_simpson - 1)) / 3.0
    # wedge coefficient of dr^dphi^dpsi assembled from the raw pieces
    coeff = (form.d(rr) * form.c.derivative(rr)
             - form.c(rr) * form.d.derivative(rr))
    ang_w = np.full(n_angle, DISK_PERIOD / n_angle)
    core_w = np.full(n_angle, P / n_angle)
    v3 = float(np.einsum("i,j,k->", w * coeff, ang_w, core_w))

    return VolumeTriple(float(v1), float(v2), v3)
