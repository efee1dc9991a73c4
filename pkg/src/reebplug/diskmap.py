"""Compactly supported area-preserving disk maps and their action calculus.

A DiskMap is an ordered composition of two primitive kinds:

- RadialTwist: z -> z * exp(i * rho(|z|)) for a radial profile rho,
- HamiltonianStep: the time-t flow of a compactly supported Hamiltonian
  given as a finite sum of radial-bump x angular-harmonic terms.

Both primitives carry closed-form or variational differentials; nothing
here ever finite-differences the map itself.  The action sigma of a map
phi with respect to a primitive 1-form lam (lam0 = (x dy - y dx)/2,
optionally plus du) solves d(sigma) = phi*lam - lam and is anchored to
vanish where the map is the identity near the boundary circle.  The
Calabi invariant is the integral of sigma over the disk.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .numerics import (
    DEFAULT_ODE,
    DEFAULT_QUAD,
    NonConvergenceError,
    OdeSpec,
    QuadratureSpec,
    RadialFunction,
    gauss_rule,
    integrate_disk,
)

_GAUSS5 = gauss_rule(5)
_GAUSS15 = gauss_rule(15)


# ---------------------------------------------------------------------------
# Bump-harmonic terms (shared by Hamiltonians and 1-form potentials)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BumpHarmonic:
    """coef * (1 - (r/support)^2)^power * T_m(z/support), zero outside support.

    T_m is Re or Im of (z/support)^m, so the term is smooth on the plane
    (C^(power-1) across the support circle; power >= 3 keeps the Hessian
    continuous).
    """

    m: int
    trig: str  # "cos" -> Re, "sin" -> Im
    coef: float
    support: float
    power: int = 4

    def __post_init__(self):
        if self.m < 0 or self.trig not in ("cos", "sin"):
            raise ValueError("need m >= 0 and trig in {cos, sin}")
        if self.support <= 0 or self.power < 3:
            raise ValueError("need support > 0 and power >= 3")
        if self.m == 0 and self.trig == "sin":
            raise ValueError("m = 0 sine term vanishes identically")

    def _bump(self, u):
        # B(u) = (1 - u/a^2)^p and derivatives in u = r^2, masked outside
        a2 = self.support ** 2
        s = np.clip(1.0 - u / a2, 0.0, None)
        p = self.power
        B = s ** p
        Bp = -(p / a2) * s ** (p - 1)
        Bpp = (p * (p - 1) / a2 ** 2) * s ** (p - 2)
        inside = u < a2
        return B * inside, Bp * inside, Bpp * inside

    def _harmonic(self, z):
        # T, T' (holomorphic derivative), T'' of Re/Im (z/a)^m
        a = self.support
        m = self.m
        if m == 0:
            one = np.ones_like(z, dtype=complex)
            zero = np.zeros_like(z, dtype=complex)
            F, Fp, Fpp = one, zero, zero
        else:
            F = (z / a) ** m
            Fp = m * z ** (m - 1) / a ** m if m >= 1 else 0.0 * z
            Fpp = m * (m - 1) * z ** (m - 2) / a ** m if m >= 2 else np.zeros_like(z)
        part = np.real if self.trig == "cos" else np.imag
        return part(F), Fp, Fpp

    def value(self, z):
        u = np.abs(z) ** 2
        B, _, _ = self._bump(u)
        T, _, _ = self._harmonic(z)
        return self.coef * B * T

    def gradient(self, z):
        """(H_x, H_y) as a complex array H_x + i H_y."""
        x, y = np.real(z), np.imag(z)
        u = x * x + y * y
        B, Bp, _ = self._bump(u)
        T, Fp, _ = self._harmonic(z)
        if self.trig == "cos":
            Tx, Ty = np.real(Fp), -np.imag(Fp)
        else:
            Tx, Ty = np.imag(Fp), np.real(Fp)
        gx = Bp * 2.0 * x * T + B * Tx
        gy = Bp * 2.0 * y * T + B * Ty
        return self.coef * (gx + 1j * gy)

    def hessian(self, z):
        """(H_xx, H_xy, H_yy)."""
        x, y = np.real(z), np.imag(z)
        u = x * x + y * y
        B, Bp, Bpp = self._bump(u)
        T, Fp, Fpp = self._harmonic(z)
        if self.trig == "cos":
            Tx, Ty = np.real(Fp), -np.imag(Fp)
            Txx, Txy = np.real(Fpp), -np.imag(Fpp)
        else:
            Tx, Ty = np.imag(Fp), np.real(Fp)
            Txx, Txy = np.imag(Fpp), np.real(Fpp)
        Tyy = -Txx  # harmonic
        Hxx = 4.0 * x * x * Bpp * T + 2.0 * Bp * T + 4.0 * x * Bp * Tx + B * Txx
        Hxy = 4.0 * x * y * Bpp * T + 2.0 * y * Bp * Tx + 2.0 * x * Bp * Ty + B * Txy
        Hyy = 4.0 * y * y * Bpp * T + 2.0 * Bp * T + 4.0 * y * Bp * Ty + B * Tyy
        return self.coef * Hxx, self.coef * Hxy, self.coef * Hyy

    def rescaled(self, factor: float) -> "BumpHarmonic":
        # H_factor(z) = factor^2 * H(z/factor); the term family is closed under it
        return BumpHarmonic(self.m, self.trig, self.coef * factor ** 2,
                            self.support * factor, self.power)

    def to_dict(self) -> dict:
        return {"m": self.m, "trig": self.trig, "coef": self.coef,
                "support": self.support, "power": self.power}

    @classmethod
    def from_dict(cls, d: dict) -> "BumpHarmonic":
        return cls(int(d["m"]), d["trig"], float(d["coef"]),
                   float(d["support"]), int(d.get("power", 4)))


def _terms_value(terms, z):
    out = np.zeros(np.shape(z))
    for t in terms:
        out = out + t.value(z)
    return out


def _terms_gradient(terms, z):
    out = np.zeros(np.shape(z), dtype=complex)
    for t in terms:
        out = out + t.gradient(z)
    return out


def _terms_hessian(terms, z):
    hxx = np.zeros(np.shape(z))
    hxy = np.zeros(np.shape(z))
    hyy = np.zeros(np.shape(z))
    for t in terms:
        a, b, c = t.hessian(z)
        hxx, hxy, hyy = hxx + a, hxy + b, hyy + c
    return hxx, hxy, hyy


# ---------------------------------------------------------------------------
# Primitives
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RadialTwist:
    """z -> z * exp(i * profile(|z|)); identity outside the profile support."""

    profile: RadialFunction

    def __post_init__(self):
        if self.profile.parity != "even":
            raise ValueError("twist profile must have even parity")

    @property
    def support(self) -> float:
        return float(self.profile.knots[-1])

    def evaluate(self, z):
        r = np.abs(z)
        return z * np.exp(1j * self.profile(r))

    def differential(self, z):
        """2x2 Jacobians, shape (..., 2, 2), by the closed formula."""
        return self.evaluate_with_differential(z)[1]

    def evaluate_with_differential(self, z):
        z = np.asarray(z, dtype=complex)
        r = np.abs(z)
        rho = self.profile(r)
        drho = self.profile.derivative(r)
        phase = np.exp(1j * rho)
        safe_r = np.where(r == 0.0, 1.0, r)
        x, y = np.real(z), np.imag(z)
        dx = phase * (1.0 + 1j * drho * x * z / safe_r)
        dy = phase * (1j + 1j * drho * y * z / safe_r)
        # at r = 0 the twist is the rotation by profile(0)
        dx = np.where(r == 0.0, phase * 1.0, dx)
        dy = np.where(r == 0.0, phase * 1j, dy)
        J = np.empty(np.shape(z) + (2, 2))
        J[..., 0, 0], J[..., 0, 1] = np.real(dx), np.real(dy)
        J[..., 1, 0], J[..., 1, 1] = np.imag(dx), np.imag(dy)
        return z * phase, J

    def rescaled(self, factor: float) -> "RadialTwist":
        return RadialTwist(self.profile.scaled(1.0, arg_scale=factor))

    def to_dict(self) -> dict:
        return {"kind": "radial_twist", "profile": self.profile.to_dict()}


@dataclass(frozen=True)
class HamiltonianStep:
    """Time-`time` flow of H = sum of bump-harmonic terms (x' = H_y, y' = -H_x)."""

    terms: tuple[BumpHarmonic, ...]
    time: float = 1.0
    ode: OdeSpec = field(default_factory=lambda: OdeSpec(tol=1e-12))

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        if not self.terms:
            raise ValueError("need at least one term")

    @property
    def support(self) -> float:
        return max(t.support for t in self.terms)

    def hamiltonian(self, z):
        return _terms_value(self.terms, z)

    def _flow(self, z0: np.ndarray, with_jac: bool):
        """Integrate points (and variational 2x2 blocks) as one stacked system."""
        from scipy.integrate import DOP853

        n = z0.size
        if with_jac:
            y0 = np.concatenate([np.real(z0), np.imag(z0),
                                 np.ones(n), np.zeros(n), np.zeros(n), np.ones(n)])
        else:
            y0 = np.concatenate([np.real(z0), np.imag(z0)])

        def rhs(t, y):
            z = y[:n] + 1j * y[n:2 * n]
            g = _terms_gradient(self.terms, z)
            out = np.empty_like(y)
            out[:n] = np.imag(g)        # x' = H_y
            out[n:2 * n] = -np.real(g)  # y' = -H_x
            if with_jac:
                hxx, hxy, hyy = _terms_hessian(self.terms, z)
                j00, j01 = y[2 * n:3 * n], y[3 * n:4 * n]
                j10, j11 = y[4 * n:5 * n], y[5 * n:6 * n]
                # dJ/dt = A J with A = [[H_xy, H_yy], [-H_xx, -H_xy]]
                out[2 * n:3 * n] = hxy * j00 + hyy * j10
                out[3 * n:4 * n] = hxy * j01 + hyy * j11
                out[4 * n:5 * n] = -hxx * j00 - hxy * j10
                out[5 * n:6 * n] = -hxx * j01 - hxy * j11
            return out

        stepper = DOP853(rhs, 0.0, y0, t_bound=self.time,
                         rtol=self.ode.tol, atol=self.ode.tol)
        steps = 0
        while stepper.status == "running":
            msg = stepper.step()
            steps += 1
            if steps > self.ode.max_steps:
                raise NonConvergenceError("Hamiltonian flow exceeded step budget")
            if not np.all(np.isfinite(stepper.y)):
                raise NonConvergenceError("Hamiltonian flow became non-finite")
        if stepper.status == "failed":
            raise NonConvergenceError(f"Hamiltonian flow failed: {msg}")
        y = stepper.y
        z = y[:n] + 1j * y[n:2 * n]
        if not with_jac:
            return z, None
        J = np.empty((n, 2, 2))
        J[:, 0, 0], J[:, 0, 1] = y[2 * n:3 * n], y[3 * n:4 * n]
        J[:, 1, 0], J[:, 1, 1] = y[4 * n:5 * n], y[5 * n:6 * n]
        return z, J

    def evaluate(self, z):
        z = np.asarray(z, dtype=complex)
        shape = z.shape
        out, _ = self._flow(z.ravel(), with_jac=False)
        return out.reshape(shape) if shape else complex(out[0])

    def differential(self, z):
        z = np.asarray(z, dtype=complex)
        shape = z.shape
        _, J = self._flow(z.ravel(), with_jac=True)
        return J.reshape(shape + (2, 2)) if shape else J[0]

    def evaluate_with_differential(self, z):
        z = np.asarray(z, dtype=complex)
        shape = z.shape
        w, J = self._flow(z.ravel(), with_jac=True)
        if shape:
            return w.reshape(shape), J.reshape(shape + (2, 2))
        return complex(w[0]), J[0]

    def rescaled(self, factor: float) -> "HamiltonianStep":
        return HamiltonianStep(tuple(t.rescaled(factor) for t in self.terms),
                               self.time, self.ode)

    def to_dict(self) -> dict:
        return {"kind": "hamiltonian", "terms": [t.to_dict() for t in self.terms],
                "time": self.time}


def _primitive_from_dict(d: dict):
    if d["kind"] == "radial_twist":
        return RadialTwist(RadialFunction.from_dict(d["profile"]))
    if d["kind"] == "hamiltonian":
        return HamiltonianStep(tuple(BumpHarmonic.from_dict(t) for t in d["terms"]),
                               float(d.get("time", 1.0)))
    raise ValueError(f"unknown primitive kind {d['kind']!r}")


# ---------------------------------------------------------------------------
# DiskMap
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DiskMap:
    """Ordered composition of primitives on the disk of the given radius.

    The primitive list composes like written function composition:
    [p1, p2] is p1 after p2 (p2 acts first).
    """

    radius: float
    primitives: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "primitives", tuple(self.primitives))
        if self.radius <= 0:
            raise ValueError("radius must be positive")
        for p in self.primitives:
            if p.support > self.radius + 1e-12:
                raise ValueError("primitive support exceeds the map radius")

    @property
    def support(self) -> float:
        return max((p.support for p in self.primitives), default=0.0)

    @property
    def is_radial(self) -> bool:
        return all(isinstance(p, RadialTwist) for p in self.primitives)

    def combined_profile(self) -> RadialFunction:
        """Total twist profile (radial maps commute, so profiles just add)."""
        if not self.is_radial:
            raise ValueError("combined_profile needs a purely radial map")
        if not self.primitives:
            return RadialFunction(np.array([0.0, self.radius]), np.zeros(2),
                                  np.zeros(2), parity="even")
        profiles = [p.profile for p in self.primitives]
        total = profiles[0]
        for q in profiles[1:]:
            total = total + q
        return total

    def evaluate(self, z):
        z = np.asarray(z, dtype=complex)
        out = z
        for p in reversed(self.primitives):
            out = p.evaluate(out)
        return out

    def __call__(self, z):
        return self.evaluate(z)

    def evaluate_xy(self, point):
        """(x, y) -> (x, y), the array-of-two interface used by root finders."""
        z = complex(point[0], point[1])
        w = self.evaluate(z)
        return np.array([w.real, w.imag])

    def differential(self, z):
        """Jacobian chain across the primitives (closed form / variational)."""
        return self.evaluate_with_differential(z)[1]

    def evaluate_with_differential(self, z):
        """(phi(z), D(phi)(z)) with one pass over the primitives."""
        z = np.asarray(z, dtype=complex)
        J = np.broadcast_to(np.eye(2), z.shape + (2, 2)).copy()
        cur = z
        for p in reversed(self.primitives):
            cur, Jp = p.evaluate_with_differential(cur)
            J = Jp @ J
        return cur, J

    def iterate(self, z, k: int):
        out = np.asarray(z, dtype=complex)
        for _ in range(k):
            out = self.evaluate(out)
        return out

    def iterate_differential(self, z, k: int):
        """(phi^k(z), D(phi^k)(z)) via the chain rule along the orbit."""
        cur = np.asarray(z, dtype=complex)
        J = np.broadcast_to(np.eye(2), cur.shape + (2, 2)).copy()
        for _ in range(k):
            cur, Jstep = self.evaluate_with_differential(cur)
            J = Jstep @ J
        return cur, J

    def to_dict(self) -> dict:
        return {"radius": self.radius,
                "primitives": [p.to_dict() for p in self.primitives]}

    @classmethod
    def from_dict(cls, d: dict) -> "DiskMap":
        return cls(float(d["radius"]),
                   tuple(_primitive_from_dict(p) for p in d["primitives"]))


def compose(phi: DiskMap, psi: DiskMap) -> DiskMap:
    """phi after psi on a common ambient radius."""
    if abs(phi.radius - psi.radius) > 1e-12:
        raise ValueError("maps must share the ambient radius")
    return DiskMap(phi.radius, phi.primitives + psi.primitives)


def rescale(phi: DiskMap, factor: float) -> DiskMap:
    """The conjugated map z -> factor * phi(z / factor)."""
    if factor <= 0:
        raise ValueError("factor must be positive")
    return DiskMap(phi.radius * factor,
                   tuple(p.rescaled(factor) for p in phi.primitives))


# ---------------------------------------------------------------------------
# Primitive 1-forms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PrimitiveOneForm:
    """lam0 = (x dy - y dx)/2, optionally plus du for a bump-harmonic u.

    Any such form has d(lam) = dx ^ dy, which is what the action
    construction needs.
    """

    u_terms: tuple[BumpHarmonic, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "u_terms", tuple(self.u_terms))

    def u(self, z):
        if not self.u_terms:
            return np.zeros(np.shape(z))
        return _terms_value(self.u_terms, z)

    def eval(self, z, v):
        """Pair the form at the point z with the tangent vector v (complex)."""
        lam0 = 0.5 * (np.real(z) * np.imag(v) - np.imag(z) * np.real(v))
        if not self.u_terms:
            return lam0
        g = _terms_gradient(self.u_terms, z)
        return lam0 + np.real(g) * np.real(v) + np.imag(g) * np.imag(v)

    def to_dict(self) -> dict:
        return {"u_terms": [t.to_dict() for t in self.u_terms]}

    @classmethod
    def from_dict(cls, d: dict) -> "PrimitiveOneForm":
        return cls(tuple(BumpHarmonic.from_dict(t) for t in d.get("u_terms", ())))


LAM0 = PrimitiveOneForm()


# ---------------------------------------------------------------------------
# Action fields
# ---------------------------------------------------------------------------

class ActionField:
    """The compactly supported solution sigma of d(sigma) = phi*lam - lam.

    Anchored to vanish on the identity annulus near |z| = radius.  For
    purely radial maps sigma is radial and is reduced per knot interval
    by exact Gauss quadrature; otherwise sigma(z) is a line integral of
    phi*lam - lam along the ray from the boundary through z.
    """

    def __init__(self, phi: DiskMap, lam: PrimitiveOneForm = LAM0,
                 spec: QuadratureSpec | None = None):
        self.map = phi
        self.lam = lam
        self.spec = spec or QuadratureSpec(abs_tol=1e-12, rel_tol=1e-12)
        self.anchor = "zero on the boundary identity annulus"
        self._radial = phi.is_radial and not lam.u_terms
        if self._radial:
            prof = phi.combined_profile()
            self._profile = prof
            # sigma' = r^2 rho'(r) / 2: cumulative exact integrals, outside-in
            knots = prof.knots
            x5, w5 = _GAUSS5
            pieces = np.zeros(knots.size - 1)
            for i in range(knots.size - 1):
                lo, hi = knots[i], knots[i + 1]
                mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
                s = mid + half * x5
                pieces[i] = half * np.sum(w5 * 0.5 * s * s * prof.derivative(s))
            sig = np.zeros(knots.size)
            sig[:-1] = -np.cumsum(pieces[::-1])[::-1]
            self._sigma_knots = knots
            self._sigma_values = sig

    # -- radial kernel --------------------------------------------------

    def _sigma_radial(self, r):
        r = np.atleast_1d(np.asarray(r, dtype=float))
        knots, sig = self._sigma_knots, self._sigma_values
        prof = self._profile
        out = np.zeros_like(r)
        inside = r < knots[-1]
        if np.any(inside):
            ri = np.clip(r[inside], knots[0], knots[-1])
            idx = np.clip(np.searchsorted(knots, ri, side="right") - 1, 0, knots.size - 2)
            hi = knots[idx + 1]
            # sigma(r) = sigma(knot_right) - int_r^knot_right s^2 rho' / 2
            x5, w5 = _GAUSS5
            mid = 0.5 * (ri + hi)
            half = 0.5 * (hi - ri)
            s = mid[:, None] + half[:, None] * x5[None, :]
            part = half * np.sum(w5[None, :] * 0.5 * s * s * prof.derivative(s), axis=1)
            out[inside] = sig[idx + 1] - part
        return out

    def radial_profile(self, r):
        """sigma as a function of the radius (radial maps only)."""
        if not self._radial:
            raise ValueError("map is not radial")
        r = np.asarray(r, dtype=float)
        scalar = r.ndim == 0
        out = self._sigma_radial(np.atleast_1d(r))
        return float(out[0]) if scalar else out

    # -- general path integral -------------------------------------------

    _H_MAX = 0.05  # widest Gauss panel along any integration path

    def _pullback_minus(self, z, v):
        """(phi*lam - lam)(z; v); z and v may be matching complex arrays."""
        z = np.asarray(z, dtype=complex)
        v = np.asarray(v, dtype=complex)
        w, J = self.map.evaluate_with_differential(z)
        vv = np.stack([np.real(v), np.imag(v)], axis=-1)
        Jv = (J @ vv[..., None])[..., 0]
        return self.lam.eval(w, Jv[..., 0] + 1j * Jv[..., 1]) - self.lam.eval(z, v)

    def _start_radius(self, r: float) -> float:
        R = self.map.radius
        start = max(self.map.support, min(r, R))
        if self.lam.u_terms:
            start = max(start, max(t.support for t in self.lam.u_terms))
        return min(start, R)

    def _ray_sigma(self, r: np.ndarray, e: np.ndarray) -> np.ndarray:
        """sigma at the points r[i]*e[i]: -int_r^start (phi*lam - lam)(s e; e) ds.

        Every ray is cut at the map/form breakpoints and tiled with short
        Gauss panels; all nodes of all rays are evaluated in one stacked
        pass so Hamiltonian primitives cost a single variational flow.
        """
        x15, w15 = _GAUSS15
        breaks = self._breaks()
        pts, vecs, wts, ids = [], [], [], []
        for i in range(r.size):
            ri = float(r[i])
            start = self._start_radius(ri)
            if ri >= start:
                continue
            edges = [ri, start]
            if breaks is not None:
                edges.extend(b for b in breaks if ri < b < start)
            edges = np.unique(np.asarray(edges, dtype=float))
            fine = [edges[0]]
            for k in range(edges.size - 1):
                m = max(1, int(math.ceil((edges[k + 1] - edges[k]) / self._H_MAX)))
                fine.extend(np.linspace(edges[k], edges[k + 1], m + 1)[1:].tolist())
            fe = np.asarray(fine)
            mid, half = 0.5 * (fe[1:] + fe[:-1]), 0.5 * (fe[1:] - fe[:-1])
            s = (mid[:, None] + half[:, None] * x15[None, :]).ravel()
            pts.append(s * e[i])
            vecs.append(np.full(s.size, e[i]))
            wts.append((half[:, None] * w15[None, :]).ravel())
            ids.append(np.full(s.size, i, dtype=np.intp))
        out = np.zeros(r.size)
        if not pts:
            return out
        P, V = np.concatenate(pts), np.concatenate(vecs)
        W, I = np.concatenate(wts), np.concatenate(ids)
        vals = np.empty(P.size)
        chunk = 200000  # bound the stacked variational system
        for k in range(0, P.size, chunk):
            vals[k:k + chunk] = self._pullback_minus(P[k:k + chunk], V[k:k + chunk])
        # minus: the anchored integral runs from the boundary inward
        return -np.bincount(I, weights=W * vals, minlength=r.size)

    def _arc_integral(self, r: float, t0: float, t1: float) -> float:
        if t0 == t1 or r == 0.0:
            return 0.0
        x15, w15 = _GAUSS15
        n = max(2, int(math.ceil(abs(t1 - t0) * r / self._H_MAX)))
        edges = np.linspace(t0, t1, n + 1)
        mid, half = 0.5 * (edges[1:] + edges[:-1]), 0.5 * (edges[1:] - edges[:-1])
        t = (mid[:, None] + half[:, None] * x15[None, :]).ravel()
        wq = (half[:, None] * w15[None, :]).ravel()  # signed via half
        p = r * np.exp(1j * t)
        return float(np.sum(wq * self._pullback_minus(p, 1j * p)))

    def _sigma_path(self, z: complex) -> float:
        z = complex(z)
        r = abs(z)
        e = z / r if r > 0 else 1.0 + 0.0j
        return float(self._ray_sigma(np.array([r]), np.array([e]))[0])

    def _breaks(self):
        pts = []
        for p in self.map.primitives:
            if isinstance(p, RadialTwist):
                pts.extend(p.profile.knots.tolist())
            else:
                pts.extend(t.support for t in p.terms)
        for t in self.lam.u_terms:
            pts.append(t.support)
        return np.unique(np.asarray(pts)) if pts else None

    # -- public ----------------------------------------------------------

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        scalar = z.ndim == 0
        zz = np.atleast_1d(z).ravel()
        if self._radial:
            out = self._sigma_radial(np.abs(zz))
        else:
            rr = np.abs(zz)
            safe = np.where(rr == 0.0, 1.0, rr)
            ee = np.where(rr == 0.0, 1.0 + 0.0j, zz / safe)
            out = self._ray_sigma(rr, ee)
        out = out.reshape(np.shape(z))
        return float(out[()]) if scalar else out

    def path_independence_check(self, z: complex) -> float:
        """Re-integrate along ray-then-arc and report the discrepancy."""
        direct = float(self(z))
        r = abs(z)
        if r == 0.0:
            return 0.0
        theta = math.atan2(z.imag, z.real)
        ray = float(self._ray_sigma(np.array([r]), np.array([1.0 + 0.0j]))[0])
        arc = self._arc_integral(r, 0.0, theta)
        return abs(direct - (ray + arc))


def action(phi: DiskMap, lam: PrimitiveOneForm = LAM0,
           spec: QuadratureSpec | None = None) -> ActionField:
    return ActionField(phi, lam, spec)


def compose_action(phi: DiskMap, psi: DiskMap, lam: PrimitiveOneForm = LAM0,
                   spec: QuadratureSpec | None = None):
    """sigma of phi o psi as sigma_phi(psi(z)) + sigma_psi(z) (cocycle rule)."""
    s_phi = action(phi, lam, spec)
    s_psi = action(psi, lam, spec)

    def sigma(z):
        z = np.asarray(z, dtype=complex)
        return s_phi(psi.evaluate(z)) + s_psi(z)

    return sigma


def calabi(phi: DiskMap, lam: PrimitiveOneForm = LAM0,
           spec: QuadratureSpec | None = None) -> float:
    """CAL(phi) = integral of the action over the disk.

    Radial maps reduce to an exact per-interval Gauss sum of
    2*pi*r*sigma(r); general maps go through the 2D quadrature.
    """
    sig = action(phi, lam, spec)
    if sig._radial:
        prof = sig._profile
        knots = prof.knots
        x5, w5 = gauss_rule(6)
        total = 0.0
        for i in range(knots.size - 1):
            lo, hi = knots[i], knots[i + 1]
            mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
            s = mid + half * x5
            total += half * np.sum(w5 * 2.0 * np.pi * s * sig._sigma_radial(s))
        return float(total)
    res = integrate_disk(lambda x, y: sig(np.asarray(x) + 1j * np.asarray(y)),
                         phi.radius, spec or DEFAULT_QUAD)
    return res.value


# ---------------------------------------------------------------------------
# Periodic points
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PeriodicOrbit:
    point: complex
    period: int
    action_sum: float
    orbit: tuple[complex, ...]
    residual: float


def _orbit_of(phi: DiskMap, z: complex, k: int) -> tuple[complex, ...]:
    pts = [z]
    for _ in range(k - 1):
        pts.append(complex(phi.evaluate(pts[-1])))
    return tuple(pts)


def _same_orbit(a: tuple[complex, ...], b: tuple[complex, ...], tol: float) -> bool:
    if len(a) != len(b):
        return False
    for pa in a:
        if min(abs(pa - pb) for pb in b) > tol:
            return False
    return True


def periodic_points(phi: DiskMap, k_max: int, n_r: int = 24, n_theta: int = 16,
                    accept_tol: float = 1e-9, dedup_tol: float = 1e-6) -> list[PeriodicOrbit]:
    """Polar-grid seeded Newton search for periodic points of period <= k_max.

    Newton runs on phi^k - id with the chained variational Jacobian
    (pseudo-inverse step, so circle continua of periodic points are
    handled).  Minimality is checked against proper divisors of k;
    results are deduplicated by orbit.  Action sums use lam0.
    """
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    R = phi.radius
    sig = action(phi)
    radii = np.linspace(R / n_r, R * (1.0 - 1e-9), n_r)
    thetas = np.arange(n_theta) * (2.0 * np.pi / n_theta)
    seeds = [0.0 + 0.0j]
    for r in radii:
        for t in thetas:
            seeds.append(r * np.exp(1j * t))
    found: list[PeriodicOrbit] = []
    scale = max(1.0, R)
    for k in range(1, k_max + 1):
        divisors = [j for j in range(1, k) if k % j == 0]
        k_found: list[PeriodicOrbit] = []
        for z0 in seeds:
            z = complex(z0)
            ok = False
            for _ in range(40):
                zk, J = phi.iterate_differential(z, k)
                F = np.array([zk.real - z.real, zk.imag - z.imag])
                res = float(np.hypot(F[0], F[1]))
                if res < 1e-12 * scale:
                    ok = True
                    break
                A = J - np.eye(2)
                step, *_ = np.linalg.lstsq(A, F, rcond=None)
                if not np.all(np.isfinite(step)):
                    break
                nz = z - complex(step[0], step[1])
                if abs(nz) > R * (1.0 + 1e-9):
                    break  # left the disk: discard seed
                z = nz
            else:
                zk, _ = phi.iterate_differential(z, k)
                res = abs(zk - z)
                ok = res < accept_tol * scale
            if not ok:
                zk = phi.iterate(z, k)
                if abs(zk - z) >= accept_tol * scale:
                    continue  # Newton divergence: seed discarded, not reported
            # minimality against proper divisors
            minimal = True
            for j in divisors:
                if abs(phi.iterate(z, j) - z) < 1e-8 * scale:
                    minimal = False
                    break
            if not minimal:
                continue
            orbit = _orbit_of(phi, z, k)
            if any(_same_orbit(orbit, o.orbit, dedup_tol) for o in k_found):
                continue
            act = float(np.sum(sig(np.array(orbit))))
            zk = phi.iterate(z, k)
            k_found.append(PeriodicOrbit(z, k, act, orbit, abs(zk - z)))
        found.extend(k_found)
    return found
