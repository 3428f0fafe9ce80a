"""Legendre curve families in S^3 and H_1^3.

The warping profiles of every construction in this library are Legendre
curves solving a one-parameter family of ODEs:

    sphere:  g1' = +i e^{i mu t} conj(g1)^n1 conj(g2)^(n2+1)
             g2' = -i e^{i mu t} conj(g1)^(n1+1) conj(g2)^n2
    AdS:     a1' = +i e^{i mu t} conj(a1)^n1 conj(a2)^(n2+1)
             a2' = +i e^{i mu t} conj(a1)^(n1+1) conj(a2)^n2

written in divided (polynomial) form so that a vanishing component is a
regular point of the vector field.  This module integrates these systems
with fixed-step RK4 (with a mandatory half-step Richardson cross-check),
provides the explicit constant-modulus solutions and the quadrature
parametrization of the AdS mu=0 family, and analyzes periods, rotation
numbers, and rationality certificates for closedness.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .ambient import Signature, SignatureKind, ads_signature, sphere_signature
from .errors import (
    DomainError,
    IntegrationError,
    NumericalQualityError,
    PeriodDetectionError,
    QuadratureError,
    SingularPointError,
)

MAX_STEP = 1e-2


# ---------------------------------------------------------------------------
# curve specification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CurveSpec:
    """One initial-value problem of the reduced ODE family."""

    ambient: Signature
    n1: int
    n2: int
    mu: float
    init: tuple[complex, complex]

    def __post_init__(self):
        if self.ambient.dim_complex != 2:
            raise DomainError("curve ambient must have dim_complex = 2")
        if self.n1 < 0 or self.n2 < 0:
            raise DomainError("n1, n2 must be nonnegative integers")
        z1, z2 = complex(self.init[0]), complex(self.init[1])
        object.__setattr__(self, "init", (z1, z2))
        res = abs(self.quadric_value(z1, z2) - self.level)
        if res > 1e-12:
            raise DomainError(
                f"initial condition violates the level-{self.level} constraint by {res:.3e}"
            )

    @property
    def level(self) -> int:
        return self.ambient.quadric_level

    @property
    def is_sphere(self) -> bool:
        return self.ambient.kind is SignatureKind.DEFINITE

    def quadric_value(self, z1: complex, z2: complex) -> float:
        q = abs(z1) ** 2
        return q + abs(z2) ** 2 if self.is_sphere else q - abs(z2) ** 2

    @property
    def real_initial(self) -> bool:
        z1, z2 = self.init
        return abs(z1.imag) < 1e-14 and abs(z2.imag) < 1e-14

    @classmethod
    def sphere(cls, n1: int, n2: int, mu: float, theta: float) -> "CurveSpec":
        if not 0.0 < theta < math.pi / 2:
            raise DomainError("theta out of (0, pi/2)")
        return cls(sphere_signature(2), n1, n2, mu, (math.cos(theta), math.sin(theta)))

    @classmethod
    def ads(cls, n1: int, n2: int, mu: float, varrho: float) -> "CurveSpec":
        if varrho <= 0.0:
            raise DomainError("rho must be positive")
        return cls(ads_signature(2), n1, n2, mu, (math.sinh(varrho), math.cosh(varrho)))


def ode_rhs(spec: CurveSpec, t: float, state: tuple[complex, complex]) -> tuple[complex, complex]:
    """Right-hand side of the reduced curve ODE in divided polynomial form."""
    g1, g2 = state
    c1, c2 = g1.conjugate(), g2.conjugate()
    w = cmath.exp(1j * spec.mu * t) if spec.mu != 0.0 else 1.0
    base = w * c1**spec.n1 * c2**spec.n2
    d1 = 1j * base * c2
    d2 = 1j * base * c1
    if spec.is_sphere:
        d2 = -d2
    return d1, d2


def ode_rhs_d2(spec: CurveSpec, t: float, state, deriv) -> tuple[complex, complex]:
    """Second time derivative of a solution, from the chain rule on the rhs."""
    g1, g2 = state
    d1, d2 = deriv
    c1, c2 = g1.conjugate(), g2.conjugate()
    e1, e2 = d1.conjugate(), d2.conjugate()
    n1, n2 = spec.n1, spec.n2
    w = cmath.exp(1j * spec.mu * t) if spec.mu != 0.0 else 1.0
    # log-derivative of w * c1^n1 * c2^(n2+1) resp. w * c1^(n1+1) * c2^n2,
    # written without dividing by possibly tiny moduli
    base = w * c1**n1 * c2**n2
    f1 = 1j * base * c2  # = g1'
    f2 = 1j * base * c1
    dbase = w * (
        (n1 * c1 ** max(n1 - 1, 0) * e1 if n1 > 0 else 0.0) * c2**n2
        + c1**n1 * (n2 * c2 ** max(n2 - 1, 0) * e2 if n2 > 0 else 0.0)
        + (1j * spec.mu) * c1**n1 * c2**n2
    )
    dd1 = 1j * (dbase * c2 + base * e2)
    dd2 = 1j * (dbase * c1 + base * e1)
    if spec.is_sphere:
        dd2 = -dd2
    return dd1, dd2


# ---------------------------------------------------------------------------
# the explicit constant-modulus families
# ---------------------------------------------------------------------------

def gamma_delta_rates(delta: float, n1: int, n2: int) -> tuple[float, float]:
    """Phase rates (w1, w2) of the explicit sphere solution, gamma_j ~ e^{i w_j t}."""
    if not 0.0 < delta < math.pi / 2:
        raise DomainError("delta must lie strictly inside (0, pi/2)")
    c, s = math.cos(delta), math.sin(delta)
    return c ** (n1 - 1) * s ** (n2 + 1), -(c ** (n1 + 1)) * s ** (n2 - 1)


def gamma_delta(delta: float, n1: int, n2: int, t: float) -> tuple[complex, complex]:
    """Constant-modulus Legendre solution in S^3 through (cos delta, sin delta)."""
    w1, w2 = gamma_delta_rates(delta, n1, n2)
    c, s = math.cos(delta), math.sin(delta)
    return c * cmath.exp(1j * w1 * t), s * cmath.exp(1j * w2 * t)


def gamma_delta_mu(delta: float, n1: int, n2: int) -> float:
    """mu value for which gamma_delta solves the reduced sphere ODE."""
    if not 0.0 < delta < math.pi / 2:
        raise DomainError("delta must lie strictly inside (0, pi/2)")
    c, s = math.cos(delta), math.sin(delta)
    return c ** (n1 - 1) * s ** (n2 - 1) * ((n1 + 1) * s * s - (n2 + 1) * c * c)


def delta_minimal(n1: int, n2: int) -> float:
    """The angle where gamma_delta_mu vanishes: arctan sqrt((n2+1)/(n1+1))."""
    return math.atan(math.sqrt((n2 + 1) / (n1 + 1)))


def alpha_rho_rates(rho: float, n1: int, n2: int) -> tuple[float, float]:
    if rho <= 0.0:
        raise DomainError("rho must be positive")
    sh, ch = math.sinh(rho), math.cosh(rho)
    return sh ** (n1 - 1) * ch ** (n2 + 1), sh ** (n1 + 1) * ch ** (n2 - 1)


def alpha_rho(rho: float, n1: int, n2: int, t: float) -> tuple[complex, complex]:
    """Constant-modulus Legendre solution in H_1^3 through (sinh rho, cosh rho)."""
    w1, w2 = alpha_rho_rates(rho, n1, n2)
    sh, ch = math.sinh(rho), math.cosh(rho)
    return sh * cmath.exp(1j * w1 * t), ch * cmath.exp(1j * w2 * t)


def alpha_rho_mu(rho: float, n1: int, n2: int) -> float:
    if rho <= 0.0:
        raise DomainError("rho must be positive")
    sh, ch = math.sinh(rho), math.cosh(rho)
    return sh ** (n1 - 1) * ch ** (n2 - 1) * ((n1 + 1) * ch * ch + (n2 + 1) * sh * sh)


def phase_rotate(state: tuple[complex, complex], theta: float) -> tuple[complex, complex]:
    """Rotate a curve point by e^{i theta}; realizes the absorbed gauge freedom."""
    w = cmath.exp(1j * theta)
    return state[0] * w, state[1] * w


# ---------------------------------------------------------------------------
# trajectories
# ---------------------------------------------------------------------------

@dataclass
class CurveTrajectory:
    """A numerically integrated Legendre curve on a uniform grid through t=0."""

    spec: CurveSpec
    ts: np.ndarray
    values: np.ndarray          # (N, 2) complex
    derivs: np.ndarray          # (N, 2) complex
    moduli: np.ndarray          # (N, 2) real
    phases: np.ndarray          # (N, 2) real, continuously unwrapped
    richardson_error: float = math.nan

    @property
    def step(self) -> float:
        return float(self.ts[1] - self.ts[0])

    def _bracket(self, t: float) -> int:
        if t < self.ts[0] - 1e-12 or t > self.ts[-1] + 1e-12:
            raise DomainError(f"t={t} outside the integrated window [{self.ts[0]}, {self.ts[-1]}]")
        k = int(np.searchsorted(self.ts, t) - 1)
        return min(max(k, 0), len(self.ts) - 2)

    def evaluate(self, t: float) -> tuple[tuple[complex, complex], tuple[complex, complex]]:
        """Dense output by two-point quintic Hermite interpolation."""
        k = self._bracket(t)
        h = self.ts[k + 1] - self.ts[k]
        tau = (t - self.ts[k]) / h
        out = []
        for j in (0, 1):
            f0, f1 = complex(self.values[k, j]), complex(self.values[k + 1, j])
            d0, d1 = complex(self.derivs[k, j]), complex(self.derivs[k + 1, j])
            s0 = ode_rhs_d2(self.spec, self.ts[k], self.values[k], self.derivs[k])[j]
            s1 = ode_rhs_d2(self.spec, self.ts[k + 1], self.values[k + 1], self.derivs[k + 1])[j]
            t2, t3 = tau * tau, tau**3
            t4, t5 = tau**4, tau**5
            h0 = 1 - 10 * t3 + 15 * t4 - 6 * t5
            h1 = tau - 6 * t3 + 8 * t4 - 3 * t5
            h2 = 0.5 * t2 - 1.5 * t3 + 1.5 * t4 - 0.5 * t5
            h3 = 10 * t3 - 15 * t4 + 6 * t5
            h4 = -4 * t3 + 7 * t4 - 3 * t5
            h5 = 0.5 * t3 - t4 + 0.5 * t5
            out.append(h0 * f0 + h1 * h * d0 + h2 * h * h * s0 + h3 * f1 + h4 * h * d1 + h5 * h * h * s1)
        value = (out[0], out[1])
        return value, ode_rhs(self.spec, t, value)

    def phase_at(self, t: float, j: int) -> float:
        """Unwrapped phase of component j at arbitrary t, continued from the nearest node."""
        k = self._bracket(t)
        (v, _) = self.evaluate(t)
        base = self.phases[k, j]
        raw = cmath.phase(v[j])
        return raw + 2 * math.pi * round((base - raw) / (2 * math.pi))

    def quadric_drift(self) -> float:
        q = np.abs(self.values[:, 0]) ** 2
        q = q + np.abs(self.values[:, 1]) ** 2 if self.spec.is_sphere else q - np.abs(self.values[:, 1]) ** 2
        return float(np.max(np.abs(q - self.spec.level)))

    def legendre_residual(self) -> float:
        """Max |Im herm(gamma', gamma)| over the grid (contact-form pullback)."""
        w2 = 1.0 if self.spec.is_sphere else -1.0
        lam = (self.derivs[:, 0] * np.conj(self.values[:, 0])
               + w2 * self.derivs[:, 1] * np.conj(self.values[:, 1])).imag
        return float(np.max(np.abs(lam)))

    def speed(self) -> np.ndarray:
        s2 = np.abs(self.derivs[:, 0]) ** 2
        s2 = s2 + np.abs(self.derivs[:, 1]) ** 2 if self.spec.is_sphere else s2 - np.abs(self.derivs[:, 1]) ** 2
        return np.sqrt(np.maximum(s2, 0.0))

    def gauge_residual(self) -> float:
        """Max deviation of the induced speed from rho1^n1 rho2^n2."""
        target = self.moduli[:, 0] ** self.spec.n1 * self.moduli[:, 1] ** self.spec.n2
        return float(np.max(np.abs(self.speed() - target)))

    def first_integral(self) -> np.ndarray:
        """Re(g1^(n1+1) g2^(n2+1)), conserved when mu = 0."""
        return (self.values[:, 0] ** (self.spec.n1 + 1) * self.values[:, 1] ** (self.spec.n2 + 1)).real

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            f.write("t,re1,im1,re2,im2,rho1,rho2,nu1,nu2\n")
            for k in range(len(self.ts)):
                row = (
                    self.ts[k],
                    self.values[k, 0].real, self.values[k, 0].imag,
                    self.values[k, 1].real, self.values[k, 1].imag,
                    self.moduli[k, 0], self.moduli[k, 1],
                    self.phases[k, 0], self.phases[k, 1],
                )
                f.write(",".join(f"{x:.17g}" for x in row) + "\n")


def _rk4_states(spec: CurveSpec, t_end: float, n_steps: int, modulus_cap: float):
    h = t_end / n_steps
    t = 0.0
    g = spec.init
    values = [g]
    derivs = [ode_rhs(spec, t, g)]
    for _ in range(n_steps):
        k1 = derivs[-1]
        k2 = ode_rhs(spec, t + h / 2, (g[0] + h / 2 * k1[0], g[1] + h / 2 * k1[1]))
        k3 = ode_rhs(spec, t + h / 2, (g[0] + h / 2 * k2[0], g[1] + h / 2 * k2[1]))
        k4 = ode_rhs(spec, t + h, (g[0] + h * k3[0], g[1] + h * k3[1]))
        g = (
            g[0] + h / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]),
            g[1] + h / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]),
        )
        t += h
        m = max(abs(g[0]), abs(g[1]))
        if not math.isfinite(m) or m > modulus_cap:
            raise IntegrationError(
                f"solution modulus exceeded {modulus_cap:g} at t={t:.6g}; "
                "the trajectory escapes in finite time (shrink t_end)"
            )
        values.append(g)
        derivs.append(ode_rhs(spec, t, g))
    return values, derivs


def integrate(
    spec: CurveSpec,
    t_end: float,
    step: float,
    *,
    richardson: bool = True,
    richardson_tol: float = 1e-8,
    drift_tol: float = 1e-6,
    modulus_cap: float = 1e6,
) -> CurveTrajectory:
    """Fixed-step RK4 trajectory on [min(0, t_end), max(0, t_end)] through t=0.

    The grid is uniform with spacing |t_end|/round(|t_end|/step) <= step.  A
    half-step Richardson re-integration cross-checks the terminal state; the
    quadric constraint is monitored and failure suggests a smaller step.
    """
    if not (0.0 < step <= MAX_STEP):
        raise DomainError(f"step must lie in (0, {MAX_STEP}]")
    if not math.isfinite(t_end) or t_end == 0.0:
        raise DomainError("t_end must be finite and nonzero")
    n_steps = max(1, round(abs(t_end) / step))
    values, derivs = _rk4_states(spec, t_end, n_steps, modulus_cap)

    rich = math.nan
    if richardson:
        values2, _ = _rk4_states(spec, t_end, 2 * n_steps, modulus_cap)
        rich = max(abs(values[-1][0] - values2[-1][0]), abs(values[-1][1] - values2[-1][1]))
        if rich > richardson_tol:
            raise IntegrationError(
                f"half-step Richardson check failed: terminal deviation {rich:.3e} "
                f"> {richardson_tol:.1e}; use a smaller step"
            )

    ts = np.linspace(0.0, t_end, n_steps + 1)
    vals = np.array(values, dtype=complex)
    ders = np.array(derivs, dtype=complex)
    if t_end < 0:
        ts, vals, ders = ts[::-1].copy(), vals[::-1].copy(), ders[::-1].copy()

    moduli = np.abs(vals)
    phases = np.unwrap(np.angle(vals), axis=0)
    ok = (moduli[:-1] > 1e-8) & (moduli[1:] > 1e-8)
    jumps = np.abs(np.diff(phases, axis=0))[ok]
    if jumps.size and float(np.max(jumps)) > math.pi / 2:
        raise IntegrationError(
            "per-step phase change exceeded pi/2; the grid is too coarse for "
            "phase unwrapping (use a smaller step)"
        )

    traj = CurveTrajectory(spec, ts, vals, ders, moduli, phases, rich)
    drift = traj.quadric_drift()
    if drift > drift_tol:
        raise IntegrationError(
            f"quadric constraint drift {drift:.3e} exceeds {drift_tol:.1e}; use a smaller step"
        )
    return traj


# ---------------------------------------------------------------------------
# Legendrian angle of a curve point
# ---------------------------------------------------------------------------

def legendre_angle(value, deriv, sig: Signature) -> float:
    """arg((g1 g2' - g2 g1') / |g'|) with the signature-aware speed.

    Defined modulo 2*pi; returned as the principal value in (-pi, pi].
    """
    if sig.dim_complex != 2:
        raise DomainError("legendre_angle expects curves in C^2")
    g1, g2 = complex(value[0]), complex(value[1])
    d1, d2 = complex(deriv[0]), complex(deriv[1])
    s2 = abs(d1) ** 2
    s2 = s2 + abs(d2) ** 2 if sig.kind is SignatureKind.DEFINITE else s2 - abs(d2) ** 2
    if s2 <= 1e-24:
        raise SingularPointError("zero induced speed: Legendrian angle undefined here")
    det = g1 * d2 - g2 * d1
    return cmath.phase(det / math.sqrt(s2))


def angle_linearity_drift(traj: CurveTrajectory) -> float:
    """Max drift of beta_gamma + n1 nu1 + n2 nu2 - mu t along the trajectory.

    Constant along every solution of the reduced ODE family.
    """
    spec = traj.spec
    det = traj.values[:, 0] * traj.derivs[:, 1] - traj.values[:, 1] * traj.derivs[:, 0]
    beta = np.unwrap(np.angle(det))
    combo = beta + spec.n1 * traj.phases[:, 0] + spec.n2 * traj.phases[:, 1] - spec.mu * traj.ts
    return float(np.max(combo) - np.min(combo))


# ---------------------------------------------------------------------------
# period detection and rotation numbers (sphere, mu = 0)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PeriodDetection:
    T: Optional[float]
    degenerate: bool
    returns_used: int = 0


def _im_w(spec: CurveSpec, state) -> float:
    return (state[0] ** (spec.n1 + 1) * state[1] ** (spec.n2 + 1)).imag


def detect_period(traj: CurveTrajectory, *, degenerate_tol: float = 1e-9) -> PeriodDetection:
    """Smallest T > 0 with rho_j(t + T) = rho_j(t), by event detection.

    The event function is Im(g1^(n1+1) g2^(n2+1)), proportional to
    d/dt rho_1^2, which vanishes at t = 0 for real initial data.  Zeros are
    bracketed on the stored grid and bisected to 1e-10; the period is the
    first return to the initial (modulus, derivative-sign) pair, generically
    the second zero.  Constant-modulus solutions get the degenerate flag.
    """
    spec = traj.spec
    if not spec.is_sphere or spec.mu != 0.0:
        raise DomainError("period detection applies to mu=0 sphere trajectories")
    if not spec.real_initial:
        raise DomainError("period detection requires a real initial condition")

    r2 = traj.moduli[:, 0] ** 2
    if float(np.max(r2) - np.min(r2)) < degenerate_tol:
        return PeriodDetection(None, True)

    L = (traj.values[:, 0] ** (spec.n1 + 1) * traj.values[:, 1] ** (spec.n2 + 1)).imag
    pos = traj.ts >= 0.0
    ts, L = traj.ts[pos], L[pos]

    def lprime_sign(t: float) -> float:
        # dL/dt = |W|^2 ((n1+1)/rho1^2 - (n2+1)/rho2^2)
        (v, _) = traj.evaluate(t)
        return (spec.n1 + 1) / abs(v[0]) ** 2 - (spec.n2 + 1) / abs(v[1]) ** 2

    r0 = float(traj.moduli[np.argmin(np.abs(traj.ts)), 0] ** 2)
    sgn0 = math.copysign(1.0, lprime_sign(0.0))

    zeros = []
    for k in range(1, len(ts) - 1):
        if ts[k] <= traj.step:            # skip the seeded zero at t = 0
            continue
        if L[k] == 0.0:
            zeros.append(float(ts[k]))
            continue
        if L[k] * L[k + 1] < 0.0:
            a, b = float(ts[k]), float(ts[k + 1])
            fa = float(_im_w(spec, traj.evaluate(a)[0]))
            for _ in range(200):
                m = 0.5 * (a + b)
                fm = float(_im_w(spec, traj.evaluate(m)[0]))
                if fa * fm <= 0.0:
                    b = m
                else:
                    a, fa = m, fm
                if b - a < 1e-10:
                    break
            zeros.append(0.5 * (a + b))

    for i, z in enumerate(zeros):
        (v, _) = traj.evaluate(z)
        same_value = abs(abs(v[0]) ** 2 - r0) < 1e-7
        same_sign = math.copysign(1.0, lprime_sign(z)) == sgn0
        if same_value and same_sign:
            return PeriodDetection(z, False, returns_used=i + 1)

    raise PeriodDetectionError(
        "no modulus-period return found inside the integrated window; extend t_end"
    )


def _simpson_uniform(f: Callable[[float], float], a: float, b: float, n_panels: int) -> float:
    if n_panels % 2:
        n_panels += 1
    xs = np.linspace(a, b, n_panels + 1)
    ys = np.array([f(x) for x in xs])
    h = (b - a) / n_panels
    return float(h / 3 * (ys[0] + ys[-1] + 4 * np.sum(ys[1:-1:2]) + 2 * np.sum(ys[2:-1:2])))


def rotation_numbers(traj: CurveTrajectory, T: float, spec: CurveSpec) -> tuple[float, float, float]:
    """Normalized rotation integrals over one modulus period.

    rot_j = (K / 2pi) * int_0^T dt / rho_j^2 with K the conserved quantity
    of the mu=0 family; gamma_rot uses 1/(rho_1^2 rho_2^2).  The identity
    gamma_rot = rot1 + rot2 (from rho1^2 + rho2^2 = 1) is enforced to 1e-8.
    """
    if T is None or T <= 0:
        raise DomainError("rotation_numbers needs a positive period T")
    K = spec.init[0].real ** (spec.n1 + 1) * spec.init[1].real ** (spec.n2 + 1)
    n_panels = max(64, 2 * math.ceil(T / traj.step))

    def inv_r2(j):
        def f(t):
            (v, _) = traj.evaluate(t)
            return 1.0 / abs(v[j]) ** 2
        return f

    def inv_r2r2(t):
        (v, _) = traj.evaluate(t)
        return 1.0 / (abs(v[0]) ** 2 * abs(v[1]) ** 2)

    rot1 = K / (2 * math.pi) * _simpson_uniform(inv_r2(0), 0.0, T, n_panels)
    rot2 = K / (2 * math.pi) * _simpson_uniform(inv_r2(1), 0.0, T, n_panels)
    gamma_rot = K / (2 * math.pi) * _simpson_uniform(inv_r2r2, 0.0, T, n_panels)
    if abs(gamma_rot - rot1 - rot2) > 1e-8:
        raise NumericalQualityError(
            f"rotation-number consistency gamma_rot - rot1 - rot2 = "
            f"{gamma_rot - rot1 - rot2:.3e} exceeds 1e-8"
        )
    return rot1, rot2, gamma_rot


# ---------------------------------------------------------------------------
# rationality certificates
# ---------------------------------------------------------------------------

def rational_certificate(x: float, q_max: int = 64, tol: float = 1e-7) -> Optional[tuple[int, int]]:
    """First continued-fraction convergent p/q of x with q <= q_max and |x - p/q| <= tol.

    A decidable surrogate for rationality: reports are 'certified rational
    within tolerance' or 'no certificate found', never 'irrational'.
    """
    if q_max < 1:
        raise DomainError("q_max must be >= 1")
    if tol <= 0:
        raise DomainError("tol must be positive")
    if not math.isfinite(x):
        raise DomainError("x must be finite")
    h_prev, h_pprev = 1, 0
    k_prev, k_pprev = 0, 1
    y = x
    for _ in range(80):
        a = math.floor(y)
        h = a * h_prev + h_pprev
        k = a * k_prev + k_pprev
        if k > q_max:
            return None
        if abs(x - h / k) <= tol:
            g = math.gcd(abs(h), k) or 1
            return (h // g, k // g)
        h_pprev, h_prev = h_prev, h
        k_pprev, k_prev = k_prev, k
        frac = y - a
        if frac < 1e-15:
            return None
        y = 1.0 / frac
    return None


@dataclass
class PeriodReport:
    """Periods, rotation numbers, and rationality certificates of one curve."""

    T: Optional[float]
    degenerate: bool
    rot1: float
    rot2: float
    gamma_rot: float
    rationals: dict
    closed_curve: bool
    projected_periodic: bool

    def to_dict(self) -> dict:
        return {
            "T": self.T,
            "degenerate": self.degenerate,
            "rot1": self.rot1,
            "rot2": self.rot2,
            "gamma_rot": self.gamma_rot,
            "rationals": {k: (list(v) if v is not None else None) for k, v in self.rationals.items()},
            "closed_curve": self.closed_curve,
            "projected_periodic": self.projected_periodic,
        }


def closedness_report(traj: CurveTrajectory, q_max: int = 64, tol: float = 1e-7) -> PeriodReport:
    """Assemble the period / rotation-number / certificate report for a mu=0 sphere curve.

    In the degenerate (constant-modulus) case the rotation data comes from
    the closed-form phase rates over one projected period instead of T.
    """
    spec = traj.spec
    det = detect_period(traj)
    if det.degenerate:
        # phase rates are constant; normalize over the projected period A
        k0 = int(np.argmin(np.abs(traj.ts)))
        w1 = float((traj.derivs[k0, 0] / traj.values[k0, 0]).imag)
        w2 = float((traj.derivs[k0, 1] / traj.values[k0, 1]).imag)
        total = w1 - w2
        rot1, rot2 = w1 / total, -w2 / total
        gamma_rot = rot1 + rot2
        T = None
    else:
        T = det.T
        rot1, rot2, gamma_rot = rotation_numbers(traj, T, spec)
    certs = {
        "rot1": rational_certificate(rot1, q_max, tol),
        "rot2": rational_certificate(rot2, q_max, tol),
        "gamma_rot": rational_certificate(gamma_rot, q_max, tol),
    }
    return PeriodReport(
        T=T,
        degenerate=det.degenerate,
        rot1=rot1,
        rot2=rot2,
        gamma_rot=gamma_rot,
        rationals=certs,
        closed_curve=certs["rot1"] is not None and certs["rot2"] is not None,
        projected_periodic=certs["gamma_rot"] is not None,
    )


# ---------------------------------------------------------------------------
# quadrature parametrization of the AdS mu=0 family
# ---------------------------------------------------------------------------

def _radial_polynomial(varrho: float, n1: int, n2: int) -> tuple[np.ndarray, float]:
    """Exact coefficients of G(y) = (P(y) - P(0))/y, P(y) = (y+sh^2)^(n1+1) (y+ch^2)^(n2+1).

    All coefficients are nonnegative, so evaluating G avoids the cancellation
    of forming P(y) - P(0) directly.  Returns (coeffs ascending, K) with
    K = sh^(n1+1) ch^(n2+1) the conserved quantity.
    """
    sh2, ch2 = math.sinh(varrho) ** 2, math.cosh(varrho) ** 2
    pa = np.array([math.comb(n1 + 1, k) * sh2 ** (n1 + 1 - k) for k in range(n1 + 2)])
    pb = np.array([math.comb(n2 + 1, k) * ch2 ** (n2 + 1 - k) for k in range(n2 + 2)])
    full = np.convolve(pa, pb)
    K = math.sinh(varrho) ** (n1 + 1) * math.cosh(varrho) ** (n2 + 1)
    return full[1:].copy(), K


def adaptive_simpson(f: Callable[[float], float], a: float, b: float,
                     tol: float, max_depth: int = 60) -> float:
    """Classic recursive adaptive Simpson with the 1/15 error estimate."""
    fa, fb = f(a), f(b)
    m = 0.5 * (a + b)
    fm = f(m)
    whole = (b - a) / 6 * (fa + 4 * fm + fb)

    def rec(a, fa, m, fm, b, fb, whole, tol, depth):
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = (m - a) / 6 * (fa + 4 * flm + fm)
        right = (b - m) / 6 * (fm + 4 * frm + fb)
        if depth >= max_depth:
            raise QuadratureError("adaptive Simpson refinement did not converge")
        if abs(left + right - whole) <= 15 * tol:
            return left + right + (left + right - whole) / 15
        return (rec(a, fa, lm, flm, m, fm, left, tol / 2, depth + 1)
                + rec(m, fm, rm, frm, b, fb, right, tol / 2, depth + 1))

    if a == b:
        return 0.0
    return rec(a, fa, m, fm, b, fb, whole, tol, 0)


def theta_quadrature(varrho: float, n1: int, n2: int, s: float,
                     tol: float = 1e-10) -> tuple[float, float]:
    """Phase functions (theta_1(s), theta_2(s)) of the AdS mu=0 family.

    theta_j(s) = int_0^s K dx / ((x^2 + q_j) sqrt(G(x^2))) with q_1 = sinh^2,
    q_2 = cosh^2; the signed square-root branch makes the integrand even and
    smooth, hence theta_j odd.  Adaptive Simpson to absolute tolerance tol.
    """
    if varrho <= 0.0:
        raise DomainError("rho must be positive")
    coeffs, K = _radial_polynomial(varrho, n1, n2)
    sh2, ch2 = math.sinh(varrho) ** 2, math.cosh(varrho) ** 2

    def make(q):
        def f(x):
            y = x * x
            return K / ((y + q) * math.sqrt(np.polynomial.polynomial.polyval(y, coeffs)))
        return f

    if s == 0.0:
        return 0.0, 0.0
    sgn, hi = math.copysign(1.0, s), abs(s)
    th1 = sgn * adaptive_simpson(make(sh2), 0.0, hi, tol)
    th2 = sgn * adaptive_simpson(make(ch2), 0.0, hi, tol)
    return th1, th2


class RadialProfile:
    """Cached radial data of the AdS mu=0 family at a fixed varrho.

    Provides theta_j and derivatives, the parameter map t(s) to the gauged
    ODE time, and the induced arclength; shared by the quadrature-built
    immersion and the ODE cross-checks.
    """

    def __init__(self, varrho: float, n1: int, n2: int, tol: float = 1e-10):
        self.varrho, self.n1, self.n2, self.tol = varrho, n1, n2, tol
        self.coeffs, self.K = _radial_polynomial(varrho, n1, n2)
        self.dcoeffs = np.polynomial.polynomial.polyder(self.coeffs) if len(self.coeffs) > 1 else np.zeros(1)
        self.sh2, self.ch2 = math.sinh(varrho) ** 2, math.cosh(varrho) ** 2
        self._theta_cache: dict[float, tuple[float, float]] = {}
        self._time_cache: dict[float, float] = {}

    def G(self, y: float) -> float:
        return float(np.polynomial.polynomial.polyval(y, self.coeffs))

    def dG(self, y: float) -> float:
        return float(np.polynomial.polynomial.polyval(y, self.dcoeffs))

    def theta(self, s: float) -> tuple[float, float]:
        got = self._theta_cache.get(s)
        if got is None:
            got = theta_quadrature(self.varrho, self.n1, self.n2, s, self.tol)
            self._theta_cache[s] = got
        return got

    def theta_rate(self, s: float, j: int) -> float:
        q = self.sh2 if j == 0 else self.ch2
        y = s * s
        return self.K / ((y + q) * math.sqrt(self.G(y)))

    def theta_rate_d(self, s: float, j: int) -> float:
        q = self.sh2 if j == 0 else self.ch2
        y = s * s
        G, dG = self.G(y), self.dG(y)
        return -self.K * s * (2 * G + (y + q) * dG) / ((y + q) ** 2 * G**1.5)

    def time_of(self, s: float) -> float:
        """Gauged ODE time reaching the point at radial parameter s (odd in s)."""
        got = self._time_cache.get(s)
        if got is None:
            if s == 0.0:
                got = 0.0
            else:
                got = math.copysign(1.0, s) * adaptive_simpson(
                    lambda x: 1.0 / math.sqrt(self.G(x * x)), 0.0, abs(s), min(self.tol, 1e-12)
                )
            self._time_cache[s] = got
        return got

    def arclength_of(self, s: float) -> float:
        """Induced-metric arclength from the anchor s=0 (odd in s)."""
        if s == 0.0:
            return 0.0

        def f(x):
            y = x * x
            r = (y + self.sh2) ** (self.n1 / 2) * (y + self.ch2) ** (self.n2 / 2)
            return r / math.sqrt(self.G(y))

        return math.copysign(1.0, s) * adaptive_simpson(f, 0.0, abs(s), min(self.tol, 1e-12))

    def value(self, s: float) -> tuple[complex, complex]:
        r1, r2 = math.sqrt(s * s + self.sh2), math.sqrt(s * s + self.ch2)
        th1, th2 = self.theta(s)
        return r1 * cmath.exp(1j * th1), r2 * cmath.exp(1j * th2)
