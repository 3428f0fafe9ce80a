"""Assembly of Legendrian immersions, their Hopf-projected images, and cones.

Building blocks (totally geodesic spheres and hyperbolic spaces, points,
and recursively nested products) are combined with a Legendre warping curve
into the warped-product Legendrian immersion

    phi(s, p, q) = (gamma_1(s) psi_1(p), gamma_2(s) psi_2(q)),

which is again usable as a building block.  Projected variants carry
quadric representatives of maps into CP^n / CH^n and never fix a phase
gauge; cones scale a spherical link linearly.  All evaluators are pure and
immutable after construction.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import legendre_curves as lc
from .ambient import (
    Signature,
    SignatureKind,
    ads_signature,
    complex_volume,
    herm,
    riemannian,
    sphere_signature,
)
from .errors import (
    DimensionMismatch,
    DomainError,
    FrameError,
    SingularPointError,
)

SINGULAR_MODULUS = 1e-4
MU_ZERO_TOL = 1e-12


def is_zero_mu(curve) -> bool:
    """Whether the curve's family parameter is (numerically) zero."""
    return curve.mu is not None and abs(curve.mu) <= MU_ZERO_TOL


@dataclass
class Jet2:
    """Value with first and second derivatives over chart coordinates."""

    value: np.ndarray                # (m,) complex
    first: np.ndarray                # (d, m) complex
    second: np.ndarray               # (d, d, m) complex


def orthonormal_frame(tangents: np.ndarray, sig: Signature) -> np.ndarray:
    """Gram-Schmidt in row order under the ambient real metric.

    The induced metric on every immersion handled here is positive
    definite, so plain modified Gram-Schmidt (run twice) suffices.
    """
    basis = np.array(tangents, dtype=complex)
    d = basis.shape[0]
    for _ in range(2):
        for i in range(d):
            for j in range(i):
                basis[i] -= riemannian(basis[i], basis[j], sig) * basis[j]
            nrm2 = riemannian(basis[i], basis[i], sig)
            if nrm2 <= 1e-24:
                raise FrameError("degenerate tangent frame")
            basis[i] /= math.sqrt(nrm2)
    return basis


# ---------------------------------------------------------------------------
# building blocks
# ---------------------------------------------------------------------------

class LegendrianBlock:
    """A pluggable Legendrian immersion psi: N^n -> S^(2n+1) or H_1^(2n+1).

    Subclasses provide analytic 2-jets over their chart atlas.  Flags record
    the properties the construction claims; the verification engine checks
    them independently.
    """

    dim: int
    signature: Signature
    chart_count: int = 1
    is_minimal_claimed: bool = False
    is_cminimal_claimed: bool = False

    @property
    def level(self) -> int:
        return self.signature.quadric_level

    def jet(self, u: np.ndarray, chart: int = 0) -> Jet2:
        raise NotImplementedError

    def value(self, u: np.ndarray, chart: int = 0) -> np.ndarray:
        return self.jet(u, chart).value

    def chart_contains(self, u: np.ndarray, chart: int = 0, margin: float = 0.0) -> bool:
        return True

    def beta_offset(self, chart: int = 0) -> Optional[float]:
        """Constant Legendrian angle on the chart, when the block has one."""
        return None

    def _frame_angle(self, u: np.ndarray, chart: int = 0) -> float:
        if self.dim == 0:
            j = self.jet(u, chart)
            return cmath.phase(complex(j.value[0]))
        j = self.jet(u, chart)
        frame = orthonormal_frame(j.first, self.signature)
        return cmath.phase(complex_volume(j.value, list(frame), self.signature))

    def immersion(self, chart: int = 0) -> "GeometricImmersion":
        return GeometricImmersion(
            kind=ImmersionKind.BLOCK,
            signature=self.signature,
            level=self.level,
            chart_dims=(self.dim,),
            blocks=(self,),
            charts=(chart,),
        )


class PointBlock(LegendrianBlock):
    """The 0-dimensional block psi = 1 in C^1 (unit circle of either signature)."""

    def __init__(self, kind: str = "sphere"):
        self.dim = 0
        self.signature = sphere_signature(1) if kind == "sphere" else ads_signature(1)
        self.chart_count = 1
        self.is_minimal_claimed = True
        self.is_cminimal_claimed = True

    def jet(self, u: np.ndarray, chart: int = 0) -> Jet2:
        return Jet2(
            np.array([1.0 + 0.0j]),
            np.zeros((0, 1), dtype=complex),
            np.zeros((0, 0, 1), dtype=complex),
        )

    def beta_offset(self, chart: int = 0) -> Optional[float]:
        return 0.0


class GeodesicSphereBlock(LegendrianBlock):
    """Totally geodesic S^n in S^(2n+1): psi(x) = x with x a real unit vector.

    Atlas: 2(n+1) orthographic hemisphere charts indexed by (axis, sign);
    chart c covers {sign * x_axis > 0} with axis = c // 2, sign = +1 for
    even c.  Chart coordinates are the remaining n ambient coordinates.
    """

    def __init__(self, n: int):
        if n < 1:
            raise DomainError("geodesic sphere block needs n >= 1")
        self.dim = n
        self.signature = sphere_signature(n + 1)
        self.chart_count = 2 * (n + 1)
        self.is_minimal_claimed = True
        self.is_cminimal_claimed = True
        self._offsets: dict[int, float] = {}

    def _chart(self, chart: int) -> tuple[int, float]:
        if not 0 <= chart < self.chart_count:
            raise DomainError(f"chart index {chart} out of range")
        return chart // 2, 1.0 if chart % 2 == 0 else -1.0

    def chart_contains(self, u, chart: int = 0, margin: float = 0.0) -> bool:
        u = np.asarray(u, dtype=float)
        return float(u @ u) < (1.0 - margin) ** 2

    def jet(self, u, chart: int = 0) -> Jet2:
        axis, sign = self._chart(chart)
        u = np.asarray(u, dtype=float)
        if u.shape != (self.dim,):
            raise DimensionMismatch(f"chart point must have length {self.dim}")
        r2 = float(u @ u)
        if r2 >= 1.0:
            raise DomainError("chart point outside the open unit ball")
        w = math.sqrt(1.0 - r2)
        others = [k for k in range(self.dim + 1) if k != axis]
        val = np.zeros(self.dim + 1, dtype=complex)
        val[others] = u
        val[axis] = sign * w
        first = np.zeros((self.dim, self.dim + 1), dtype=complex)
        second = np.zeros((self.dim, self.dim, self.dim + 1), dtype=complex)
        for i in range(self.dim):
            first[i, others[i]] = 1.0
            first[i, axis] = -sign * u[i] / w
        for i in range(self.dim):
            for j in range(self.dim):
                second[i, j, axis] = -sign * ((1.0 if i == j else 0.0) / w + u[i] * u[j] / w**3)
        return Jet2(val, first, second)

    def beta_offset(self, chart: int = 0) -> Optional[float]:
        if chart not in self._offsets:
            beta = self._frame_angle(np.zeros(self.dim), chart)
            # real orthogonal determinant: snap to {0, pi}
            self._offsets[chart] = 0.0 if abs(beta) < 1e-9 else math.pi
        return self._offsets[chart]


class GeodesicHyperbolicBlock(LegendrianBlock):
    """Totally geodesic RH^n in H_1^(2n+1): the graph y_{n+1} = sqrt(1 + |y|^2)."""

    def __init__(self, n: int):
        if n < 1:
            raise DomainError("geodesic hyperbolic block needs n >= 1")
        self.dim = n
        self.signature = ads_signature(n + 1)
        self.chart_count = 1
        self.is_minimal_claimed = True
        self.is_cminimal_claimed = True
        self._offset: Optional[float] = None

    def jet(self, u, chart: int = 0) -> Jet2:
        u = np.asarray(u, dtype=float)
        if u.shape != (self.dim,):
            raise DimensionMismatch(f"chart point must have length {self.dim}")
        w = math.sqrt(1.0 + float(u @ u))
        val = np.zeros(self.dim + 1, dtype=complex)
        val[: self.dim] = u
        val[self.dim] = w
        first = np.zeros((self.dim, self.dim + 1), dtype=complex)
        second = np.zeros((self.dim, self.dim, self.dim + 1), dtype=complex)
        for i in range(self.dim):
            first[i, i] = 1.0
            first[i, self.dim] = u[i] / w
        for i in range(self.dim):
            for j in range(self.dim):
                second[i, j, self.dim] = (1.0 if i == j else 0.0) / w - u[i] * u[j] / w**3
        return Jet2(val, first, second)

    def beta_offset(self, chart: int = 0) -> Optional[float]:
        if self._offset is None:
            beta = self._frame_angle(np.zeros(self.dim))
            # real frame: the angle is a multiple of pi
            self._offset = round(beta / math.pi) * math.pi % (2 * math.pi)
        return self._offset


def geodesic_sphere_block(n: int) -> GeodesicSphereBlock:
    return GeodesicSphereBlock(n)


def geodesic_hyperbolic_block(n: int) -> GeodesicHyperbolicBlock:
    return GeodesicHyperbolicBlock(n)


def point_block(kind: str = "sphere") -> PointBlock:
    return PointBlock(kind)


# ---------------------------------------------------------------------------
# curve factors
# ---------------------------------------------------------------------------

class CurveFactor:
    """The warping curve of a product: value, 2-jet, moduli and phases.

    `is_solution` marks members of the reduced ODE family (in any
    parametrization); `gauge_normalized` marks the parametrization with
    |gamma'| = rho1^n1 rho2^n2, in which the angle evolves affinely.
    """

    signature: Signature
    is_solution: bool = False
    gauge_normalized: bool = False
    mu: Optional[float] = None
    domain: tuple[float, float] = (-math.inf, math.inf)

    @property
    def level(self) -> int:
        return self.signature.quadric_level

    def value(self, s: float) -> np.ndarray:
        raise NotImplementedError

    def d1(self, s: float) -> np.ndarray:
        raise NotImplementedError

    def d2(self, s: float) -> np.ndarray:
        raise NotImplementedError

    def moduli_phases(self, s: float) -> tuple[float, float, float, float]:
        raise NotImplementedError

    def value_batch(self, S: np.ndarray) -> np.ndarray:
        return np.array([self.value(float(s)) for s in np.asarray(S)])

    def speed(self, s: float) -> float:
        d = self.d1(s)
        s2 = abs(d[0]) ** 2
        s2 = s2 + abs(d[1]) ** 2 if self.signature.kind is SignatureKind.DEFINITE else s2 - abs(d[1]) ** 2
        if s2 <= 0.0:
            raise SingularPointError("curve factor has nonpositive induced speed")
        return math.sqrt(s2)


class ModulusPhaseCurve(CurveFactor):
    """Curve given by smooth modulus and phase functions r_j(s), nu_j(s)."""

    def __init__(self, signature, r, dr, ddr, nu, dnu, ddnu, *,
                 is_solution=False, gauge_normalized=False, mu=None,
                 domain=(-math.inf, math.inf)):
        self.signature = signature
        self._r, self._dr, self._ddr = r, dr, ddr
        self._nu, self._dnu, self._ddnu = nu, dnu, ddnu
        self.is_solution = is_solution
        self.gauge_normalized = gauge_normalized
        self.mu = mu
        self.domain = domain

    def value(self, s: float) -> np.ndarray:
        return np.array([self._r[j](s) * cmath.exp(1j * self._nu[j](s)) for j in (0, 1)])

    def d1(self, s: float) -> np.ndarray:
        out = []
        for j in (0, 1):
            r, dr, dnu = self._r[j](s), self._dr[j](s), self._dnu[j](s)
            out.append((dr + 1j * r * dnu) * cmath.exp(1j * self._nu[j](s)))
        return np.array(out)

    def d2(self, s: float) -> np.ndarray:
        out = []
        for j in (0, 1):
            r, dr, ddr = self._r[j](s), self._dr[j](s), self._ddr[j](s)
            dnu, ddnu = self._dnu[j](s), self._ddnu[j](s)
            amp = ddr + 2j * dr * dnu + 1j * r * ddnu - r * dnu * dnu
            out.append(amp * cmath.exp(1j * self._nu[j](s)))
        return np.array(out)

    def moduli_phases(self, s: float) -> tuple[float, float, float, float]:
        return self._r[0](s), self._r[1](s), self._nu[0](s), self._nu[1](s)


def _const(x: float) -> Callable[[float], float]:
    return lambda s: x


class PhaseRateCurve(ModulusPhaseCurve):
    """Constant moduli, linear phases: gamma(s) = (m1 e^{i w1 s}, m2 e^{i w2 s})."""

    def __init__(self, signature, moduli, rates, **kw):
        m1, m2 = moduli
        w1, w2 = rates
        self.moduli_const = (m1, m2)
        self.rates = (w1, w2)
        super().__init__(
            signature,
            r=(_const(m1), _const(m2)),
            dr=(_const(0.0), _const(0.0)),
            ddr=(_const(0.0), _const(0.0)),
            nu=(lambda s: w1 * s, lambda s: w2 * s),
            dnu=(_const(w1), _const(w2)),
            ddnu=(_const(0.0), _const(0.0)),
            **kw,
        )

    def value_batch(self, S: np.ndarray) -> np.ndarray:
        S = np.asarray(S, dtype=float)
        m1, m2 = self.moduli_const
        w1, w2 = self.rates
        return np.column_stack([m1 * np.exp(1j * w1 * S), m2 * np.exp(1j * w2 * S)])


def gamma_delta_curve(delta: float, n1: int, n2: int) -> PhaseRateCurve:
    """The explicit constant-modulus sphere solution as a curve factor."""
    w1, w2 = lc.gamma_delta_rates(delta, n1, n2)
    return PhaseRateCurve(
        sphere_signature(2),
        (math.cos(delta), math.sin(delta)),
        (w1, w2),
        is_solution=True,
        gauge_normalized=True,
        mu=lc.gamma_delta_mu(delta, n1, n2),
    )


def alpha_rho_curve(rho: float, n1: int, n2: int) -> PhaseRateCurve:
    """The explicit constant-modulus AdS solution as a curve factor."""
    w1, w2 = lc.alpha_rho_rates(rho, n1, n2)
    return PhaseRateCurve(
        ads_signature(2),
        (math.sinh(rho), math.cosh(rho)),
        (w1, w2),
        is_solution=True,
        gauge_normalized=True,
        mu=lc.alpha_rho_mu(rho, n1, n2),
    )


def nonsolution_control_curve() -> ModulusPhaseCurve:
    """The documented C-minimality negative control.

    gamma(s) = (cos s e^{i nu1}, sin s e^{i nu2}) with nu1 = (2s - sin 2s)/4
    and nu2 = -(2s + sin 2s)/4 is a Legendre curve (rho1^2 nu1' + rho2^2
    nu2' = 0) whose angle combination is not affine in the gauge parameter,
    so no product built on it is C-minimal.
    """
    return ModulusPhaseCurve(
        sphere_signature(2),
        r=(math.cos, math.sin),
        dr=(lambda s: -math.sin(s), math.cos),
        ddr=(lambda s: -math.cos(s), lambda s: -math.sin(s)),
        nu=(lambda s: (2 * s - math.sin(2 * s)) / 4, lambda s: -(2 * s + math.sin(2 * s)) / 4),
        dnu=(lambda s: math.sin(s) ** 2, lambda s: -(math.cos(s) ** 2)),
        ddnu=(lambda s: math.sin(2 * s), lambda s: math.sin(2 * s)),
        is_solution=False,
        gauge_normalized=False,
        mu=None,
        domain=(0.05, math.pi / 2 - 0.05),
    )


class QuadratureCurve(ModulusPhaseCurve):
    """Radially parametrized AdS mu=0 solution (embedded, noncompact)."""

    def __init__(self, varrho: float, n1: int, n2: int):
        prof = lc.RadialProfile(varrho, n1, n2)
        self.profile = prof
        sh2, ch2 = prof.sh2, prof.ch2

        def r(q):
            return lambda s: math.sqrt(s * s + q)

        def dr(q):
            return lambda s: s / math.sqrt(s * s + q)

        def ddr(q):
            return lambda s: q / (s * s + q) ** 1.5

        super().__init__(
            ads_signature(2),
            r=(r(sh2), r(ch2)),
            dr=(dr(sh2), dr(ch2)),
            ddr=(ddr(sh2), ddr(ch2)),
            nu=(lambda s: prof.theta(s)[0], lambda s: prof.theta(s)[1]),
            dnu=(lambda s: prof.theta_rate(s, 0), lambda s: prof.theta_rate(s, 1)),
            ddnu=(lambda s: prof.theta_rate_d(s, 0), lambda s: prof.theta_rate_d(s, 1)),
            is_solution=True,
            gauge_normalized=False,
            mu=0.0,
        )
        self.varrho = varrho


class TrajectoryCurve(CurveFactor):
    """A numerically integrated trajectory used as the warping factor."""

    def __init__(self, traj: lc.CurveTrajectory):
        self.traj = traj
        self.signature = traj.spec.ambient
        self.is_solution = True
        self.gauge_normalized = True
        self.mu = traj.spec.mu
        self.domain = (float(traj.ts[0]), float(traj.ts[-1]))

    def value(self, s: float) -> np.ndarray:
        (v, _) = self.traj.evaluate(s)
        return np.array(v)

    def d1(self, s: float) -> np.ndarray:
        (_, d) = self.traj.evaluate(s)
        return np.array(d)

    def d2(self, s: float) -> np.ndarray:
        (v, d) = self.traj.evaluate(s)
        return np.array(lc.ode_rhs_d2(self.traj.spec, s, v, d))

    def moduli_phases(self, s: float) -> tuple[float, float, float, float]:
        (v, _) = self.traj.evaluate(s)
        return abs(v[0]), abs(v[1]), self.traj.phase_at(s, 0), self.traj.phase_at(s, 1)


# ---------------------------------------------------------------------------
# geometric immersions
# ---------------------------------------------------------------------------

class ImmersionKind(enum.Enum):
    PRODUCT_SPHERE = "ProductSphere"
    PRODUCT_ADS = "ProductAdS"
    CONE = "Cone"
    PROJECTED_CP = "ProjectedCP"
    PROJECTED_CH = "ProjectedCH"
    BLOCK = "Block"


_PRODUCT_LIKE = {
    ImmersionKind.PRODUCT_SPHERE,
    ImmersionKind.PRODUCT_ADS,
    ImmersionKind.PROJECTED_CP,
    ImmersionKind.PROJECTED_CH,
}


@dataclass
class GeometricImmersion:
    """A chart-parametrized immersion supporting 2-jet evaluation.

    Product-like kinds have chart (s, u_1, u_2) with u_i block chart
    coordinates; cones prepend the radial coordinate to the link chart.
    Projected kinds return quadric representatives of the Hopf classes.
    """

    kind: ImmersionKind
    signature: Signature
    level: Optional[int]
    chart_dims: tuple[int, ...]
    curve: Optional[CurveFactor] = None
    blocks: tuple[LegendrianBlock, ...] = ()
    link: Optional["GeometricImmersion"] = None
    charts: tuple[int, ...] = ()
    metadata: dict = field(default_factory=dict)

    @property
    def chart_dim(self) -> int:
        return int(sum(self.chart_dims))

    @property
    def is_product_like(self) -> bool:
        return self.kind in _PRODUCT_LIKE

    def _split(self, u: np.ndarray) -> tuple[float, np.ndarray, np.ndarray]:
        n1 = self.blocks[0].dim
        return float(u[0]), np.asarray(u[1 : 1 + n1], dtype=float), np.asarray(u[1 + n1 :], dtype=float)

    def value(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        if u.shape != (self.chart_dim,):
            raise DimensionMismatch(f"chart point must have length {self.chart_dim}")
        if self.kind is ImmersionKind.BLOCK:
            return self.blocks[0].value(u, self.charts[0])
        if self.kind is ImmersionKind.CONE:
            return u[0] * self.link.value(u[1:])
        s, u1, u2 = self._split(u)
        g = self.curve.value(s)
        v1 = self.blocks[0].value(u1, self.charts[0])
        v2 = self.blocks[1].value(u2, self.charts[1])
        return np.concatenate([g[0] * v1, g[1] * v2])

    # -- regularity -------------------------------------------------------

    def check_regular(self, u, margin: float = SINGULAR_MODULUS) -> None:
        u = np.asarray(u, dtype=float)
        if self.kind is ImmersionKind.BLOCK:
            if not self.blocks[0].chart_contains(u, self.charts[0], margin=1e-3):
                raise SingularPointError("chart point too close to the chart boundary", factor="block")
            return
        if self.kind is ImmersionKind.CONE:
            if abs(u[0]) <= margin:
                raise SingularPointError(
                    f"cone radius |s| = {abs(u[0]):.2e} inside the singular margin", factor="cone_radius"
                )
            self.link.check_regular(u[1:], margin)
            return
        s, u1, u2 = self._split(u)
        lo, hi = self.curve.domain
        pad = 5e-3 if math.isfinite(hi - lo) else 0.0
        if not lo + pad <= s <= hi - pad:
            raise SingularPointError(f"curve parameter {s} outside the stored domain", factor="curve")
        g = self.curve.value(s)
        for j, name in ((0, "gamma_1"), (1, "gamma_2")):
            if abs(g[j]) <= margin:
                raise SingularPointError(
                    f"warping modulus |{name}| = {abs(g[j]):.2e} inside the singular margin",
                    factor=name,
                )
        for i, (blk, uu) in enumerate(((self.blocks[0], u1), (self.blocks[1], u2))):
            if not blk.chart_contains(uu, self.charts[i], margin=1e-3):
                raise SingularPointError("block chart point too close to its boundary", factor=f"block_{i+1}")

    # -- jets ---------------------------------------------------------------

    def jet(self, u, h_first: float = 1e-4, h_second: float = 1e-3) -> Jet2:
        return evaluate_jet(self, u, h_first, h_second)

    # -- raw evaluation (geodesic/point blocks only) -------------------------

    @property
    def raw_capable(self) -> bool:
        return self.is_product_like and all(
            isinstance(b, (GeodesicSphereBlock, GeodesicHyperbolicBlock, PointBlock)) for b in self.blocks
        )

    def value_raw(self, s: float, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Evaluate from raw factor points (unit-sphere / hyperboloid vectors)."""
        if not self.raw_capable:
            raise DomainError("raw evaluation needs geodesic or point blocks")
        g = self.curve.value(s)
        return np.concatenate([g[0] * np.asarray(x, dtype=complex), g[1] * np.asarray(y, dtype=complex)])

    def value_raw_batch(self, S, X, Y) -> np.ndarray:
        g = self.curve.value_batch(np.asarray(S, dtype=float))
        return np.hstack([g[:, :1] * np.asarray(X, dtype=complex), g[:, 1:2] * np.asarray(Y, dtype=complex)])

    # -- reuse as a block -----------------------------------------------------

    def as_block(self) -> "ProductBlock":
        if self.kind not in (ImmersionKind.PRODUCT_SPHERE, ImmersionKind.PRODUCT_ADS):
            raise DomainError("only product immersions can be re-wrapped as blocks")
        return ProductBlock(self)

    def phase_shifted(self, theta: float) -> "GeometricImmersion":
        """Post-multiplied copy e^{i theta} phi; the Hopf-lift gauge freedom."""
        return _PhaseShifted(self, theta)


class _PhaseShifted(GeometricImmersion):
    def __init__(self, base: GeometricImmersion, theta: float):
        super().__init__(
            kind=base.kind,
            signature=base.signature,
            level=base.level,
            chart_dims=base.chart_dims,
            curve=base.curve,
            blocks=base.blocks,
            link=base.link,
            charts=base.charts,
            metadata=dict(base.metadata),
        )
        self._base = base
        self._factor = cmath.exp(1j * theta)

    def value(self, u) -> np.ndarray:
        return self._factor * self._base.value(u)

    def check_regular(self, u, margin: float = SINGULAR_MODULUS) -> None:
        self._base.check_regular(u, margin)

    def jet(self, u, h_first: float = 1e-4, h_second: float = 1e-3) -> Jet2:
        # the analytic shortcuts of evaluate_jet bypass the wrapper; use pure FD
        self.check_regular(u)
        return _fd_jet(self.value, np.asarray(u, dtype=float), self.chart_dim,
                       self.signature.dim_complex, h_first, h_second)


class ProductBlock(LegendrianBlock):
    """A product immersion re-wrapped as a building block (recursive nesting)."""

    def __init__(self, product: GeometricImmersion):
        self.product = product
        self.dim = product.chart_dim
        self.signature = product.signature
        self.chart_count = 1
        curve = product.curve
        b1, b2 = product.blocks
        solution = curve.is_solution
        self.is_cminimal_claimed = solution and b1.is_cminimal_claimed and b2.is_cminimal_claimed
        minimal_curve = solution and is_zero_mu(curve)
        self.is_minimal_claimed = minimal_curve and b1.is_minimal_claimed and b2.is_minimal_claimed
        self._offset: Optional[float] = None

    def chart_contains(self, u, chart: int = 0, margin: float = 0.0) -> bool:
        try:
            self.product.check_regular(u)
        except SingularPointError:
            return False
        return True

    def jet(self, u, chart: int = 0) -> Jet2:
        return analytic_product_jet(self.product, u)

    def beta_offset(self, chart: int = 0) -> Optional[float]:
        prod = self.product
        o1 = prod.blocks[0].beta_offset(prod.charts[0])
        o2 = prod.blocks[1].beta_offset(prod.charts[1])
        if not (prod.curve.is_solution and is_zero_mu(prod.curve)) or o1 is None or o2 is None:
            return None
        if self._offset is None:
            s0 = 0.0 if prod.curve.domain[0] <= 0.0 <= prod.curve.domain[1] else sum(prod.curve.domain) / 2
            g, d = prod.curve.value(s0), prod.curve.d1(s0)
            combo = lc.legendre_angle(g, d, prod.curve.signature)
            r1, r2, nu1, nu2 = prod.curve.moduli_phases(s0)
            n1, n2 = prod.blocks[0].dim, prod.blocks[1].dim
            self._offset = (n1 * math.pi + combo + n1 * nu1 + n2 * nu2 + o1 + o2) % (2 * math.pi)
        return self._offset


# ---------------------------------------------------------------------------
# jets of assembled immersions
# ---------------------------------------------------------------------------

def analytic_product_jet(imm: GeometricImmersion, u) -> Jet2:
    """Closed-form 2-jet of a product from its curve and block jets."""
    if not imm.is_product_like:
        raise DomainError("analytic product jets exist for product-like kinds only")
    u = np.asarray(u, dtype=float)
    s, u1, u2 = imm._split(u)
    g, dg, ddg = imm.curve.value(s), imm.curve.d1(s), imm.curve.d2(s)
    j1 = imm.blocks[0].jet(u1, imm.charts[0])
    j2 = imm.blocks[1].jet(u2, imm.charts[1])
    n1, n2 = imm.blocks[0].dim, imm.blocks[1].dim
    m1, m2 = n1 + 1, imm.signature.dim_complex - n1 - 1
    d = 1 + n1 + n2
    m = imm.signature.dim_complex

    value = np.concatenate([g[0] * j1.value, g[1] * j2.value])
    first = np.zeros((d, m), dtype=complex)
    second = np.zeros((d, d, m), dtype=complex)
    first[0, :m1], first[0, m1:] = dg[0] * j1.value, dg[1] * j2.value
    second[0, 0, :m1], second[0, 0, m1:] = ddg[0] * j1.value, ddg[1] * j2.value
    for i in range(n1):
        first[1 + i, :m1] = g[0] * j1.first[i]
        second[0, 1 + i, :m1] = second[1 + i, 0, :m1] = dg[0] * j1.first[i]
        for k in range(n1):
            second[1 + i, 1 + k, :m1] = g[0] * j1.second[i, k]
    for i in range(n2):
        first[1 + n1 + i, m1:] = g[1] * j2.first[i]
        second[0, 1 + n1 + i, m1:] = second[1 + n1 + i, 0, m1:] = dg[1] * j2.first[i]
        for k in range(n2):
            second[1 + n1 + i, 1 + n1 + k, m1:] = g[1] * j2.second[i, k]
    return Jet2(value, first, second)


def evaluate_jet(imm: GeometricImmersion, u, h_first: float = 1e-4, h_second: float = 1e-3) -> Jet2:
    """2-jet by central differences over chart coordinates.

    Directions in which the evaluator is closed-form in one factor (the
    curve / circle phase of product-like kinds, the radial scaling of
    cones) are differentiated analytically; block directions use O(h^2)
    stencils, with the standard 4-point cross for mixed seconds.
    """
    u = np.asarray(u, dtype=float)
    imm.check_regular(u)
    d = imm.chart_dim
    m = imm.signature.dim_complex

    if imm.kind is ImmersionKind.BLOCK:
        return _fd_jet(imm.value, u, d, m, h_first, h_second)

    if imm.kind is ImmersionKind.CONE:
        s = float(u[0])
        link_val = lambda p: imm.link.value(p)
        base = link_val(u[1:])
        sub = _fd_jet(link_val, u[1:], d - 1, m, h_first, h_second)
        value = s * base
        first = np.zeros((d, m), dtype=complex)
        second = np.zeros((d, d, m), dtype=complex)
        first[0] = base
        first[1:] = s * sub.first
        second[0, 0] = 0.0
        second[0, 1:] = second[1:, 0] = sub.first
        second[1:, 1:] = s * sub.second
        return Jet2(value, first, second)

    # product-like: analytic in s, finite differences across block charts
    s, u1, u2 = imm._split(u)
    n1 = imm.blocks[0].dim
    m1 = n1 + 1

    def value_at(uu):
        return imm.value(uu)

    def s_deriv_at(uu):
        ss, v1, v2 = imm._split(uu)
        dg = imm.curve.d1(ss)
        return np.concatenate([
            dg[0] * imm.blocks[0].value(v1, imm.charts[0]),
            dg[1] * imm.blocks[1].value(v2, imm.charts[1]),
        ])

    value = value_at(u)
    first = np.zeros((d, m), dtype=complex)
    second = np.zeros((d, d, m), dtype=complex)

    dg, ddg = imm.curve.d1(s), imm.curve.d2(s)
    v1 = imm.blocks[0].value(u1, imm.charts[0])
    v2 = imm.blocks[1].value(u2, imm.charts[1])
    first[0] = np.concatenate([dg[0] * v1, dg[1] * v2])
    second[0, 0] = np.concatenate([ddg[0] * v1, ddg[1] * v2])

    for i in range(1, d):
        e = np.zeros(d)
        e[i] = h_first
        first[i] = (value_at(u + e) - value_at(u - e)) / (2 * h_first)
        e2 = np.zeros(d)
        e2[i] = h_second
        second[i, i] = (value_at(u + e2) - 2 * value + value_at(u - e2)) / h_second**2
        second[0, i] = second[i, 0] = (s_deriv_at(u + e2) - s_deriv_at(u - e2)) / (2 * h_second)
    for i in range(1, d):
        for k in range(i + 1, d):
            ei = np.zeros(d)
            ek = np.zeros(d)
            ei[i] = h_second
            ek[k] = h_second
            mixed = (
                value_at(u + ei + ek) - value_at(u + ei - ek)
                - value_at(u - ei + ek) + value_at(u - ei - ek)
            ) / (4 * h_second**2)
            second[i, k] = second[k, i] = mixed
    return Jet2(value, first, second)


def _fd_jet(fn, u, d, m, h_first, h_second) -> Jet2:
    u = np.asarray(u, dtype=float)
    value = fn(u)
    first = np.zeros((d, m), dtype=complex)
    second = np.zeros((d, d, m), dtype=complex)
    for i in range(d):
        e = np.zeros(d)
        e[i] = h_first
        first[i] = (fn(u + e) - fn(u - e)) / (2 * h_first)
        e2 = np.zeros(d)
        e2[i] = h_second
        second[i, i] = (fn(u + e2) - 2 * value + fn(u - e2)) / h_second**2
    for i in range(d):
        for k in range(i + 1, d):
            ei = np.zeros(d)
            ek = np.zeros(d)
            ei[i] = h_second
            ek[k] = h_second
            second[i, k] = second[k, i] = (
                fn(u + ei + ek) - fn(u + ei - ek) - fn(u - ei + ek) + fn(u - ei - ek)
            ) / (4 * h_second**2)
    return Jet2(value, first, second)


# ---------------------------------------------------------------------------
# factory operations
# ---------------------------------------------------------------------------

def product_immersion(curve: CurveFactor, b1: LegendrianBlock, b2: LegendrianBlock,
                      charts: tuple[int, int] = (0, 0)) -> GeometricImmersion:
    """Warped product (gamma_1 psi_1, gamma_2 psi_2) over a Legendre curve."""
    sphere_curve = curve.signature.kind is SignatureKind.DEFINITE
    if b1.signature.kind is not SignatureKind.DEFINITE:
        raise DimensionMismatch("the first block must sit in a definite ambient")
    if sphere_curve and b2.signature.kind is not SignatureKind.DEFINITE:
        raise DimensionMismatch("sphere products need a definite second block")
    if not sphere_curve and b2.signature.kind is not SignatureKind.LORENTZIAN:
        raise DimensionMismatch("AdS products need the Lorentzian block last")
    n1, n2 = b1.dim, b2.dim
    dim_total = n1 + n2 + 2
    sig = sphere_signature(dim_total) if sphere_curve else ads_signature(dim_total)
    kind = ImmersionKind.PRODUCT_SPHERE if sphere_curve else ImmersionKind.PRODUCT_ADS
    return GeometricImmersion(
        kind=kind,
        signature=sig,
        level=sig.quadric_level,
        chart_dims=(1, n1, n2),
        curve=curve,
        blocks=(b1, b2),
        charts=charts,
        metadata={"n1": n1, "n2": n2},
    )


def phi_delta(delta: float, b1: LegendrianBlock, b2: LegendrianBlock) -> GeometricImmersion:
    """Explicit one-parameter family of C-minimal products in the sphere."""
    n1, n2 = b1.dim, b2.dim
    imm = product_immersion(gamma_delta_curve(delta, n1, n2), b1, b2)
    imm.metadata.update(
        delta=delta,
        mu=lc.gamma_delta_mu(delta, n1, n2),
        delta0=lc.delta_minimal(n1, n2),
    )
    return imm


def projected_phi_delta(delta: float, b1: LegendrianBlock, b2: LegendrianBlock) -> GeometricImmersion:
    """Hopf-projected family into CP^n; circle chart s in [0, 2pi)."""
    if not 0.0 < delta < math.pi / 2:
        raise DomainError("delta must lie strictly inside (0, pi/2)")
    n1, n2 = b1.dim, b2.dim
    c, s = math.cos(delta), math.sin(delta)
    curve = PhaseRateCurve(
        sphere_signature(2), (c, s), (s * s, -c * c),
        is_solution=True, gauge_normalized=False, mu=lc.gamma_delta_mu(delta, n1, n2),
    )
    imm = product_immersion(curve, b1, b2)
    imm.kind = ImmersionKind.PROJECTED_CP
    imm.metadata.update(
        delta=delta,
        period_unprojected=2 * math.pi / (c ** (n1 - 1) * s ** (n2 - 1)),
        circle_period=2 * math.pi,
    )
    return imm


def projected_phi_rho(rho: float, b1: LegendrianBlock, b2: LegendrianBlock) -> GeometricImmersion:
    """Hopf-projected family into CH^n; b1 spherical, b2 hyperbolic."""
    if rho <= 0.0:
        raise DomainError("rho must be positive")
    sh, ch = math.sinh(rho), math.cosh(rho)
    curve = PhaseRateCurve(
        ads_signature(2), (sh, ch), (ch * ch, sh * sh),
        is_solution=True, gauge_normalized=False, mu=lc.alpha_rho_mu(rho, b1.dim, b2.dim),
    )
    imm = product_immersion(curve, b1, b2)
    imm.kind = ImmersionKind.PROJECTED_CH
    imm.metadata.update(rho=rho, circle_period=2 * math.pi)
    return imm


def minimal_embedding_cor10(varrho: float, n1: int, n2: int) -> GeometricImmersion:
    """Radially parametrized minimal Lagrangian embedding representative in CH^n."""
    if varrho <= 0.0:
        raise DomainError("rho must be positive")
    b1 = geodesic_sphere_block(n1) if n1 >= 1 else point_block("sphere")
    b2 = geodesic_hyperbolic_block(n2) if n2 >= 1 else point_block("hyperbolic")
    imm = product_immersion(QuadratureCurve(varrho, n1, n2), b1, b2)
    imm.kind = ImmersionKind.PROJECTED_CH
    imm.metadata.update(varrho=varrho, radial=True)
    return imm


def cone(link: GeometricImmersion) -> GeometricImmersion:
    """The cone (s, p) -> s * link(p) over a spherical Legendrian link."""
    if link.level != 1:
        raise DomainError("cones are taken over links in the unit sphere")
    return GeometricImmersion(
        kind=ImmersionKind.CONE,
        signature=link.signature,
        level=None,
        chart_dims=(1,) + tuple(link.chart_dims),
        link=link,
        metadata={"singular_radius": 0.0, "link_kind": link.kind.value},
    )


@dataclass(frozen=True)
class QuotientAction:
    """Finite group acting on raw factor points (circle angle, x, y)."""

    kind: str                     # "Z2xZ2_sphere" | "Z2_hyperbolic"
    generators: tuple

    @property
    def elements(self) -> tuple:
        if self.kind == "Z2xZ2_sphere":
            h1, h2 = self.generators
            return (h1, h2, lambda s, x, y: h1(*h2(s, x, y)))
        return self.generators


def quotient_action(kind: str) -> QuotientAction:
    """Generators of the quotient identifications of the projected families."""
    def h1(s, x, y):
        return (s + math.pi) % (2 * math.pi), -x, y

    def h2(s, x, y):
        return (s + math.pi) % (2 * math.pi), x, -y

    if kind == "Z2xZ2_sphere":
        return QuotientAction(kind, (h1, h2))
    if kind == "Z2_hyperbolic":
        return QuotientAction(kind, (h1,))
    raise DomainError(f"unknown quotient kind {kind!r}")


# ---------------------------------------------------------------------------
# config-driven construction
# ---------------------------------------------------------------------------

_CURVE_FAMILIES = ("ode", "gamma_delta", "alpha_rho", "quadrature", "control")


def _check_keys(cfg: dict, allowed: set[str], where: str) -> None:
    unknown = set(cfg) - allowed
    if unknown:
        raise DomainError(f"unknown field(s) {sorted(unknown)} in {where}")


def _block_from_config(cfg: dict, position: int, ambient: str) -> LegendrianBlock:
    _check_keys(cfg, {"type", "n", "kind", "n1", "n2", "curve", "blocks"}, "block config")
    btype = cfg.get("type")
    if btype == "geodesic_sphere":
        return geodesic_sphere_block(int(cfg["n"]))
    if btype == "geodesic_hyperbolic":
        return geodesic_hyperbolic_block(int(cfg["n"]))
    if btype == "point":
        want = "hyperbolic" if (position == 2 and ambient == "ads") else "sphere"
        return point_block(want)
    if btype == "product":
        inner = build_from_config({k: v for k, v in cfg.items() if k != "type"})
        return inner.as_block()
    raise DomainError(f"unknown block type {btype!r}")


def _curve_from_config(cfg: dict, n1: int, n2: int) -> CurveFactor:
    _check_keys(
        cfg,
        {"family", "delta", "rho", "theta", "mu", "t_end", "step", "ambient"},
        "curve config",
    )
    family = cfg.get("family")
    if family not in _CURVE_FAMILIES:
        raise DomainError(f"curve family must be one of {_CURVE_FAMILIES}, got {family!r}")
    try:
        if family == "gamma_delta":
            return gamma_delta_curve(float(cfg["delta"]), n1, n2)
        if family == "alpha_rho":
            return alpha_rho_curve(float(cfg["rho"]), n1, n2)
        if family == "quadrature":
            return QuadratureCurve(float(cfg["rho"]), n1, n2)
        if family == "control":
            return nonsolution_control_curve()
        ambient = cfg.get("ambient", "sphere")
        mu = float(cfg.get("mu", 0.0))
        t_end = float(cfg.get("t_end", 10.0))
        step = float(cfg.get("step", 1e-3))
        if ambient == "sphere":
            spec = lc.CurveSpec.sphere(n1, n2, mu, float(cfg["theta"]))
        elif ambient == "ads":
            spec = lc.CurveSpec.ads(n1, n2, mu, float(cfg["rho"]))
        else:
            raise DomainError("curve ambient must be 'sphere' or 'ads'")
    except KeyError as missing:
        raise DomainError(f"curve family {family!r} is missing field {missing}") from None
    return TrajectoryCurve(lc.integrate(spec, t_end, step))


def build_from_config(cfg: dict) -> GeometricImmersion:
    """Build an immersion from the JSON configuration schema.

    {kind, n1, n2, curve: {family, ...}, blocks: [{type, n}, {type, n}],
     quotient: optional} with strict field checking.
    """
    _check_keys(cfg, {"kind", "n1", "n2", "curve", "blocks", "quotient"}, "immersion config")
    kind = cfg.get("kind")
    try:
        n1, n2 = int(cfg["n1"]), int(cfg["n2"])
    except KeyError as missing:
        raise DomainError(f"immersion config is missing field {missing}") from None
    curve_cfg = cfg.get("curve", {})
    blocks_cfg = cfg.get("blocks")
    if blocks_cfg is None:
        blocks_cfg = [
            {"type": "geodesic_sphere" if n1 >= 1 else "point", "n": n1},
            {"type": "geodesic_sphere" if n2 >= 1 else "point", "n": n2},
        ]
    if len(blocks_cfg) != 2:
        raise DomainError("blocks must list exactly two entries")

    ambient = "ads" if kind in ("ProductAdS", "ProjectedCH") else curve_cfg.get("ambient", "sphere")
    b1 = _block_from_config(blocks_cfg[0], 1, ambient)
    b2 = _block_from_config(blocks_cfg[1], 2, ambient)
    if b1.dim != n1 or b2.dim != n2:
        raise DomainError("block dimensions must match n1, n2")

    if kind in ("ProductSphere", "ProductAdS", "Cone"):
        curve = _curve_from_config(curve_cfg, n1, n2)
        imm = product_immersion(curve, b1, b2)
        if kind == "Cone":
            imm = cone(imm)
            if (curve.is_solution and is_zero_mu(curve)
                    and b1.is_minimal_claimed and b2.is_minimal_claimed):
                imm.metadata["special_lagrangian"] = True
            else:
                imm.metadata["special_lagrangian"] = False
    elif kind == "ProjectedCP":
        imm = projected_phi_delta(float(curve_cfg["delta"]), b1, b2)
    elif kind == "ProjectedCH":
        family = curve_cfg.get("family")
        if family == "quadrature":
            imm = minimal_embedding_cor10(float(curve_cfg["rho"]), n1, n2)
        else:
            imm = projected_phi_rho(float(curve_cfg["rho"]), b1, b2)
    else:
        raise DomainError(f"unknown immersion kind {kind!r}")

    quot = cfg.get("quotient")
    if quot is not None:
        imm.metadata["quotient"] = quot
        quotient_action(quot)  # validates the name
    imm.metadata["config"] = cfg
    return imm
