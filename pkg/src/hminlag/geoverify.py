"""Independent finite-difference verification of constructed immersions.

Nothing here trusts a closed form coming out of the factory: every check
re-differentiates the immersion evaluator with its own central-difference
stencils, so agreement between the two routes is evidence rather than
tautology.  Closed forms appear only as the *comparison* side of a
dual-route check (angle decomposition, warped-product Laplacian).

Residuals are collected into named report entries with pass/fail verdicts;
O(h^2) tolerances use a constant calibrated once on the totally geodesic
baseline at the same step and recorded in the report.
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import legendre_curves as lc
from .ambient import (
    Signature,
    SignatureKind,
    complex_volume,
    fiber_separation,
    fiber_separation_batch,
    herm,
    kaehler,
    liouville,
    riemannian,
)
from .errors import (
    DomainError,
    FrameError,
    NumericalQualityError,
    SingularPointError,
)
from .immersion_factory import (
    GeodesicHyperbolicBlock,
    GeodesicSphereBlock,
    GeometricImmersion,
    ImmersionKind,
    PointBlock,
    QuotientAction,
    geodesic_sphere_block,
)

CONE_RADIAL_STEP = 1e-2


def wrap_angle(x: float) -> float:
    """Reduce an angle difference into (-pi, pi]."""
    return -((-x + math.pi) % (2 * math.pi) - math.pi)


def circle_distance(a: float, b: float) -> float:
    return abs(wrap_angle(a - b))


# ---------------------------------------------------------------------------
# finite-difference frames
# ---------------------------------------------------------------------------

def fd_first(fn: Callable, u: np.ndarray, h) -> np.ndarray:
    d = len(u)
    hs = np.full(d, h, dtype=float) if np.isscalar(h) else np.asarray(h, dtype=float)
    rows = []
    for i in range(d):
        e = np.zeros(d)
        e[i] = hs[i]
        rows.append((fn(u + e) - fn(u - e)) / (2 * hs[i]))
    return np.array(rows)


@dataclass
class FrameData:
    """Point value, chart tangents, induced metric, and an oriented ON basis."""

    value: np.ndarray
    tangents: np.ndarray           # (d, m) chart first derivatives
    metric: np.ndarray             # (d, d) real
    basis: np.ndarray              # (d, m) orthonormal, Gram-Schmidt in chart order
    sig: Signature
    level: Optional[int]

    def normal_project(self, w: np.ndarray) -> np.ndarray:
        """Project onto the normal space inside the quadric (or of the cone)."""
        out = np.array(w, dtype=complex)
        for e in self.basis:
            out -= riemannian(out, e, self.sig) * e
        if self.level is not None:
            out -= (riemannian(out, self.value, self.sig) / self.level) * self.value
        return out


def _gram_schmidt(tangents: np.ndarray, sig: Signature) -> np.ndarray:
    basis = np.array(tangents, dtype=complex)
    for _ in range(2):
        for i in range(len(basis)):
            for j in range(i):
                basis[i] -= riemannian(basis[i], basis[j], sig) * basis[j]
            nrm2 = riemannian(basis[i], basis[i], sig)
            if nrm2 <= 1e-20:
                raise FrameError("degenerate or unoriented frame at this chart point")
            basis[i] /= math.sqrt(nrm2)
    return basis


def frame_at(imm: GeometricImmersion, u, h_first: float = 1e-4) -> FrameData:
    u = np.asarray(u, dtype=float)
    value = imm.value(u)
    steps = np.full(len(u), h_first)
    if imm.kind is ImmersionKind.CONE:
        # the radial factor is linear: a coarse step is truncation-free and
        # keeps subtraction rounding out of the frame
        steps[0] = max(h_first, CONE_RADIAL_STEP)
    tangents = fd_first(imm.value, u, steps)
    metric = np.empty((len(u), len(u)))
    for i in range(len(u)):
        for j in range(i, len(u)):
            metric[i, j] = metric[j, i] = riemannian(tangents[i], tangents[j], imm.signature)
    basis = _gram_schmidt(tangents, imm.signature)
    return FrameData(value, tangents, metric, basis, imm.signature, imm.level)


def angle_at(imm: GeometricImmersion, u, h_first: float = 1e-4) -> float:
    """Legendrian angle (quadric kinds) or Lagrangian angle (cones) at u."""
    fr = frame_at(imm, u, h_first)
    if imm.kind is ImmersionKind.CONE:
        det = complex(np.linalg.det(np.column_stack(list(fr.basis))))
    else:
        det = complex_volume(fr.value, list(fr.basis), imm.signature)
    mag = abs(det)
    if not 0.5 < mag < 2.0:
        raise FrameError(
            f"|det| = {mag:.3e} far from 1: the frame is not Legendrian-orthonormal here"
        )
    return cmath.phase(det)


# ---------------------------------------------------------------------------
# residual bookkeeping
# ---------------------------------------------------------------------------

@dataclass
class ResidualStat:
    max: float
    mean: float
    n_points: int
    h: float

    def to_dict(self) -> dict:
        return {"max": self.max, "mean": self.mean, "n_points": self.n_points, "h": self.h}


def _stat(values, h: float) -> ResidualStat:
    arr = np.asarray(values, dtype=float)
    return ResidualStat(float(np.max(arr)), float(np.mean(arr)), int(arr.size), h)


@dataclass
class VerificationReport:
    residuals: dict = field(default_factory=dict)
    verdicts: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def passed(self) -> bool:
        return all(v == "pass" for v in self.verdicts.values())

    def to_dict(self) -> dict:
        return {
            "residuals": {k: v.to_dict() for k, v in self.residuals.items()},
            "verdicts": dict(self.verdicts),
            "meta": {**self.meta, "notes": list(self.notes)},
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, **kw)


# ---------------------------------------------------------------------------
# grids
# ---------------------------------------------------------------------------

def default_patch(imm: GeometricImmersion) -> tuple[np.ndarray, np.ndarray]:
    """A chart box (center, half_widths) clear of singular flags."""
    d = imm.chart_dim
    center = np.zeros(d)
    half = np.full(d, 0.3)
    if imm.kind is ImmersionKind.CONE:
        center[0] = 1.0
        half[0] = 0.35
        sub_c, sub_h = default_patch(imm.link)
        center[1:], half[1:] = sub_c, sub_h
        return center, half
    if imm.kind is ImmersionKind.BLOCK:
        half[:] = 0.3
        return center, half
    lo, hi = imm.curve.domain
    if math.isfinite(hi - lo):
        center[0] = 0.5 * (lo + hi)
        half[0] = min(0.3, 0.45 * (hi - lo))
    else:
        center[0] = 0.4
        half[0] = 0.3
    return center, half


def grid_box(imm: GeometricImmersion, counts, center=None, half_widths=None) -> np.ndarray:
    """Lattice of chart points; every point is checked against singular flags."""
    d = imm.chart_dim
    counts = list(counts)
    if len(counts) != d:
        raise DomainError(f"grid counts must have length {d}")
    c0, h0 = default_patch(imm)
    center = c0 if center is None else np.asarray(center, dtype=float)
    half = h0 if half_widths is None else np.asarray(half_widths, dtype=float)
    axes = [
        np.linspace(center[i] - half[i], center[i] + half[i], counts[i]) if counts[i] > 1
        else np.array([center[i]])
        for i in range(d)
    ]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.column_stack([m.ravel() for m in mesh])
    for p in pts:
        imm.check_regular(p)
    return pts


# ---------------------------------------------------------------------------
# pullbacks and metric
# ---------------------------------------------------------------------------

def pullback_residuals(imm: GeometricImmersion, grid, h: float = 1e-3) -> dict:
    """Entries 'liouville', 'kaehler', and (on quadric kinds) 'quadric'."""
    h1 = h / 4
    liou, kae, quad = [], [], []
    for u in np.asarray(grid, dtype=float):
        fr = frame_at(imm, u, h1)
        liou.append(max(abs(liouville(fr.value, t, imm.signature)) for t in fr.tangents))
        k = 0.0
        for i in range(len(u)):
            for j in range(i + 1, len(u)):
                k = max(k, abs(kaehler(fr.tangents[i], fr.tangents[j], imm.signature)))
        kae.append(k)
        if imm.level is not None:
            quad.append(abs(riemannian(fr.value, fr.value, imm.signature) - imm.level))
    out = {"liouville": _stat(liou, h), "kaehler": _stat(kae, h)}
    if quad:
        out["quadric"] = _stat(quad, h)
    return out


def _block_metric(block, u, chart) -> np.ndarray:
    j = block.jet(np.asarray(u, dtype=float), chart)
    d = block.dim
    g = np.empty((d, d))
    for a in range(d):
        for b in range(a, d):
            g[a, b] = g[b, a] = riemannian(j.first[a], j.first[b], block.signature)
    return g


def induced_metric_check(imm: GeometricImmersion, grid, h: float = 1e-3) -> dict:
    """Finite-difference Gram matrix against the warped block-diagonal formula."""
    h1 = h / 4
    rel, cross = [], []
    for u in np.asarray(grid, dtype=float):
        fr = frame_at(imm, u, h1)
        if imm.kind is ImmersionKind.CONE:
            s = float(u[0])
            sub = frame_at(imm.link, u[1:], h1)
            formula = np.zeros_like(fr.metric)
            formula[0, 0] = 1.0
            formula[1:, 1:] = s * s * sub.metric
        elif imm.is_product_like:
            s, u1, u2 = imm._split(u)
            n1, n2 = imm.blocks[0].dim, imm.blocks[1].dim
            g1 = _block_metric(imm.blocks[0], u1, imm.charts[0])
            g2 = _block_metric(imm.blocks[1], u2, imm.charts[1])
            r1, r2, _, _ = imm.curve.moduli_phases(s)
            formula = np.zeros_like(fr.metric)
            formula[0, 0] = imm.curve.speed(s) ** 2
            formula[1 : 1 + n1, 1 : 1 + n1] = r1 * r1 * g1
            formula[1 + n1 :, 1 + n1 :] = r2 * r2 * g2
        else:
            raise DomainError("induced_metric_check applies to product and cone kinds")
        scale = max(1.0, float(np.max(np.abs(formula))))
        rel.append(float(np.max(np.abs(fr.metric - formula))) / scale)
        cross.append(float(np.max(np.abs(fr.metric[0, 1:]))))
    return {"metric_formula": _stat(rel, h), "metric_cross": _stat(cross, h)}


# ---------------------------------------------------------------------------
# angles
# ---------------------------------------------------------------------------

def closed_form_angle(imm: GeometricImmersion, u) -> Optional[float]:
    """Warped-product angle decomposition; None when a block angle is not constant."""
    if not imm.is_product_like:
        return None
    o1 = imm.blocks[0].beta_offset(imm.charts[0])
    o2 = imm.blocks[1].beta_offset(imm.charts[1])
    if o1 is None or o2 is None:
        return None
    s, _, _ = imm._split(np.asarray(u, dtype=float))
    g, dg = imm.curve.value(s), imm.curve.d1(s)
    beta_curve = lc.legendre_angle(g, dg, imm.curve.signature)
    _, _, nu1, nu2 = imm.curve.moduli_phases(s)
    n1, n2 = imm.blocks[0].dim, imm.blocks[1].dim
    return (n1 * math.pi + beta_curve + n1 * nu1 + n2 * nu2 + o1 + o2) % (2 * math.pi)


def angle_field(imm: GeometricImmersion, grid, h: float = 1e-3) -> tuple[np.ndarray, dict]:
    """Angle values over the grid, plus constancy / decomposition entries.

    'angle_formula' is the circle distance to the closed-form decomposition
    (product kinds with constant block angles); 'angle_constancy' is the
    spread of the numerical angle around its circular mean.
    """
    h1 = min(1e-4, h / 4)
    grid = np.asarray(grid, dtype=float)
    betas = np.array([angle_at(imm, u, h1) for u in grid])
    entries = {}
    devs = []
    for u, b in zip(grid, betas):
        ref = closed_form_angle(imm, u)
        if ref is not None:
            devs.append(circle_distance(b, ref))
    if devs:
        entries["angle_formula"] = _stat(devs, h)
    # constancy against the angle at the canonical patch center keeps the
    # statistic pointwise, so grid chunks merge deterministically
    center_u, _ = default_patch(imm)
    ref_angle = angle_at(imm, center_u, h1)
    entries["angle_constancy"] = _stat([circle_distance(b, ref_angle) for b in betas], h)
    return betas, entries


# ---------------------------------------------------------------------------
# curvature
# ---------------------------------------------------------------------------

def _fd_second(fn, u, h) -> np.ndarray:
    d = len(u)
    f0 = fn(u)
    m = len(f0)
    second = np.zeros((d, d, m), dtype=complex)
    for i in range(d):
        e = np.zeros(d)
        e[i] = h
        second[i, i] = (fn(u + e) - 2 * f0 + fn(u - e)) / h**2
    for i in range(d):
        for j in range(i + 1, d):
            ei = np.zeros(d)
            ej = np.zeros(d)
            ei[i] = h
            ej[j] = h
            second[i, j] = second[j, i] = (
                fn(u + ei + ej) - fn(u + ei - ej) - fn(u - ei + ej) + fn(u - ei - ej)
            ) / (4 * h * h)
    return second


def mean_curvature(imm: GeometricImmersion, u, h: float = 1e-3) -> np.ndarray:
    """Mean curvature vector by pure finite differences of the evaluator.

    Second fundamental form = normal projection (inside the quadric, with
    the Lorentzian sign for AdS; no radial removal for cones) of the chart
    Hessian; H is its metric trace divided by the manifold dimension.
    """
    u = np.asarray(u, dtype=float)
    imm.check_regular(u)
    fr = frame_at(imm, u, h / 4)
    second = _fd_second(imm.value, u, h)
    ginv = np.linalg.inv(fr.metric)
    d = len(u)
    H = np.zeros(imm.signature.dim_complex, dtype=complex)
    for i in range(d):
        for j in range(d):
            H += ginv[i, j] * fr.normal_project(second[i, j])
    return H / d


def _euclid_norm(v: np.ndarray) -> float:
    return float(np.sqrt(np.sum(v.real**2 + v.imag**2)))


def grad_angle_ambient(imm: GeometricImmersion, u, h: float = 1e-3,
                       h_beta: float = 2e-5) -> np.ndarray:
    """The ambient vector of the tangential gradient of the angle field."""
    u = np.asarray(u, dtype=float)
    fr = frame_at(imm, u, h / 4)
    d = len(u)
    b0 = angle_at(imm, u, h_beta)
    db = np.zeros(d)
    for i in range(d):
        e = np.zeros(d)
        e[i] = h
        bp = angle_at(imm, u + e, h_beta)
        bm = angle_at(imm, u - e, h_beta)
        diff = wrap_angle(bp - bm)
        if abs(wrap_angle(bp - b0)) > 1.5 or abs(wrap_angle(bm - b0)) > 1.5:
            raise NumericalQualityError(
                "angle-branch discontinuity across the patch; refine the grid"
            )
        db[i] = diff / (2 * h)
    ginv = np.linalg.inv(fr.metric)
    coeff = ginv @ db
    return np.sum(coeff[:, None] * fr.tangents, axis=0)


def gradient_identity_residual(imm: GeometricImmersion, u, h: float = 1e-3) -> float:
    """|| J grad(beta) - n H || at one chart point (Euclidean coordinate norm)."""
    grad = grad_angle_ambient(imm, u, h)
    H = mean_curvature(imm, u, h)
    n = imm.chart_dim
    return _euclid_norm(1j * grad - n * H)


def gradient_identity_check(imm: GeometricImmersion, grid, h: float = 1e-3) -> dict:
    vals = [gradient_identity_residual(imm, u, h) for u in np.asarray(grid, dtype=float)]
    return {"JgradBeta_nH": _stat(vals, h)}


# ---------------------------------------------------------------------------
# C-minimality: discrete Laplace-Beltrami of the angle
# ---------------------------------------------------------------------------

def laplace_beltrami_angle(imm: GeometricImmersion, u, h: float = 1e-3,
                           h_beta: float = 2e-4, steps=None,
                           h_frame: float = 4e-5) -> float:
    """Divergence-form Laplacian of the angle field on the chart.

    Delta beta = (1/sqrt g) d_i(sqrt g g^{ij} d_j beta), with sqrt(det g)
    and g^{ij} from finite-difference metrics.  `steps` overrides the
    per-direction step (the cone radial direction defaults to a coarser
    one: the angle is exactly radial-constant and fine second differences
    there only amplify rounding).  The frame step h_frame stays small so
    truncation-induced cross terms of the metric inverse cannot leak the
    tangential angle gradient into the flux divergence.
    """
    u = np.asarray(u, dtype=float)
    d = imm.chart_dim
    if steps is None:
        steps = np.full(d, h)
        if imm.kind is ImmersionKind.CONE:
            steps[0] = CONE_RADIAL_STEP
    else:
        steps = np.asarray(steps, dtype=float)

    beta_cache: dict[tuple, float] = {}
    frame_cache: dict[tuple, FrameData] = {}

    def key(offsets):
        return tuple(offsets)

    def point(offsets):
        return u + steps * np.asarray(offsets, dtype=float)

    def beta(offsets):
        k = key(offsets)
        if k not in beta_cache:
            beta_cache[k] = angle_at(imm, point(offsets), h_beta)
        return beta_cache[k]

    def frame(offsets):
        k = key(offsets)
        if k not in frame_cache:
            frame_cache[k] = frame_at(imm, point(offsets), h_frame)
        return frame_cache[k]

    b0 = beta([0] * d)

    def grad_flux(offsets, i):
        """F_i = sqrt(g) (g^{ij} d_j beta) at the shifted point."""
        fr = frame(offsets)
        db = np.zeros(d)
        for j in range(d):
            op = list(offsets)
            om = list(offsets)
            op[j] += 1
            om[j] -= 1
            diff = wrap_angle(beta(op) - beta(om))
            if abs(wrap_angle(beta(op) - b0)) > 1.5:
                raise NumericalQualityError("angle-branch discontinuity across the patch")
            db[j] = diff / (2 * steps[j])
        ginv = np.linalg.inv(fr.metric)
        sqrtg = math.sqrt(max(np.linalg.det(fr.metric), 1e-300))
        return sqrtg * float((ginv @ db)[i])

    div = 0.0
    for i in range(d):
        op = [0] * d
        om = [0] * d
        op[i] += 1
        om[i] -= 1
        div += (grad_flux(op, i) - grad_flux(om, i)) / (2 * steps[i])
    fr0 = frame([0] * d)
    sqrtg0 = math.sqrt(max(np.linalg.det(fr0.metric), 1e-300))
    return div / sqrtg0


def closed_form_laplacian(imm: GeometricImmersion, s: float, hs: float = 1e-5) -> float:
    """Warped-product Laplacian of the angle along the curve direction.

    Valid for any curve parametrization; assumes both blocks carry a
    harmonic (here: constant) angle, which is what their C-minimality
    claims assert.  Only the curve's 2-jets enter; the lone finite
    difference is on the analytically computed first rate.
    """
    if not imm.is_product_like:
        raise DomainError("closed-form Laplacian applies to product kinds")
    n1, n2 = imm.blocks[0].dim, imm.blocks[1].dim
    curve = imm.curve

    def combo_rate(t: float) -> float:
        g, dg, ddg = curve.value(t), curve.d1(t), curve.d2(t)
        f = g[0] * dg[1] - g[1] * dg[0]
        df = g[0] * ddg[1] - g[1] * ddg[0]
        beta_rate = (df / f).imag
        nu1_rate = (dg[0] / g[0]).imag
        nu2_rate = (dg[1] / g[1]).imag
        return beta_rate + n1 * nu1_rate + n2 * nu2_rate

    def log_rate(t: float) -> float:
        g, dg, ddg = curve.value(t), curve.d1(t), curve.d2(t)
        w2 = 1.0 if curve.signature.kind is SignatureKind.DEFINITE else -1.0
        sp2 = abs(dg[0]) ** 2 + w2 * abs(dg[1]) ** 2
        dsp2 = 2 * (ddg[0] * dg[0].conjugate()).real + w2 * 2 * (ddg[1] * dg[1].conjugate()).real
        return (
            n1 * (dg[0] / g[0]).real
            + n2 * (dg[1] / g[1]).real
            - 0.5 * dsp2 / sp2
        )

    c1 = combo_rate(s)
    c2 = (combo_rate(s + hs) - combo_rate(s - hs)) / (2 * hs)
    return (c2 + log_rate(s) * c1) / curve.speed(s) ** 2


def cminimality_residual(imm: GeometricImmersion, grid, h: float = 1e-3) -> dict:
    """Entries 'angle_laplacian' (|Delta beta|), 'div_JH' (=/dim), and the
    closed-form cross-check deviation on product kinds with C-minimal blocks."""
    lap, cross = [], []
    product_closed = (
        imm.is_product_like
        and imm.blocks[0].is_cminimal_claimed
        and imm.blocks[1].is_cminimal_claimed
    )
    for u in np.asarray(grid, dtype=float):
        val = laplace_beltrami_angle(imm, u, h)
        lap.append(abs(val))
        if product_closed:
            ref = closed_form_laplacian(imm, float(u[0]))
            cross.append(abs(val - ref))
    out = {
        "angle_laplacian": _stat(lap, h),
        "div_JH": _stat(np.asarray(lap) / imm.chart_dim, h),
    }
    if product_closed:
        out["laplacian_closed_form_dev"] = _stat(cross, h)
    return out


# ---------------------------------------------------------------------------
# embedding / quotient checks
# ---------------------------------------------------------------------------

@dataclass
class EmbeddingVerdict:
    sound: bool
    max_identification_sep: float
    collision_found: bool
    min_separation: float
    n_samples: int
    inconclusive: bool

    def to_dict(self) -> dict:
        return self.__dict__.copy()


def _sample_factor(block, n: int, rng) -> np.ndarray:
    if isinstance(block, PointBlock):
        return np.ones((n, 1))
    if isinstance(block, GeodesicSphereBlock):
        v = rng.normal(size=(n, block.dim + 1))
        return v / np.linalg.norm(v, axis=1, keepdims=True)
    if isinstance(block, GeodesicHyperbolicBlock):
        y = rng.uniform(-1.5, 1.5, size=(n, block.dim))
        w = np.sqrt(1.0 + np.sum(y * y, axis=1, keepdims=True))
        return np.hstack([y, w])
    raise DomainError("embedding sampling needs geodesic or point blocks")


def _orbit_distance(action: QuotientAction, a, b) -> float:
    s0, x0, y0 = a
    best = math.inf
    images = [(s0, x0, y0)] + [g(s0, x0, y0) for g in action.elements]
    for s1, x1, y1 in images:
        d = max(
            circle_distance(s1, b[0]),
            float(np.max(np.abs(x1 - b[1]))) if x1.size else 0.0,
            float(np.max(np.abs(y1 - b[2]))) if y1.size else 0.0,
        )
        best = min(best, d)
    return best


def embedding_check(imm: GeometricImmersion, action: QuotientAction, sample_count: int,
                    seed: int = 0, eps_chart: float = 1e-2,
                    tol: float = 1e-9) -> EmbeddingVerdict:
    """Sampled identification-soundness and injectivity evidence.

    (a) every group element maps each sample to a projectively equal point;
    (b) no collision among sampled pairs in distinct orbits (orbit distance
    > eps_chart), with the minimum separation reported.  Injectivity is
    sampled, not proved: the verdict reads 'no collision found among N
    samples'.
    """
    if not imm.raw_capable:
        raise DomainError("embedding checks need raw-capable (geodesic/point block) immersions")
    expected = "Z2xZ2_sphere" if imm.level == 1 else "Z2_hyperbolic"
    if action.kind != expected:
        raise DomainError(f"quotient kind {action.kind!r} does not match this immersion")
    rng = np.random.default_rng(seed)
    n = sample_count
    S = rng.uniform(0.0, 2 * math.pi, n)
    X = _sample_factor(imm.blocks[0], n, rng)
    Y = _sample_factor(imm.blocks[1], n, rng)
    base = imm.value_raw_batch(S, X, Y)

    max_ident = 0.0
    for g in action.elements:
        Sg = np.empty(n)
        Xg = np.empty_like(X)
        Yg = np.empty_like(Y)
        for k in range(n):
            s1, x1, y1 = g(S[k], X[k], Y[k])
            Sg[k], Xg[k], Yg[k] = s1, x1, y1
        img = imm.value_raw_batch(Sg, Xg, Yg)
        seps = fiber_separation_batch(base, img, imm.signature, imm.level)
        max_ident = max(max_ident, float(np.max(seps)))

    S2 = rng.uniform(0.0, 2 * math.pi, n)
    X2 = _sample_factor(imm.blocks[0], n, rng)
    Y2 = _sample_factor(imm.blocks[1], n, rng)
    other = imm.value_raw_batch(S2, X2, Y2)
    seps = fiber_separation_batch(base, other, imm.signature, imm.level)
    min_sep = math.inf
    collision = False
    for k in range(n):
        if _orbit_distance(action, (S[k], X[k], Y[k]), (S2[k], X2[k], Y2[k])) <= eps_chart:
            continue
        min_sep = min(min_sep, float(seps[k]))
        if seps[k] <= tol:
            collision = True
    return EmbeddingVerdict(
        sound=max_ident <= tol,
        max_identification_sep=max_ident,
        collision_found=collision,
        min_separation=min_sep,
        n_samples=n,
        inconclusive=(min_sep < 10 * tol),
    )


# ---------------------------------------------------------------------------
# projected periodicity of ODE curves
# ---------------------------------------------------------------------------

@dataclass
class ProjectedPeriodicity:
    periodic: bool
    m: Optional[int]
    closing_phase: Optional[float]
    period: Optional[float]
    verdict: str

    def to_dict(self) -> dict:
        return self.__dict__.copy()


def projected_periodicity(traj: lc.CurveTrajectory, report: lc.PeriodReport,
                          q_max: int = 64, tol: float = 1e-7) -> ProjectedPeriodicity:
    """Smallest m with m*(nu_2(T) - nu_1(T)) in 2 pi Z, via the rational certificate.

    The degenerate (constant-modulus) case closes after the projected
    period of the explicit phases, with m = 1.
    """
    if report.degenerate:
        k0 = int(np.argmin(np.abs(traj.ts)))
        w1 = float((traj.derivs[k0, 0] / traj.values[k0, 0]).imag)
        w2 = float((traj.derivs[k0, 1] / traj.values[k0, 1]).imag)
        A = 2 * math.pi / (w1 - w2)
        return ProjectedPeriodicity(
            periodic=True,
            m=1,
            closing_phase=(w1 * A) % (2 * math.pi),
            period=A,
            verdict="closed-form (degenerate round case)",
        )
    T = report.T
    nu1T = traj.phase_at(T, 0) - traj.phase_at(0.0, 0)
    nu2T = traj.phase_at(T, 1) - traj.phase_at(0.0, 1)
    delta = (nu2T - nu1T) / (2 * math.pi)
    cert = lc.rational_certificate(delta, q_max, tol)
    if cert is None:
        return ProjectedPeriodicity(False, None, None, None, "no certificate found")
    _, q = cert
    m = q
    phase = (m * nu1T) % (2 * math.pi)
    if abs(m * delta - round(m * delta)) > m * tol + 1e-9:
        raise NumericalQualityError("certificate inconsistent with the closing condition")
    return ProjectedPeriodicity(True, m, phase, m * T, f"certified rational within tolerance {tol:g}")


# ---------------------------------------------------------------------------
# calibrated suites
# ---------------------------------------------------------------------------

_CAL_CACHE: dict[float, dict] = {}


def calibrate_baseline(h: float) -> dict:
    """O(h^2) constants from the totally geodesic sphere baseline at step h.

    The baseline block has exactly zero mean curvature, constant angle and
    vanishing Laplacian, so its measured residuals estimate the numeric
    floor (truncation plus rounding) of each stencil; verdicts use
    C = 50 * max(floor / h^2, 0.02).
    """
    if h in _CAL_CACHE:
        return _CAL_CACHE[h]
    imm = geodesic_sphere_block(2).immersion()
    grid = grid_box(imm, [2, 2], center=np.array([0.15, -0.2]), half_widths=np.array([0.25, 0.25]))
    H = max(_euclid_norm(mean_curvature(imm, u, h)) for u in grid)
    grad = max(gradient_identity_residual(imm, u, h) for u in grid)
    lap = max(abs(laplace_beltrami_angle(imm, u, h)) for u in grid)
    # the all-real baseline has bitwise-constant angles, so its Laplacian
    # floor underestimates generic evaluators; keep a realistic minimum
    out = {
        "mean_curvature": 50 * max(H / h**2, 0.02),
        "JgradBeta_nH": 50 * max(grad / h**2, 0.02),
        "angle_laplacian": 50 * max(lap / h**2, 0.2),
        "div_JH": 50 * max(lap / h**2, 0.2),
        "metric_formula": 50 * max(H / h**2, 0.02),
        "liouville": 50 * max(grad / h**2, 0.02),
        "kaehler": 50 * max(grad / h**2, 0.02),
    }
    _CAL_CACHE[h] = out
    return out


DEFAULT_CHECKS = ("pullback", "metric", "angle", "mean_curvature", "gradient", "cminimal")

EXACT_TOL = 1e-9
ANGLE_FORMULA_TOL = 1e-7


def merge_stats(parts: Sequence[ResidualStat]) -> ResidualStat:
    """Associative (max, weighted-mean) composition of residual statistics."""
    parts = [p for p in parts if p is not None]
    n = sum(p.n_points for p in parts)
    return ResidualStat(
        max(p.max for p in parts),
        sum(p.mean * p.n_points for p in parts) / n,
        n,
        parts[0].h,
    )


def residual_suite(imm: GeometricImmersion, grid, h: float = 1e-3,
                   checks: Sequence[str] = DEFAULT_CHECKS) -> dict:
    """Raw residual statistics of the selected checks over one grid chunk."""
    out: dict[str, ResidualStat] = {}
    if "pullback" in checks:
        out.update(pullback_residuals(imm, grid, h))
    if "metric" in checks and imm.kind is not ImmersionKind.BLOCK:
        out.update(induced_metric_check(imm, grid, h))
    if "angle" in checks:
        _, entries = angle_field(imm, grid, h)
        out.update(entries)
    if "mean_curvature" in checks:
        out.update(mean_curvature_residuals(imm, grid, h))
    if "gradient" in checks:
        out.update(gradient_identity_check(imm, grid, h))
    if "cminimal" in checks:
        out.update(cminimality_residual(imm, grid, h))
    return out


def mean_curvature_residuals(imm: GeometricImmersion, grid, h: float = 1e-3) -> dict:
    vals = [_euclid_norm(mean_curvature(imm, u, h)) for u in np.asarray(grid, dtype=float)]
    return {"mean_curvature": _stat(vals, h)}


def immersion_claims(imm: GeometricImmersion) -> dict:
    """Property claims propagated from the construction (to be verified)."""
    if imm.kind is ImmersionKind.CONE:
        inner = immersion_claims(imm.link)
        return {"minimal": inner["minimal"], "cminimal": inner["cminimal"]}
    if imm.kind is ImmersionKind.BLOCK:
        b = imm.blocks[0]
        return {"minimal": b.is_minimal_claimed, "cminimal": b.is_cminimal_claimed}
    b1, b2 = imm.blocks
    solution = imm.curve.is_solution
    from .immersion_factory import is_zero_mu
    return {
        "minimal": solution and is_zero_mu(imm.curve)
        and b1.is_minimal_claimed and b2.is_minimal_claimed,
        "cminimal": solution and b1.is_cminimal_claimed and b2.is_cminimal_claimed,
    }


def run_suite(
    imm: GeometricImmersion,
    checks: Sequence[str] = DEFAULT_CHECKS,
    grid=None,
    counts=None,
    h: float = 1e-3,
    action: Optional[QuotientAction] = None,
    samples: int = 1000,
    seed: int = 0,
    tolerances: Optional[dict] = None,
    precomputed: Optional[dict] = None,
) -> VerificationReport:
    """Run the selected residual checks and grade them against tolerances.

    `precomputed` accepts residual statistics already merged from grid
    chunks (the CLI worker-pool path); otherwise the suite evaluates the
    grid here.
    """
    report = VerificationReport()
    claims = immersion_claims(imm)
    report.meta["kind"] = imm.kind.value
    report.meta["claims"] = claims
    report.meta["h"] = h
    cal = calibrate_baseline(h)
    report.meta["calibration"] = {k: cal[k] for k in sorted(cal)}
    tolerances = dict(tolerances or {})

    if precomputed is None:
        if grid is None:
            if counts is None:
                counts = [3] * imm.chart_dim
            grid = grid_box(imm, counts)
        stats = residual_suite(imm, grid, h, checks)
        report.meta["n_grid"] = int(len(grid))
    else:
        stats = dict(precomputed)
        report.meta["n_grid"] = int(max((s.n_points for s in stats.values()), default=0))

    def tol_for(name: str, default: float) -> float:
        return float(tolerances.get(name, default))

    def grade(name: str, tol: float) -> None:
        stat = stats.pop(name)
        report.residuals[name] = stat
        report.verdicts[name] = "pass" if stat.max <= tol else "fail"
        report.meta.setdefault("tolerances", {})[name] = tol

    if "liouville" in stats:
        grade("liouville", tol_for("liouville", max(1e-8, cal["liouville"] * h * h)))
        grade("kaehler", tol_for("kaehler", max(1e-8, cal["kaehler"] * h * h)))
    if "quadric" in stats:
        grade("quadric", tol_for("quadric", EXACT_TOL))
    if "metric_formula" in stats:
        grade("metric_formula", tol_for("metric_formula", max(1e-6, cal["metric_formula"] * h * h)))
        grade("metric_cross", tol_for("metric_cross", 1e-8))
    if "angle_formula" in stats:
        grade("angle_formula", tol_for("angle_formula", ANGLE_FORMULA_TOL))
    if "angle_constancy" in stats:
        if claims["minimal"]:
            grade("angle_constancy", tol_for("angle_constancy", 1e-8))
        else:
            report.residuals["angle_constancy"] = stats.pop("angle_constancy")
    if "mean_curvature" in stats:
        if claims["minimal"]:
            grade("mean_curvature", tol_for("mean_curvature", cal["mean_curvature"] * h * h))
        else:
            report.residuals["mean_curvature"] = stats.pop("mean_curvature")
    if "JgradBeta_nH" in stats:
        grade("JgradBeta_nH", tol_for("JgradBeta_nH", cal["JgradBeta_nH"] * h * h))
    if "div_JH" in stats:
        grade("div_JH", tol_for("div_JH", cal["div_JH"] * h * h))
    report.residuals.update(stats)

    if "quotient" in checks:
        if action is None:
            kind = "Z2xZ2_sphere" if imm.level == 1 else "Z2_hyperbolic"
            from .immersion_factory import quotient_action
            action = quotient_action(kind)
        verdict = embedding_check(imm, action, samples, seed=seed)
        report.meta["embedding"] = verdict.to_dict()
        report.verdicts["quotient_soundness"] = "pass" if verdict.sound else "fail"
        if verdict.collision_found:
            report.verdicts["quotient_injectivity"] = "fail"
        elif verdict.inconclusive:
            report.verdicts["quotient_injectivity"] = "inconclusive"
        else:
            report.verdicts["quotient_injectivity"] = "pass"
        report.notes.append(
            f"no collision found among {verdict.n_samples} distinct-orbit sample pairs"
            if not verdict.collision_found else "collision among sampled pairs"
        )
    return report
