"""Hermitian linear algebra of the two ambient quadrics.

Everything downstream lives in C^(n+1) equipped with either the standard
positive Hermitian form (unit sphere, level +1) or the Lorentzian form with
its single minus sign on the LAST complex coordinate (anti-De Sitter
hypersurface, level -1).  This module provides the form itself, the derived
real metric, Kaehler 2-form and Liouville 1-form, the complex volume form,
and a numerically stable equality test for points of the Hopf quotients.

All operations are pure functions on immutable values.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, DomainError


class SignatureKind(enum.Enum):
    DEFINITE = "definite"
    LORENTZIAN = "lorentzian"


@dataclass(frozen=True)
class Signature:
    """Signature of the Hermitian form on C^dim_complex.

    The Lorentzian variant flips the sign of the last complex coordinate;
    product layouts keep the indefinite factor last so this convention is
    preserved under concatenation.
    """

    kind: SignatureKind
    dim_complex: int

    def __post_init__(self):
        if self.dim_complex < 1:
            raise DomainError(f"dim_complex must be >= 1, got {self.dim_complex}")

    @property
    def weights(self) -> np.ndarray:
        w = np.ones(self.dim_complex)
        if self.kind is SignatureKind.LORENTZIAN:
            w[-1] = -1.0
        return w

    @property
    def quadric_level(self) -> int:
        """Level of the distinguished quadric: +1 (sphere) or -1 (AdS)."""
        return 1 if self.kind is SignatureKind.DEFINITE else -1


def sphere_signature(dim_complex: int) -> Signature:
    return Signature(SignatureKind.DEFINITE, dim_complex)


def ads_signature(dim_complex: int) -> Signature:
    return Signature(SignatureKind.LORENTZIAN, dim_complex)


def _as_cvec(z, sig: Signature) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    if z.shape != (sig.dim_complex,):
        raise DimensionMismatch(
            f"expected a complex vector of length {sig.dim_complex}, got shape {z.shape}"
        )
    return z


def herm(z, w, sig: Signature) -> complex:
    """Signature-weighted Hermitian form sum_k eps_k z_k conj(w_k).

    Conjugate-symmetric: herm(w, z) = conj(herm(z, w)).
    """
    z = _as_cvec(z, sig)
    w = _as_cvec(w, sig)
    return complex(np.sum(sig.weights * z * np.conj(w)))


def riemannian(z, w, sig: Signature) -> float:
    """Real part of the Hermitian form (the ambient pseudo-metric)."""
    return herm(z, w, sig).real


def kaehler(u, v, sig: Signature) -> float:
    """Kaehler 2-form omega(u, v) = <i u, v> = -Im herm(u, v)."""
    return -herm(u, v, sig).imag


def liouville(at, v, sig: Signature) -> float:
    """Liouville 1-form at the point `at` applied to the vector v.

    Equals <v, i*at> = Im herm(v, at); restricting to a quadric gives the
    contact form whose kernel the Legendrian immersions must hit.
    """
    return herm(v, at, sig).imag


def complex_volume(z, tangent, sig: Signature) -> complex:
    """det over C of the square matrix with columns {z, v_1, ..., v_n}.

    Requires exactly n = dim_complex - 1 tangent vectors; the argument of
    the result is the (Legendrian) angle when the columns are a point and
    an oriented orthonormal tangent frame.
    """
    n = sig.dim_complex - 1
    if len(tangent) != n:
        raise DimensionMismatch(
            f"complex_volume needs {n} tangent vectors, got {len(tangent)}"
        )
    cols = [_as_cvec(z, sig)] + [_as_cvec(v, sig) for v in tangent]
    return complex(np.linalg.det(np.column_stack(cols)))


@dataclass(frozen=True)
class QuadricPoint:
    """A point of the unit sphere (level +1) or the AdS quadric (level -1)."""

    z: np.ndarray
    sig: Signature
    level: int
    tol: float = 1e-9

    def __post_init__(self):
        z = _as_cvec(self.z, self.sig)
        object.__setattr__(self, "z", z)
        if self.level not in (1, -1):
            raise DomainError(f"quadric level must be +1 or -1, got {self.level}")
        res = abs(herm(z, z, self.sig).real - self.level)
        if res > self.tol:
            raise DomainError(
                f"point violates the level-{self.level} quadric constraint by {res:.3e}"
            )


def fiber_separation(z, w, sig: Signature, level: int) -> float:
    """Distance-like separation of the Hopf classes of two quadric points.

    Zero exactly when w = e^{i theta} z.  Algebraically this is
    sqrt(|1 - |herm(z,w)|^2|) on the appropriate side of the level, but it
    is evaluated as the norm of the component of w orthogonal to the fiber
    through z, which stays at rounding level (~1e-15) for equal classes
    instead of sqrt-amplifying cancellation noise.
    """
    z = _as_cvec(z, sig)
    w = _as_cvec(w, sig)
    c = herm(w, z, sig) / level
    r = w - c * z
    return float(np.sqrt(max(0.0, riemannian(r, r, sig))))


def projective_separation(z: QuadricPoint, w: QuadricPoint) -> float:
    """Separation of two projected points in CP^n / CH^n; see fiber_separation."""
    if z.sig != w.sig or z.level != w.level:
        raise DimensionMismatch("projective_separation needs matching signatures and levels")
    return fiber_separation(z.z, w.z, z.sig, z.level)


def fiber_separation_batch(Z: np.ndarray, W: np.ndarray, sig: Signature, level: int) -> np.ndarray:
    """Vectorized fiber_separation over rows of Z and W (shape (N, dim))."""
    Z = np.asarray(Z, dtype=complex)
    W = np.asarray(W, dtype=complex)
    if Z.shape != W.shape or Z.shape[1] != sig.dim_complex:
        raise DimensionMismatch("batch shapes must match (N, dim_complex)")
    wts = sig.weights
    c = np.sum(wts * W * np.conj(Z), axis=1) / level
    R = W - c[:, None] * Z
    sq = np.sum(wts * (R.real**2 + R.imag**2), axis=1)
    return np.sqrt(np.maximum(0.0, sq))
