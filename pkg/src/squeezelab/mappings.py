"""Biholomorphic coordinate changes and uniform-squeezing certificates.

The map classes are vectorized over a leading batch axis: `apply` accepts
arrays of shape (..., n) and `jacobian_matrix` returns (..., n, n).  All maps
carry analytic Jacobians and exact inverses.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .domains import (Domain, GeometryError, ModelKind, as_points,
                      contains, nearest_boundary_point, sample_boundary)


class MapKind(enum.Enum):
    AFFINE = "affine"
    DISC_MOBIUS = "disc_mobius"
    BALL_MOBIUS = "ball_mobius"
    POLYDISC_MOBIUS = "polydisc_mobius"
    CONVEX_SQUEEZE = "convex_squeeze"
    COMPOSITION = "composition"


class BiholoMap:
    """Base class; concrete maps implement apply/inverse/jacobian_matrix."""

    kind: MapKind
    dim: int
    invertible: bool = True

    def apply(self, z) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, z) -> np.ndarray:
        return self.apply(z)

    def inverse(self) -> "BiholoMap":
        raise NotImplementedError

    def jacobian_matrix(self, z) -> np.ndarray:
        raise NotImplementedError


class AffineMap(BiholoMap):
    """z -> A z + b with an invertible complex matrix A."""

    kind = MapKind.AFFINE

    def __init__(self, matrix, offset=None):
        A = np.atleast_2d(np.asarray(matrix, dtype=np.complex128))
        if A.shape[0] != A.shape[1]:
            raise ValueError("affine matrix must be square")
        self.dim = A.shape[0]
        self.matrix = A
        self.offset = (np.zeros(self.dim, dtype=np.complex128)
                       if offset is None else as_points(offset, self.dim))
        self._det = complex(np.linalg.det(A))
        if self._det == 0 or not np.isfinite(self._det):
            raise ValueError("affine map is singular")

    @classmethod
    def scaling(cls, dim: int, factor: complex, offset=None) -> "AffineMap":
        return cls(np.eye(dim) * factor, offset)

    @classmethod
    def identity(cls, dim: int) -> "AffineMap":
        return cls(np.eye(dim))

    def apply(self, z):
        pts = as_points(z, self.dim)
        return pts @ self.matrix.T + self.offset

    def inverse(self):
        inv = np.linalg.inv(self.matrix)
        return AffineMap(inv, -inv @ self.offset)

    def jacobian_matrix(self, z):
        pts = as_points(z, self.dim)
        return np.broadcast_to(self.matrix, pts.shape[:-1] + (self.dim, self.dim)).copy()


class DiscMobius(BiholoMap):
    """Automorphism z -> (z - w) / (1 - z conj(w)) of the unit disc."""

    kind = MapKind.DISC_MOBIUS
    dim = 1

    def __init__(self, w: complex):
        w = complex(w)
        if abs(w) >= 1:
            raise ValueError("disc Mobius parameter must satisfy |w| < 1")
        self.w = w

    def apply(self, z):
        pts = as_points(z, 1)
        return (pts - self.w) / (1.0 - pts * np.conj(self.w))

    def inverse(self):
        return DiscMobius(-self.w)

    def jacobian_matrix(self, z):
        pts = as_points(z, 1)
        den = (1.0 - pts[..., 0] * np.conj(self.w)) ** 2
        if np.any(den == 0):
            raise GeometryError("disc Mobius evaluated at its pole")
        return ((1.0 - abs(self.w) ** 2) / den)[..., np.newaxis, np.newaxis]


class BallMobius(BiholoMap):
    """Automorphism of the unit ball in C^n sending w to 0.

    Realized as z -> psi_s(U z) where U is a unitary aligning w with the
    positive first axis (U w = |w| e_1) and, writing s = |w|,

        psi_s(z) = ((z_1 - s)/(1 - s z_1),
                    sqrt(1 - s^2) z_k / (1 - s z_1), k >= 2).
    """

    kind = MapKind.BALL_MOBIUS

    def __init__(self, w, _unitary=None, _s=None, _inverted=False):
        if _unitary is not None:
            self.unitary = _unitary
            self.s = _s
            self.dim = _unitary.shape[0]
        else:
            w = as_points(w, np.asarray(w, dtype=np.complex128).reshape(-1).shape[0])
            self.dim = w.shape[0]
            s = float(np.linalg.norm(w))
            if s >= 1:
                raise ValueError("ball Mobius parameter must satisfy |w| < 1")
            self.s = s
            self.unitary = _align_unitary(w) if s > 1e-15 else np.eye(self.dim,
                                                                      dtype=np.complex128)
        self.inverted = _inverted

    def apply(self, z):
        pts = as_points(z, self.dim)
        if not self.inverted:
            return _axis_mobius(pts @ self.unitary.T, self.s)
        return _axis_mobius(pts, -self.s) @ np.conj(self.unitary)

    def inverse(self):
        return BallMobius(None, _unitary=self.unitary, _s=self.s,
                          _inverted=not self.inverted)

    def jacobian_matrix(self, z):
        pts = as_points(z, self.dim)
        if not self.inverted:
            J = _axis_mobius_jac(pts @ self.unitary.T, self.s)
            return J @ self.unitary
        J = _axis_mobius_jac(pts, -self.s)
        return np.einsum("ij,...jk->...ik", np.conj(self.unitary).T, J)


def _align_unitary(w: np.ndarray) -> np.ndarray:
    """Unitary U with U w = |w| e_1, built by completing w/|w| to a basis."""
    n = w.shape[0]
    u1 = w / np.linalg.norm(w)
    cols = [u1]
    for k in range(n):
        e = np.zeros(n, dtype=np.complex128)
        e[k] = 1.0
        v = e - sum(c * np.vdot(c, e) for c in cols)
        nrm = np.linalg.norm(v)
        if nrm > 1e-10:
            cols.append(v / nrm)
        if len(cols) == n:
            break
    V = np.stack(cols, axis=1)      # columns orthonormal, first column w/|w|
    return V.conj().T


def _axis_mobius(z: np.ndarray, s: float) -> np.ndarray:
    den = 1.0 - s * z[..., 0]
    if np.any(den == 0):
        raise GeometryError("ball Mobius evaluated at its pole")
    out = np.empty_like(z)
    out[..., 0] = (z[..., 0] - s) / den
    if z.shape[-1] > 1:
        out[..., 1:] = math.sqrt(1.0 - s * s) * z[..., 1:] / den[..., np.newaxis]
    return out


def _axis_mobius_jac(z: np.ndarray, s: float) -> np.ndarray:
    n = z.shape[-1]
    den = 1.0 - s * z[..., 0]
    if np.any(den == 0):
        raise GeometryError("ball Mobius evaluated at its pole")
    J = np.zeros(z.shape[:-1] + (n, n), dtype=np.complex128)
    J[..., 0, 0] = (1.0 - s * s) / den ** 2
    if n > 1:
        root = math.sqrt(1.0 - s * s)
        J[..., 1:, 0] = root * s * z[..., 1:] / den[..., np.newaxis] ** 2
        idx = np.arange(1, n)
        J[..., idx, idx] = (root / den)[..., np.newaxis]
    return J


class PolydiscMobius(BiholoMap):
    """Componentwise disc automorphism of the unit polydisc."""

    kind = MapKind.POLYDISC_MOBIUS

    def __init__(self, w):
        ws = np.asarray(w, dtype=np.complex128).reshape(-1)
        if np.any(np.abs(ws) >= 1):
            raise ValueError("polydisc Mobius parameters must satisfy |w_i| < 1")
        self.w = ws
        self.dim = ws.shape[0]

    def apply(self, z):
        pts = as_points(z, self.dim)
        return (pts - self.w) / (1.0 - pts * np.conj(self.w))

    def inverse(self):
        return PolydiscMobius(-self.w)

    def jacobian_matrix(self, z):
        pts = as_points(z, self.dim)
        den = (1.0 - pts * np.conj(self.w)) ** 2
        if np.any(den == 0):
            raise GeometryError("polydisc Mobius evaluated at a pole")
        diag = (1.0 - np.abs(self.w) ** 2) / den
        out = np.zeros(pts.shape[:-1] + (self.dim, self.dim), dtype=np.complex128)
        idx = np.arange(self.dim)
        out[..., idx, idx] = diag
        return out


class Composition(BiholoMap):
    """Maps applied left to right: Composition([f, g]) is z -> g(f(z))."""

    def __init__(self, maps, kind: MapKind = MapKind.COMPOSITION):
        if not maps:
            raise ValueError("empty composition")
        dims = {m.dim for m in maps}
        if len(dims) != 1:
            raise ValueError("composition of maps with mixed dimensions")
        self.parts = list(maps)
        self.dim = self.parts[0].dim
        self.kind = kind

    def apply(self, z):
        pts = as_points(z, self.dim)
        for m in self.parts:
            pts = m.apply(pts)
        return pts

    def inverse(self):
        return Composition([m.inverse() for m in reversed(self.parts)])

    def jacobian_matrix(self, z):
        pts = as_points(z, self.dim)
        J = None
        for m in self.parts:
            Jm = m.jacobian_matrix(pts)
            J = Jm if J is None else Jm @ J
            pts = m.apply(pts)
        return J


def jacobian_det(mapping: BiholoMap, z):
    """Holomorphic Jacobian determinant; chain rule across compositions."""
    J = mapping.jacobian_matrix(z)
    det = np.linalg.det(J)
    if not np.all(np.isfinite(det)) or np.any(det == 0):
        raise GeometryError("Jacobian determinant singular or non-finite")
    if det.ndim == 0:
        return complex(det)
    return det


def disc_mobius(w: complex) -> DiscMobius:
    """Unit-disc automorphism sending w to 0."""
    return DiscMobius(w)


def ball_mobius(w) -> BallMobius:
    """Unit-ball automorphism sending w to 0 (identity when w = 0)."""
    return BallMobius(w)


# ---------------------------------------------------------------------------
# squeezing certificates
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SqueezingCertificate:
    """A witnessed pair (a, b): B_a(0) inside map(domain) inside B_b(0).

    `a` and `b` are the extreme moduli of mapped boundary samples; regenerate
    the samples from (n_boundary_samples, seed) to revalidate.
    """

    base_point: np.ndarray
    map: BiholoMap
    a: float
    b: float
    n_boundary_samples: int
    seed: int = 0
    inner_tangent_radius: float = float("nan")
    outer_tangent_radius: float = float("nan")


def certificate_violations(domain: Domain, cert: SqueezingCertificate,
                           tol: float = 1e-6) -> list[str]:
    """Check the certificate invariants; returns human-readable violations."""
    bad = []
    if not (0 < cert.a <= cert.b + tol and math.isfinite(cert.b)):
        bad.append(f"radii out of order: a={cert.a!r} b={cert.b!r}")
    img0 = cert.map.apply(cert.base_point)
    if np.linalg.norm(img0) > 1e-10:
        bad.append(f"map(base_point) = {img0} is not 0")
    samples = sample_boundary(domain, cert.n_boundary_samples, cert.seed)
    mods = np.abs(np.linalg.norm(cert.map.apply(samples), axis=-1))
    if mods.min() < cert.a - tol:
        bad.append(f"boundary image modulus {mods.min():.9g} below a={cert.a:.9g}")
    if mods.max() > cert.b + tol:
        bad.append(f"boundary image modulus {mods.max():.9g} above b={cert.b:.9g}")
    return bad


def _tangent_ball_radii(domain: Domain, q: np.ndarray, nu: np.ndarray,
                        boundary: np.ndarray, d_anchor: float):
    """Largest inner / smallest outer tangent-ball radii at boundary point q.

    Both balls have centers on the inward normal q - r nu and are found by
    bisection of the containment predicate against boundary samples.
    """
    R = domain.bounding_radius
    tol = 1e-7 * max(R, 1.0)

    def center(r):
        return q - r * nu

    def inner_ok(r):
        c = center(r)
        return float(np.min(np.linalg.norm(boundary - c, axis=-1))) >= r - tol

    def outer_ok(r):
        c = center(r)
        return float(np.max(np.linalg.norm(boundary - c, axis=-1))) <= r + tol

    # inner: feasible at r = d(anchor line), infeasible at 2R
    lo, hi = max(d_anchor, 1e-12), 2.0 * R
    if not inner_ok(lo):
        lo = 0.5 * lo
        if not inner_ok(lo):
            raise GeometryError("inner tangent-ball bisection failed at its seed radius")
    if inner_ok(hi):
        a_q = hi
    else:
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if inner_ok(mid):
                lo = mid
            else:
                hi = mid
        a_q = lo

    # outer: grow until the ball swallows every boundary sample
    hi = max(d_anchor, R)
    grow = 0
    while not outer_ok(hi):
        hi *= 2.0
        grow += 1
        if grow > 40:
            raise GeometryError(
                "outer tangent-ball bisection failed; boundary is flat near the "
                "base normal (domain not strongly convex)")
    lo = a_q
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if outer_ok(mid):
            hi = mid
        else:
            lo = mid
    b_q = hi
    return a_q, b_q


def convex_squeeze_map(domain: Domain, x, n_boundary_samples: int = 1024,
                       seed: int = 0) -> tuple[BiholoMap, SqueezingCertificate]:
    """Squeezing coordinate at x for a strongly convex domain.

    Construction: find the nearest boundary point q and the inner/outer
    tangent balls at q along the inward normal; recenter x to 0 with the
    ball automorphism of the inner tangent ball (conjugated by its
    normalization).  The image then contains B_a(0) with a the inner radius
    and sits inside a ball of at most twice the outer radius; the certificate
    records the radii measured on mapped boundary samples.
    """
    if not domain.convex:
        raise GeometryError("convex_squeeze_map requires a convex domain")
    pt = as_points(x, domain.dim)
    if pt.ndim != 1:
        raise ValueError("expected a single base point")
    if not bool(contains(domain, pt)):
        raise ValueError("base point is not interior")

    q, d = nearest_boundary_point(domain, pt)
    if d < 1e-10:
        raise GeometryError("base point is numerically on the boundary")
    nu = (q - pt) / d

    n_samp = max(int(n_boundary_samples), 1000)
    boundary = sample_boundary(domain, n_samp, seed)
    a_q, b_q = _tangent_ball_radii(domain, q, nu, boundary, d)

    c_in = q - a_q * nu
    w = (pt - c_in) / a_q
    if np.linalg.norm(w) >= 1.0:
        w = w * (1.0 - 1e-12) / np.linalg.norm(w)
    mapping = Composition(
        [AffineMap.scaling(domain.dim, 1.0 / a_q, offset=-c_in / a_q),
         BallMobius(w),
         AffineMap.scaling(domain.dim, a_q)],
        kind=MapKind.CONVEX_SQUEEZE)

    mods = np.linalg.norm(mapping.apply(boundary), axis=-1)
    a = float(mods.min())
    b = float(mods.max())
    if not 0 < a <= b:
        raise GeometryError(f"degenerate certificate radii (a={a}, b={b})")
    if b > 2.0 * b_q * (1.0 + 1e-6):
        raise GeometryError(
            f"outer radius {b:.6g} exceeds the doubled tangent bound {2*b_q:.6g}")
    cert = SqueezingCertificate(
        base_point=pt, map=mapping, a=a, b=b,
        n_boundary_samples=n_samp, seed=seed,
        inner_tangent_radius=a_q, outer_tangent_radius=b_q)
    return mapping, cert


def squeezing_map(domain: Domain, x, n_boundary_samples: int = 1024,
                  seed: int = 0) -> tuple[BiholoMap, SqueezingCertificate]:
    """Squeezing coordinate at x: model automorphisms where available,
    the convex tangent-ball construction otherwise."""
    pt = as_points(x, domain.dim)
    kind = domain.model_kind
    mapping = None
    if kind in (ModelKind.DISC, ModelKind.BALL):
        r = domain.radius
        scale = AffineMap.scaling(domain.dim, 1.0 / r)
        w = pt / r
        recenter = (DiscMobius(complex(w[0])) if domain.dim == 1
                    else BallMobius(w))
        mapping = Composition([scale, recenter], kind=recenter.kind)
    elif kind == ModelKind.POLYDISC:
        scale = AffineMap(np.diag(1.0 / np.asarray(domain.radii, dtype=np.complex128)))
        mapping = Composition([scale, PolydiscMobius(scale.apply(pt))],
                              kind=MapKind.POLYDISC_MOBIUS)
    if mapping is not None:
        n_samp = max(int(n_boundary_samples), 1000)
        boundary = sample_boundary(domain, n_samp, seed)
        mods = np.linalg.norm(mapping.apply(boundary), axis=-1)
        cert = SqueezingCertificate(
            base_point=pt, map=mapping, a=float(mods.min()), b=float(mods.max()),
            n_boundary_samples=n_samp, seed=seed,
            inner_tangent_radius=1.0, outer_tangent_radius=1.0)
        return mapping, cert
    if domain.convex:
        return convex_squeeze_map(domain, pt, n_boundary_samples, seed)
    raise GeometryError(
        f"no squeezing construction for non-convex kind {kind.value!r}")
