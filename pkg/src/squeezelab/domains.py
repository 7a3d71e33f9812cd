"""Bounded domains in C^n: defining functions, samplers and boundary geometry.

A domain is the sublevel set {rho < 0} of a real-valued defining function on
C^n, together with a bounding radius R such that the domain sits inside the
Euclidean ball B_R(0).  Model kinds (disc, ball, polydisc, ellipsoid) carry
closed-form boundary distances; generic kinds fall back to direction-sampled
ray bisection.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import brentq, minimize
from scipy.stats import qmc


class GeometryError(RuntimeError):
    """Numerical failure in a geometric construction (bracketing, degeneracy)."""


class ModelKind(enum.Enum):
    DISC = "disc"
    BALL = "ball"
    POLYDISC = "polydisc"
    ELLIPSOID = "ellipsoid"
    GENERIC_CONVEX = "generic_convex"
    GENERIC = "generic"


def as_points(z, dim: int) -> np.ndarray:
    """Coerce scalars / sequences to a complex array with trailing axis `dim`."""
    arr = np.asarray(z, dtype=np.complex128)
    if dim == 1 and (arr.ndim == 0 or arr.shape[-1] != 1):
        arr = arr[..., np.newaxis]
    if arr.shape[-1] != dim:
        raise ValueError(f"expected points in C^{dim}, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("non-finite point coordinates")
    return arr


def unit_direction(v, dim: int) -> np.ndarray:
    """Normalize a tangent vector to Euclidean unit length."""
    w = as_points(v, dim)
    nrm = np.linalg.norm(w)
    if nrm == 0:
        raise ValueError("zero direction vector")
    return w / nrm


@dataclass(frozen=True)
class Domain:
    """A bounded domain {rho < 0} in C^n.

    `rho` and `rho_components` are vectorized over a leading batch axis; a
    point is interior iff every component is negative.  `grad_components`
    returns the complex gradient g with d(rho_c) = Re(conj(g) . dz), i.e.
    g_j = d(rho_c)/dx_j + i d(rho_c)/dy_j.
    """

    dim: int
    bounding_radius: float
    model_kind: ModelKind
    convex: bool
    label: str
    _components: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    _grads: Optional[Callable[[np.ndarray], np.ndarray]] = field(repr=False, default=None)
    radius: float = 1.0
    radii: tuple = ()
    coeffs: tuple = ()

    def rho_components(self, z) -> np.ndarray:
        pts = as_points(z, self.dim)
        return self._components(pts)

    def rho(self, z) -> np.ndarray:
        comps = self.rho_components(z)
        return comps.max(axis=-1)

    def grad_components(self, z) -> np.ndarray:
        """Complex gradients of each defining component, shape (..., m, n)."""
        pts = as_points(z, self.dim)
        if self._grads is not None:
            return self._grads(pts)
        return _fd_grad_components(self._components, pts, self.dim)

    def pushforward(self, mapping, bounding_radius: float, label: str = "") -> "Domain":
        """The image domain under a biholomorphic map, defined via the inverse."""
        inv = mapping.inverse()

        def comps(zeta):
            return self._components(inv(zeta))

        def grads(zeta):
            z = inv(zeta)
            g = self.grad_components(z)              # (..., m, n)
            J = inv.jacobian_matrix(zeta)            # (..., n, n), dz = J dzeta
            return np.einsum("...mi,...ik->...mk", g, J.conj())

        return Domain(
            dim=self.dim,
            bounding_radius=float(bounding_radius),
            model_kind=ModelKind.GENERIC,
            convex=False,
            label=label or f"image({self.label})",
            _components=comps,
            _grads=grads,
        )


def _fd_grad_components(components, pts, dim, h=1e-7):
    base_shape = pts.shape[:-1]
    m = components(pts).shape[-1]
    out = np.zeros(base_shape + (m, dim), dtype=np.complex128)
    for j in range(dim):
        for part, unit in ((1.0, 1.0), (1j, 1j)):
            zp = pts.copy()
            zm = pts.copy()
            zp[..., j] += h * unit
            zm[..., j] -= h * unit
            d = (components(zp) - components(zm)) / (2 * h)
            out[..., :, j] += d * part
    return out


# ---------------------------------------------------------------------------
# model constructors
# ---------------------------------------------------------------------------

def disc(radius: float = 1.0) -> Domain:
    """The disc {|z| < radius} in C."""
    return ball(1, radius)


def ball(dim: int, radius: float = 1.0) -> Domain:
    """The Euclidean ball {|z| < radius} in C^dim."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    r2 = radius * radius

    def comps(z):
        return ((np.abs(z) ** 2).sum(axis=-1) - r2)[..., np.newaxis]

    def grads(z):
        return 2.0 * z[..., np.newaxis, :]

    kind = ModelKind.DISC if dim == 1 else ModelKind.BALL
    name = f"disc(r={radius:g})" if dim == 1 else f"ball{dim}(r={radius:g})"
    return Domain(dim, radius, kind, True, name, comps, grads, radius=radius)


def polydisc(radii: Sequence[float]) -> Domain:
    """The polydisc {|z_i| < r_i}, one defining component per factor."""
    rs = tuple(float(r) for r in radii)
    if any(r <= 0 for r in rs):
        raise ValueError("polydisc radii must be positive")
    rarr = np.asarray(rs)
    dim = len(rs)

    def comps(z):
        return np.abs(z) - rarr

    def grads(z):
        a = np.abs(z)
        with np.errstate(invalid="ignore", divide="ignore"):
            u = np.where(a > 0, z / np.where(a > 0, a, 1.0), 1.0)
        out = np.zeros(z.shape[:-1] + (dim, dim), dtype=np.complex128)
        idx = np.arange(dim)
        out[..., idx, idx] = u
        return out

    R = float(np.linalg.norm(rarr))
    return Domain(dim, R, ModelKind.POLYDISC, True,
                  f"polydisc({','.join(f'{r:g}' for r in rs)})",
                  comps, grads, radii=rs)


def ellipsoid(coeffs: Sequence[float]) -> Domain:
    """The ellipsoid {sum_i c_i |z_i|^2 < 1} for positive coefficients c_i."""
    cs = tuple(float(c) for c in coeffs)
    if any(c <= 0 for c in cs):
        raise ValueError("ellipsoid coefficients must be positive")
    carr = np.asarray(cs)
    dim = len(cs)

    def comps(z):
        return ((np.abs(z) ** 2 * carr).sum(axis=-1) - 1.0)[..., np.newaxis]

    def grads(z):
        return (2.0 * carr * z)[..., np.newaxis, :]

    R = 1.0 / math.sqrt(min(cs))
    return Domain(dim, R, ModelKind.ELLIPSOID, True,
                  f"ellipsoid({','.join(f'{c:g}' for c in cs)})",
                  comps, grads, coeffs=cs)


def generic_domain(rho: Callable[[np.ndarray], np.ndarray], dim: int,
                   bounding_radius: float, convex: bool = False,
                   grad: Optional[Callable[[np.ndarray], np.ndarray]] = None,
                   label: str = "generic") -> Domain:
    """A domain given by an arbitrary vectorized defining function."""

    def comps(z):
        return np.asarray(rho(z))[..., np.newaxis]

    grads = None
    if grad is not None:
        def grads(z):
            return np.asarray(grad(z))[..., np.newaxis, :]

    kind = ModelKind.GENERIC_CONVEX if convex else ModelKind.GENERIC
    return Domain(dim, float(bounding_radius), kind, convex, label, comps, grads)


# ---------------------------------------------------------------------------
# membership and boundary geometry
# ---------------------------------------------------------------------------

def contains(domain: Domain, z) -> np.ndarray:
    """True iff rho(z) < 0 (vectorized)."""
    return domain.rho(z) < 0


def _real_view(z: np.ndarray) -> np.ndarray:
    out = np.empty(z.shape[:-1] + (2 * z.shape[-1],))
    out[..., 0::2] = z.real
    out[..., 1::2] = z.imag
    return out


def _complex_view(u: np.ndarray) -> np.ndarray:
    return u[..., 0::2] + 1j * u[..., 1::2]


def _spread_directions(dim: int, count: int, seed: int = 0) -> np.ndarray:
    """Well-spread unit directions on the sphere in R^{2 dim}."""
    eng = qmc.Halton(d=2 * dim, scramble=True, seed=seed)
    # inverse-normal map of low-discrepancy points gives a spread sphere cover
    from scipy.special import ndtri
    u = eng.random(count)
    g = ndtri(np.clip(u, 1e-12, 1 - 1e-12))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    axes = np.concatenate([np.eye(2 * dim), -np.eye(2 * dim)], axis=0)
    return np.concatenate([axes, g], axis=0)


def _ray_exit(domain: Domain, anchor: np.ndarray, dirs: np.ndarray,
              iters: int = 80) -> np.ndarray:
    """Exit parameter t with rho(anchor + t*dir) = 0, one per direction."""
    m = dirs.shape[0]
    t_hi = np.full(m, np.linalg.norm(_real_view(anchor)) + domain.bounding_radius + 1.0)
    pts_hi = anchor + _complex_view(t_hi[:, None] * dirs)
    if not np.all(domain.rho(pts_hi) > 0):
        raise GeometryError("ray bisection failed to bracket the boundary")
    t_lo = np.zeros(m)
    for _ in range(iters):
        t_mid = 0.5 * (t_lo + t_hi)
        inside = domain.rho(anchor + _complex_view(t_mid[:, None] * dirs)) < 0
        t_lo = np.where(inside, t_mid, t_lo)
        t_hi = np.where(inside, t_hi, t_mid)
    return 0.5 * (t_lo + t_hi)


def _ellipsoid_nearest(domain: Domain, z: np.ndarray):
    """Exact nearest boundary point of an ellipsoid via the projection equation."""
    cs = np.repeat(np.asarray(domain.coeffs), 2)
    alpha2 = 1.0 / cs                       # squared semi-axes per real coord
    u = _real_view(z)
    amin2 = alpha2.min()
    if np.linalg.norm(u) < 1e-14:
        q = np.zeros_like(u)
        q[2 * int(np.argmax(domain.coeffs))] = math.sqrt(amin2)
        qc = _complex_view(q)
        return qc, float(np.linalg.norm(u - q))
    # nearest point q_i = alpha_i^2 u_i / (alpha_i^2 + lam) with g(lam) = 1
    uu = u * u

    def g(lam):
        return float((uu * alpha2 / (alpha2 + lam) ** 2).sum())

    lo = -amin2 * (1.0 - 1e-12)
    if g(lo) < 1.0:
        # point has no component on the shortest axes; nudge deterministically
        u = u.copy()
        u[2 * int(np.argmax(domain.coeffs))] += 1e-12 * math.sqrt(amin2)
        uu = u * u
    lam = brentq(lambda t: g(t) - 1.0, lo, 0.0, xtol=1e-15, rtol=8.9e-16)
    q = alpha2 * u / (alpha2 + lam)
    return _complex_view(q), float(np.linalg.norm(u - q))


def nearest_boundary_point(domain: Domain, z) -> tuple[np.ndarray, float]:
    """Nearest point of the boundary and its Euclidean distance.

    Closed form for model kinds; for generic kinds the minimum over sampled
    directions, polished with a constrained projection when a gradient is
    available.  Ties are resolved by the first direction found.
    """
    pt = as_points(z, domain.dim)
    if pt.ndim != 1:
        raise ValueError("nearest_boundary_point expects a single point")
    if not bool(contains(domain, pt)):
        raise ValueError("point is not interior to the domain")
    kind = domain.model_kind
    if kind in (ModelKind.DISC, ModelKind.BALL):
        r = domain.radius
        nz = np.linalg.norm(_real_view(pt))
        if nz < 1e-14:
            q = np.zeros(domain.dim, dtype=np.complex128)
            q[0] = r
            return q, r
        return pt * (r / nz), float(r - nz)
    if kind == ModelKind.POLYDISC:
        gaps = np.asarray(domain.radii) - np.abs(pt)
        i = int(np.argmin(gaps))
        q = pt.copy()
        q[i] = domain.radii[i] * (pt[i] / abs(pt[i]) if abs(pt[i]) > 1e-14 else 1.0)
        return q, float(gaps[i])
    if kind == ModelKind.ELLIPSOID:
        return _ellipsoid_nearest(domain, pt)
    return _generic_nearest(domain, pt)


def _generic_nearest(domain: Domain, pt: np.ndarray):
    dirs = _spread_directions(domain.dim, max(64, 16 * domain.dim * domain.dim))
    t = _ray_exit(domain, pt, dirs)
    i = int(np.argmin(t))
    q0 = pt + _complex_view(t[i] * dirs[i])
    x0 = _real_view(q0)
    p0 = _real_view(pt)

    def obj(u):
        d = u - p0
        return float(d @ d)

    def obj_grad(u):
        return 2.0 * (u - p0)

    def con(u):
        return float(domain.rho(_complex_view(u)))

    def con_grad(u):
        g = domain.grad_components(_complex_view(u))
        comps = domain.rho_components(_complex_view(u))
        gc = g[int(np.argmax(comps))]
        out = np.empty_like(u)
        out[0::2] = gc.real
        out[1::2] = gc.imag
        return out

    res = minimize(obj, x0, jac=obj_grad, method="SLSQP",
                   constraints=[{"type": "eq", "fun": con, "jac": con_grad}],
                   options={"maxiter": 80, "ftol": 1e-16})
    if res.success and res.fun <= obj(x0) * (1 + 1e-9):
        q = _complex_view(res.x)
        if abs(float(domain.rho(q))) < 1e-6:
            return q, float(math.sqrt(max(res.fun, 0.0)))
    return q0, float(t[i])


def boundary_distance(domain: Domain, z) -> float:
    """Euclidean distance from an interior point to the boundary."""
    _, d = nearest_boundary_point(domain, z)
    return d


# ---------------------------------------------------------------------------
# samplers
# ---------------------------------------------------------------------------

_MIN_ACCEPT = 1e-4


def _box_sampler(domain: Domain, seed: int) -> qmc.Halton:
    return qmc.Halton(d=2 * domain.dim, scramble=True, seed=seed)


def _to_box(u: np.ndarray, R: float) -> np.ndarray:
    return _complex_view((2.0 * u - 1.0) * R)


def sample_interior(domain: Domain, count: int, seed: int) -> np.ndarray:
    """Exactly `count` interior points from a seeded low-discrepancy sequence.

    Points of the scrambled Halton sequence in the bounding box are rejection
    filtered by rho < 0; the result is a deterministic function of
    (domain, count, seed).
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    eng = _box_sampler(domain, seed)
    out = []
    total = 0
    accepted = 0
    batch = max(4 * count, 4096)
    while accepted < count:
        pts = _to_box(eng.random(batch), domain.bounding_radius)
        mask = domain.rho(pts) < 0
        got = pts[mask]
        accepted += got.shape[0]
        total += batch
        out.append(got)
        if total >= 1_000_000 and accepted < _MIN_ACCEPT * total:
            raise GeometryError(
                f"degenerate domain: acceptance rate {accepted/total:.2e} < {_MIN_ACCEPT:g}")
    return np.concatenate(out, axis=0)[:count]


def estimate_volume(domain: Domain, count: int, seed: int) -> float:
    """Quasi-Monte Carlo volume estimate: box volume times acceptance rate."""
    eng = _box_sampler(domain, seed)
    pts = _to_box(eng.random(count), domain.bounding_radius)
    acc = float((domain.rho(pts) < 0).mean())
    return (2.0 * domain.bounding_radius) ** (2 * domain.dim) * acc


def interior_anchor(domain: Domain, seed: int = 0, probe: int = 256) -> np.ndarray:
    """A deep interior point: the probe sample with the most negative rho."""
    if domain.model_kind in (ModelKind.DISC, ModelKind.BALL,
                             ModelKind.POLYDISC, ModelKind.ELLIPSOID):
        return np.zeros(domain.dim, dtype=np.complex128)
    pts = sample_interior(domain, probe, seed)
    return pts[int(np.argmin(domain.rho(pts)))]


def sample_boundary(domain: Domain, count: int, seed: int) -> np.ndarray:
    """Boundary points found by ray bisection from an interior anchor.

    Returned points satisfy |rho| <= 1e-8; directions come from a seeded
    low-discrepancy sphere covering, so the output is deterministic.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    anchor = interior_anchor(domain, seed)
    eng = qmc.Halton(d=2 * domain.dim, scramble=True, seed=seed + 1)
    from scipy.special import ndtri
    g = ndtri(np.clip(eng.random(count), 1e-12, 1 - 1e-12))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    t = _ray_exit(domain, anchor, g)
    pts = anchor + _complex_view(t[:, None] * g)
    bad = np.abs(domain.rho(pts))
    if bad.max() > 1e-8:
        raise GeometryError("boundary bisection did not converge to |rho| <= 1e-8")
    return pts
