"""Bergman kernel, metric and curvature by L2 orthonormalization of monomials.

The square-integrable holomorphic functions on a bounded domain are
approximated by polynomials of bounded total degree.  Their Gram matrix under
the domain's volume measure is estimated by quasi-Monte Carlo quadrature over
the bounding box; the inverse Cholesky factor turns the monomials into an
orthonormal family, whose diagonal sum is the truncated kernel

    K_D(z, w) = m(z) G^{-1} conj(m(w))^T.

All kernel derivatives are taken analytically on the monomial basis.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from itertools import combinations_with_replacement

import numpy as np
from scipy.linalg.lapack import zpotrf, zpstrf
from scipy.stats import qmc

from .domains import Domain, GeometryError, as_points, boundary_distance, contains
from .mappings import SqueezingCertificate

_CHUNK = 65536


@dataclass(frozen=True)
class MonomialBasis:
    """All multi-indices alpha with |alpha| <= degree, in graded-lex order."""

    dim: int
    degree: int
    indices: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        if self.indices is None:
            idx = []
            for total in range(self.degree + 1):
                block = []
                for combo in combinations_with_replacement(range(self.dim), total):
                    alpha = [0] * self.dim
                    for c in combo:
                        alpha[c] += 1
                    block.append(alpha)
                idx.extend(sorted(block, reverse=True))
            object.__setattr__(self, "indices",
                               np.asarray(idx, dtype=np.int64).reshape(-1, self.dim))

    @property
    def size(self) -> int:
        return self.indices.shape[0]

    def evaluate(self, z: np.ndarray, shift: np.ndarray | None = None) -> np.ndarray:
        """Monomial values z^alpha (optionally derivative-shifted), shape (..., N)."""
        pts = as_points(z, self.dim)
        powers = [np.ones(pts.shape[:-1] + (self.degree + 1,), dtype=np.complex128)
                  for _ in range(self.dim)]
        for j in range(self.dim):
            for k in range(1, self.degree + 1):
                powers[j][..., k] = powers[j][..., k - 1] * pts[..., j]
        out = np.ones(pts.shape[:-1] + (self.size,), dtype=np.complex128)
        for j in range(self.dim):
            out *= powers[j][..., self.indices[:, j]]
        return out

    def evaluate_deriv(self, z: np.ndarray, orders: np.ndarray) -> np.ndarray:
        """Values of d^orders (z^alpha): falling factorial times z^(alpha-orders)."""
        pts = as_points(z, self.dim)
        alpha = self.indices
        shifted = alpha - orders
        valid = np.all(shifted >= 0, axis=1)
        coef = np.ones(self.size)
        for j in range(self.dim):
            o = int(orders[j])
            for step in range(o):
                coef = coef * np.where(valid, alpha[:, j] - step, 0)
        out = np.zeros(pts.shape[:-1] + (self.size,), dtype=np.complex128)
        if not np.any(valid):
            return out
        sub = np.clip(shifted, 0, None)
        powers = [None] * self.dim
        maxdeg = int(sub.max()) if sub.size else 0
        for j in range(self.dim):
            p = np.ones(pts.shape[:-1] + (maxdeg + 1,), dtype=np.complex128)
            for k in range(1, maxdeg + 1):
                p[..., k] = p[..., k - 1] * pts[..., j]
            powers[j] = p
        vals = np.ones(pts.shape[:-1] + (self.size,), dtype=np.complex128)
        for j in range(self.dim):
            vals *= powers[j][..., sub[:, j]]
        out = vals * coef
        return out


@dataclass(frozen=True)
class QuadratureSet:
    """Accepted box-quadrature points and the weight of each point."""

    points: np.ndarray          # (m, n) accepted interior points
    box_volume: float
    total_count: int
    seed: int

    @property
    def weight(self) -> float:
        # integral ~ weight * sum over accepted points
        return self.box_volume / self.total_count

    @property
    def accept_count(self) -> int:
        return self.points.shape[0]


def box_quadrature(domain: Domain, count: int, seed: int) -> QuadratureSet:
    """Scrambled-Halton points in the bounding box, filtered to the domain."""
    eng = qmc.Halton(d=2 * domain.dim, scramble=True, seed=seed)
    R = domain.bounding_radius
    kept = []
    done = 0
    while done < count:
        take = min(_CHUNK, count - done)
        u = eng.random(take)
        pts = (2.0 * u - 1.0) * R
        z = pts[:, 0::2] + 1j * pts[:, 1::2]
        kept.append(z[domain.rho(z) < 0])
        done += take
    points = np.concatenate(kept, axis=0)
    return QuadratureSet(points=points, box_volume=(2.0 * R) ** (2 * domain.dim),
                         total_count=count, seed=seed)


@dataclass(frozen=True)
class GramMatrix:
    """Hermitian Gram matrix G_ab = integral of z^a conj(z^b) over the domain."""

    matrix: np.ndarray
    basis: MonomialBasis
    quadrature_count: int
    seed: int
    accept_count: int
    box_volume: float

    def __post_init__(self):
        herm = np.abs(self.matrix - self.matrix.conj().T).max()
        if herm > 1e-12 * max(1.0, np.abs(self.matrix).max()):
            raise GeometryError(f"Gram matrix not Hermitian (defect {herm:.3e})")


def gram_matrix(domain: Domain, degree: int, count: int, seed: int) -> GramMatrix:
    """Quasi-Monte Carlo Gram matrix of the monomial basis.

    The estimate is (box volume) * mean over all box points of the indicator
    times z^a conj(z^b); accumulation is chunked in a fixed order, so the
    result is reproducible bit for bit for a given seed.
    """
    if degree < 0:
        raise ValueError("degree must be >= 0")
    if count < 1000:
        raise ValueError("count must be >= 1000")
    basis = MonomialBasis(domain.dim, degree)
    quad = box_quadrature(domain, count, seed)
    pts = quad.points
    G = np.zeros((basis.size, basis.size), dtype=np.complex128)
    for start in range(0, pts.shape[0], _CHUNK):
        block = basis.evaluate(pts[start:start + _CHUNK])
        G += block.conj().T @ block
    G *= quad.weight
    G = 0.5 * (G + G.conj().T)
    _, info = zpotrf(G, lower=1)
    if info > 0:
        raise GeometryError(
            f"Gram matrix is not positive definite: leading minor of order "
            f"{info} failed (degree {degree} too high for {count} points)")
    if info < 0:
        raise GeometryError(f"Cholesky failed with LAPACK code {info}")
    return GramMatrix(matrix=G, basis=basis, quadrature_count=count, seed=seed,
                      accept_count=quad.accept_count, box_volume=quad.box_volume)


@dataclass(frozen=True)
class KernelEvaluator:
    """Orthonormalized polynomial family and the kernel it reproduces.

    `coeff` has one column per orthonormal function: phi_i = sum_a C[a, i] z^a.
    The kernel matrix A = C C^H satisfies K(z, w) = m(z) A conj(m(w))^T.
    """

    basis: MonomialBasis
    coeff: np.ndarray
    kept: np.ndarray
    quadrature_count: int
    seed: int

    @property
    def kernel_matrix(self) -> np.ndarray:
        return self.coeff @ self.coeff.conj().T

    @property
    def dropped(self) -> np.ndarray:
        all_idx = np.arange(self.basis.size)
        return np.setdiff1d(all_idx, self.kept)


def orthonormalize(G: GramMatrix, drop_tol_factor: float = 1e-10) -> KernelEvaluator:
    """Inverse-Cholesky orthonormalization with pivoted rank control.

    Pivoted Cholesky drops basis elements whose pivot falls below
    drop_tol_factor * trace(G); any drop is reported as a warning and recorded
    on the evaluator, never silent.
    """
    A = np.asfortranarray(G.matrix)
    n = A.shape[0]
    tol = drop_tol_factor * float(np.real(np.trace(G.matrix)))
    c, piv, rank, info = zpstrf(A, lower=0, tol=tol)
    if info < 0:
        raise GeometryError(f"pivoted Cholesky failed with LAPACK code {info}")
    if rank == 0:
        raise GeometryError("Gram matrix is numerically zero")
    piv = piv - 1                     # LAPACK pivots are 1-based
    kept = piv[:rank]
    U = np.triu(c)[:rank, :rank]      # G[kept][:, kept] = U^H U
    Cinv = np.linalg.inv(U)           # columns orthonormalize the kept monomials
    coeff = np.zeros((n, rank), dtype=np.complex128)
    coeff[kept, :] = Cinv
    if rank < n:
        warnings.warn(
            f"orthonormalize: dropped {n - rank} ill-conditioned basis "
            f"elements (indices {np.sort(np.setdiff1d(np.arange(n), kept)).tolist()})",
            RuntimeWarning, stacklevel=2)
    ev = KernelEvaluator(basis=G.basis, coeff=coeff, kept=np.sort(kept),
                         quadrature_count=G.quadrature_count, seed=G.seed)
    resid = coeff.conj().T @ G.matrix @ coeff - np.eye(rank)
    if np.abs(resid).max() > 1e-8:
        raise GeometryError(
            f"orthonormality residual {np.abs(resid).max():.3e} exceeds 1e-8")
    return ev


def build_evaluator(domain: Domain, degree: int, count: int, seed: int) -> KernelEvaluator:
    """Convenience: Gram matrix plus orthonormalization in one call."""
    return orthonormalize(gram_matrix(domain, degree, count, seed))


def kernel(ev: KernelEvaluator, z, w) -> complex:
    """Truncated kernel K_D(z, w); Hermitian in (z, w) by construction."""
    mz = ev.basis.evaluate(as_points(z, ev.basis.dim))
    mw = ev.basis.evaluate(as_points(w, ev.basis.dim))
    val = np.einsum("...a,ab,...b->...", mz, ev.kernel_matrix, mw.conj())
    if val.ndim == 0:
        return complex(val)
    return val


def kernel_diag(ev: KernelEvaluator, z) -> np.ndarray:
    """K_D(z, z) for a batch of points (real and positive on the domain)."""
    mz = ev.basis.evaluate(as_points(z, ev.basis.dim))
    phi = mz @ ev.coeff
    return (np.abs(phi) ** 2).sum(axis=-1)


def bergman_metric_matrix(ev: KernelEvaluator, z) -> np.ndarray:
    """Complex Hessian of log K at z, shape (n, n), Hermitian positive."""
    n = ev.basis.dim
    pt = as_points(z, n)
    A = ev.kernel_matrix
    m0 = ev.basis.evaluate(pt)
    K = float(np.real(np.einsum("a,ab,b->", m0, A, m0.conj())))
    if K <= 0:
        raise GeometryError(f"kernel K(z,z) = {K:.3e} is not positive at {pt}")
    d1 = np.empty((n, m0.shape[-1]), dtype=np.complex128)
    for i in range(n):
        orders = np.zeros(n, dtype=np.int64)
        orders[i] = 1
        d1[i] = ev.basis.evaluate_deriv(pt, orders)
    Ki = d1 @ A @ m0.conj()                       # (n,)
    Kij = d1 @ A @ d1.conj().T                    # (n, n)
    g = (K * Kij - np.outer(Ki, Ki.conj())) / K ** 2
    return 0.5 * (g + g.conj().T)


def bergman_metric(ev: KernelEvaluator, z, v) -> float:
    """Metric value g(z; v, conj(v)) = sum_ij v_i conj(v_j) dd log K."""
    n = ev.basis.dim
    vv = as_points(v, n)
    g = bergman_metric_matrix(ev, z)
    val = float(np.real(np.einsum("i,ij,j->", vv, g, vv.conj())))
    if val <= 0:
        raise GeometryError(f"metric value {val:.3e} is not positive")
    return val


def _log_kernel_derivs_1d(ev: KernelEvaluator, z: complex):
    """Mixed derivatives of log K up to order (2, 2) for dim 1.

    Treats K(x, y) = sum A_kl x^k y^l with x = z and y = conj(z) as a function
    of independent variables; returns the table L[p][q] of d^p_x d^q_y log K.
    """
    A = ev.kernel_matrix
    k = ev.basis.indices[:, 0].astype(np.float64)
    x = complex(z)
    y = np.conj(x)

    def falling(e, p):
        out = np.ones_like(e)
        for step in range(p):
            out = out * np.clip(e - step, 0, None)
        return out

    def powvec(base, e, p):
        expo = np.clip(e - p, 0, None)
        return falling(e, p) * base ** expo

    F = {}
    for p in range(3):
        xp = powvec(x, k, p)
        for q in range(3):
            yq = powvec(y, k, q)
            F[(p, q)] = complex(xp @ A @ yq)

    f = F[(0, 0)]
    L = {}
    L[(1, 0)] = F[(1, 0)] / f
    L[(0, 1)] = F[(0, 1)] / f
    L[(1, 1)] = F[(1, 1)] / f - F[(1, 0)] * F[(0, 1)] / f ** 2
    L[(2, 1)] = (F[(2, 1)] / f - F[(1, 1)] * F[(1, 0)] / f ** 2
                 - (F[(2, 0)] * F[(0, 1)] + F[(1, 0)] * F[(1, 1)]) / f ** 2
                 + 2 * F[(1, 0)] ** 2 * F[(0, 1)] / f ** 3)
    L[(1, 2)] = (F[(1, 2)] / f - F[(1, 1)] * F[(0, 1)] / f ** 2
                 - (F[(0, 2)] * F[(1, 0)] + F[(0, 1)] * F[(1, 1)]) / f ** 2
                 + 2 * F[(0, 1)] ** 2 * F[(1, 0)] / f ** 3)
    L[(2, 2)] = (F[(2, 2)] / f
                 - (2 * F[(2, 1)] * F[(0, 1)] + 2 * F[(1, 2)] * F[(1, 0)]
                    + 2 * F[(1, 1)] ** 2 + F[(2, 0)] * F[(0, 2)]) / f ** 2
                 + (8 * F[(1, 0)] * F[(0, 1)] * F[(1, 1)]
                    + 2 * F[(2, 0)] * F[(0, 1)] ** 2
                    + 2 * F[(1, 0)] ** 2 * F[(0, 2)]) / f ** 3
                 - 6 * F[(1, 0)] ** 2 * F[(0, 1)] ** 2 / f ** 4)
    return L


def bergman_curvature_1d(ev: KernelEvaluator, z) -> float:
    """Curvature of the metric lambda = dd log K in dim 1.

    Normalized as -(dd log lambda)/lambda, so the unit-disc metric has
    constant value -1 (its Einstein constant in the complex-Hessian
    convention).
    """
    if ev.basis.dim != 1:
        raise GeometryError("curvature is implemented for dim 1 only")
    pt = as_points(z, 1)
    L = _log_kernel_derivs_1d(ev, complex(pt[0]))
    lam = L[(1, 1)]
    if np.real(lam) <= 0:
        raise GeometryError("metric coefficient is not positive")
    kappa = -np.real((lam * L[(2, 2)] - L[(2, 1)] * L[(1, 2)]) / lam ** 3)
    return float(kappa)


def unit_ball_volume(n: int) -> float:
    """Euclidean volume of the unit ball in C^n (pi^n / n!)."""
    return math.pi ** n / math.factorial(n)


@dataclass(frozen=True)
class CenterBoundsReport:
    """Kernel value at a squeezing base point against its mean-value bounds."""

    value: float
    lower: float
    upper: float
    slack: float
    lower_margin: float     # (value - lower) / lower
    upper_margin: float     # (upper - value) / upper
    passed: bool


def kernel_center_bounds_check(ev: KernelEvaluator, cert: SqueezingCertificate,
                               slack: float = 0.05) -> CenterBoundsReport:
    """Check 1/(b^2n vol B_1) <= K(0, 0) <= 1/(a^2n vol B_1).

    The evaluator must be built on the squeezing image of the domain, where
    the certificate base point sits at the origin between the balls of radii
    a and b.
    """
    n = ev.basis.dim
    zero = np.zeros(n, dtype=np.complex128)
    value = float(np.real(kernel(ev, zero, zero)))
    vol1 = unit_ball_volume(n)
    lower = 1.0 / (cert.b ** (2 * n) * vol1)
    upper = 1.0 / (cert.a ** (2 * n) * vol1)
    lo_margin = (value - lower) / lower
    hi_margin = (upper - value) / upper
    passed = value >= lower * (1 - slack) and value <= upper * (1 + slack)
    return CenterBoundsReport(value=value, lower=lower, upper=upper, slack=slack,
                              lower_margin=lo_margin, upper_margin=hi_margin,
                              passed=passed)


@dataclass(frozen=True)
class GrowthReport:
    """Kernel growth along a ray to the boundary: rows of (d, K, K d^2 log^2 d)."""

    distances: np.ndarray
    kernel_values: np.ndarray
    products: np.ndarray
    min_product: float


def boundary_growth(domain: Domain, ray, ev: KernelEvaluator) -> GrowthReport:
    """Tabulate K(z,z) d^2 (-log d)^2 along a ray approaching the boundary.

    The ray must be ordered by strictly decreasing boundary distance, every
    point interior, and all distances below 1 (rescale the domain into the
    unit ball first, or the log factor changes sign).
    """
    pts = as_points(ray, domain.dim)
    if pts.ndim != 2 or pts.shape[0] < 1:
        raise ValueError("ray must be a nonempty list of points")
    ds = []
    for p in pts:
        if not bool(contains(domain, p)):
            raise ValueError("ray point outside the domain")
        ds.append(boundary_distance(domain, p))
    ds = np.asarray(ds)
    if np.any(np.diff(ds) >= 0):
        raise ValueError("ray must have strictly decreasing boundary distance")
    if ds.max() >= 1.0:
        raise ValueError("boundary distance >= 1 flips the log factor; "
                         "rescale the domain into the unit ball")
    Ks = kernel_diag(ev, pts)
    prod = Ks * ds ** 2 * np.log(ds) ** 2
    return GrowthReport(distances=ds, kernel_values=Ks, products=prod,
                        min_product=float(prod.min()))


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

_MAGIC = "squeezelab-kernel v1"


def save_evaluator(ev: KernelEvaluator, path: str) -> None:
    """Plain-text format: header, kept indices, then the coefficient matrix
    row-major with 17 significant digits per real component."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(_MAGIC + "\n")
        fh.write(f"dim={ev.basis.dim} degree={ev.basis.degree} "
                 f"seed={ev.seed} count={ev.quadrature_count} "
                 f"size={ev.basis.size} rank={ev.coeff.shape[1]}\n")
        fh.write(" ".join(str(int(k)) for k in ev.kept) + "\n")
        for row in ev.coeff:
            fh.write(" ".join(f"{c.real:.17g} {c.imag:.17g}" for c in row) + "\n")


def load_evaluator(path: str) -> KernelEvaluator:
    with open(path, "r", encoding="utf-8") as fh:
        magic = fh.readline().strip()
        if magic != _MAGIC:
            raise ValueError(f"not a kernel file (header {magic!r})")
        header = dict(kv.split("=") for kv in fh.readline().split())
        dim = int(header["dim"])
        degree = int(header["degree"])
        size = int(header["size"])
        rank = int(header["rank"])
        kept = np.array([int(t) for t in fh.readline().split()], dtype=np.int64)
        coeff = np.zeros((size, rank), dtype=np.complex128)
        for i in range(size):
            vals = [float(t) for t in fh.readline().split()]
            coeff[i] = [complex(vals[2 * j], vals[2 * j + 1]) for j in range(rank)]
    basis = MonomialBasis(dim, degree)
    if basis.size != size:
        raise ValueError("basis size mismatch in kernel file")
    return KernelEvaluator(basis=basis, coeff=coeff, kept=kept,
                           quadrature_count=int(header["count"]),
                           seed=int(header["seed"]))
