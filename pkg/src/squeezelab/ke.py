"""Closed-form Kaehler-Einstein metrics on model domains.

Convention: the Ricci tensor of a Hermitian metric g is
Ric = -dd log det g (complex Hessian of the log of the Hermitian
determinant).  The metrics here are normalized so that Ric = -(n+1) g, which
makes the ball potential -log(r^2 - |z|^2) Einstein with center value 1/r^2;
the polydisc product metric is rescaled by 2/(n+1) to satisfy the same
identity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .domains import Domain, GeometryError, ModelKind, as_points, contains


@dataclass(frozen=True)
class KEModelMetric:
    """A model domain carrying its closed-form Einstein metric."""

    model_kind: ModelKind
    dim: int
    radius: float = 1.0
    radii: tuple = ()

    @property
    def einstein_constant(self) -> float:
        return -(self.dim + 1)


def ke_for_domain(domain: Domain) -> KEModelMetric | None:
    """The model metric of a domain, or None when no closed form exists."""
    if domain.model_kind in (ModelKind.DISC, ModelKind.BALL):
        return KEModelMetric(domain.model_kind, domain.dim, radius=domain.radius)
    if domain.model_kind == ModelKind.POLYDISC:
        return KEModelMetric(ModelKind.POLYDISC, domain.dim, radii=domain.radii)
    return None


def _check_interior(model: KEModelMetric, pt: np.ndarray) -> None:
    if model.model_kind in (ModelKind.DISC, ModelKind.BALL):
        if (np.abs(pt) ** 2).sum() >= model.radius ** 2:
            raise ValueError("point outside the model ball")
    else:
        if np.any(np.abs(pt) >= np.asarray(model.radii)):
            raise ValueError("point outside the model polydisc")


def ke_metric_matrix(model: KEModelMetric, z) -> np.ndarray:
    """Hermitian metric tensor g_ij(z), shape (n, n)."""
    pt = as_points(z, model.dim)
    _check_interior(model, pt)
    n = model.dim
    if model.model_kind in (ModelKind.DISC, ModelKind.BALL):
        r2 = model.radius ** 2
        t = r2 - float((np.abs(pt) ** 2).sum())
        g = (np.eye(n) * t + np.outer(pt.conj(), pt)) / t ** 2
        return g
    # polydisc: scaled product of per-factor hyperbolic metrics
    scale = 2.0 / (n + 1)
    rs = np.asarray(model.radii)
    lam = scale * rs ** 2 / (rs ** 2 - np.abs(pt) ** 2) ** 2
    return np.diag(lam).astype(np.complex128)


def ke_metric(model: KEModelMetric, z, v) -> float:
    """Metric value g(z; v, conj(v)) for the model Einstein metric."""
    vv = as_points(v, model.dim)
    g = ke_metric_matrix(model, z)
    return float(np.real(np.einsum("i,ij,j->", vv, g, vv.conj())))


def ke_volume_density(model: KEModelMetric, z) -> float:
    """Hermitian determinant det g_ij at z (closed form)."""
    pt = as_points(z, model.dim)
    _check_interior(model, pt)
    n = model.dim
    if model.model_kind in (ModelKind.DISC, ModelKind.BALL):
        r2 = model.radius ** 2
        t = r2 - float((np.abs(pt) ** 2).sum())
        return r2 / t ** (n + 1)
    scale = 2.0 / (n + 1)
    rs = np.asarray(model.radii)
    lam = scale * rs ** 2 / (rs ** 2 - np.abs(pt) ** 2) ** 2
    return float(np.prod(lam))


def hyperconvex_exhaustion(model: KEModelMetric, z, alpha: float) -> float:
    """The bounded exhaustion u(z) = -(det g(z))^(-alpha).

    Negative on the domain and increasing to 0 at the boundary since the
    volume density blows up there; plurisubharmonic for small alpha.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    return -ke_volume_density(model, z) ** (-alpha)


def exhaustion_floor(model: KEModelMetric, alpha: float) -> float:
    """Infimum of the exhaustion: attained at the center, where det g is minimal."""
    zero = np.zeros(model.dim, dtype=np.complex128)
    return hyperconvex_exhaustion(model, zero, alpha)


# ---------------------------------------------------------------------------
# finite-difference checks
# ---------------------------------------------------------------------------

def levi_form_fd(fn, z, step: float = 1e-3) -> np.ndarray:
    """Levi form (complex Hessian) of a real-valued function by centered
    second differences over all n^2 complex direction pairs."""
    pt = as_points(z, np.asarray(z, dtype=np.complex128).reshape(-1).shape[0])
    n = pt.shape[0]
    h = step

    def f(u):
        return float(fn(u))

    def second(e1, e2):
        if np.array_equal(e1, e2):
            return (f(pt + h * e1) - 2.0 * f(pt) + f(pt - h * e1)) / h ** 2
        return (f(pt + h * (e1 + e2)) - f(pt + h * (e1 - e2))
                - f(pt + h * (e2 - e1)) + f(pt - h * (e1 + e2))) / (4.0 * h ** 2)

    units = []
    for j in range(n):
        ex = np.zeros(n, dtype=np.complex128)
        ex[j] = 1.0
        ey = np.zeros(n, dtype=np.complex128)
        ey[j] = 1.0j
        units.append((ex, ey))

    L = np.zeros((n, n), dtype=np.complex128)
    for j in range(n):
        xj, yj = units[j]
        for k in range(n):
            xk, yk = units[k]
            re = second(xj, xk) + second(yj, yk)
            im = second(xj, yk) - second(yj, xk)
            L[j, k] = 0.25 * (re + 1j * im)
    return 0.5 * (L + L.conj().T)


def ricci_fd(model: KEModelMetric, z, step: float = 1e-3) -> np.ndarray:
    """Finite-difference Ricci tensor -dd log det g at z."""
    def logdet(u):
        return math.log(ke_volume_density(model, u))

    return -levi_form_fd(logdet, z, step)


def einstein_residual(model: KEModelMetric, z, step: float = 1e-3) -> float:
    """Relative deviation of the finite-difference Einstein identity
    Ric = -(n+1) g, componentwise against the metric scale."""
    ric = ricci_fd(model, z, step)
    g = ke_metric_matrix(model, z)
    target = model.einstein_constant * g
    scale = np.abs(g).max()
    return float(np.abs(ric - target).max() / scale)


def levi_min_eig(fn, z, step: float = 1e-3) -> float:
    """Smallest eigenvalue of the finite-difference Levi form of fn at z."""
    L = levi_form_fd(fn, z, step)
    return float(np.linalg.eigvalsh(L).min())
