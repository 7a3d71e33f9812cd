"""Kobayashi and Caratheodory metrics bracketed by constrained optimization.

Both metrics are extremal problems.  Feasible competitors certify one-sided
bounds, so the routines here return values that are valid up to the sampling
of the feasibility constraints:

* an analytic disk through (x, v) staying inside the domain certifies an
  upper bound for the Kobayashi metric;
* a polynomial map into the unit disc vanishing at x certifies a lower bound
  for the Caratheodory metric.

Competitors are polynomial, optimized by SLSQP with analytic constraint
Jacobians and seeded multi-starts, then revalidated on a denser sample set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .bergman import MonomialBasis
from .domains import (Domain, GeometryError, ModelKind, as_points, contains,
                      interior_anchor, sample_boundary, sample_interior)
from .mappings import squeezing_map

_INNER_RADII = (0.25, 0.5, 0.75, 0.9)


@dataclass(frozen=True)
class DiskAnsatz:
    """Polynomial disk f(t) = x + t s v + sum_{k>=2} t^k c_k on the unit disc."""

    base_point: np.ndarray
    direction: np.ndarray
    speed: float
    higher_coeffs: np.ndarray      # (K-1, n), row k-2 holds c_k

    @property
    def degree(self) -> int:
        return self.higher_coeffs.shape[0] + 1

    def evaluate(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=np.complex128)
        out = self.base_point + np.multiply.outer(t, self.speed * self.direction)
        tk = t.copy()
        for k in range(2, self.degree + 1):
            tk = tk * t
            out = out + np.multiply.outer(tk, self.higher_coeffs[k - 2])
        return out


@dataclass(frozen=True)
class FunctionalAnsatz:
    """Disc-valued competitor h(z) = A(z) / D(z) with h(x) = 0.

    A is a polynomial sum_alpha b_alpha (z - x)^alpha over multi-indices with
    |alpha| >= 1, so the base-point zero is exact by construction.  D is an
    affine denominator d0 + <den_lin, z> that never vanishes on the domain
    (D = 1 for the plain polynomial ansatz); on convex domains it is taken
    from the squeezing chart and carries the pole of the extremal function.
    """

    base_point: np.ndarray
    indices: np.ndarray            # (nb, n) multi-indices, all with |alpha| >= 1
    coeffs: np.ndarray             # (nb,)
    den_const: complex = 1.0
    den_lin: np.ndarray | None = None

    def denominator(self, z: np.ndarray) -> np.ndarray:
        pts = as_points(z, self.base_point.shape[0])
        if self.den_lin is None:
            return np.ones(pts.shape[:-1], dtype=np.complex128)
        return self.den_const + pts @ self.den_lin

    def evaluate(self, z: np.ndarray) -> np.ndarray:
        pts = as_points(z, self.base_point.shape[0])
        vals = _monomials_for(pts - self.base_point, self.indices)
        return (vals @ self.coeffs) / self.denominator(pts)

    def gradient_at_base(self) -> np.ndarray:
        n = self.base_point.shape[0]
        g = np.zeros(n, dtype=np.complex128)
        for row, b in zip(self.indices, self.coeffs):
            if row.sum() == 1:
                g[int(np.argmax(row))] += b
        return g / self.denominator(self.base_point)


def _monomials_for(pts: np.ndarray, indices: np.ndarray) -> np.ndarray:
    deg = int(indices.sum(axis=1).max())
    n = pts.shape[-1]
    powers = np.ones(pts.shape[:-1] + (n, deg + 1), dtype=np.complex128)
    for k in range(1, deg + 1):
        powers[..., k] = powers[..., k - 1] * pts
    out = np.ones(pts.shape[:-1] + (indices.shape[0],), dtype=np.complex128)
    for j in range(n):
        out *= powers[..., j, indices[:, j]]
    return out


def _disk_nodes(n_angles: int = 256, radii=_INNER_RADII, per_circle: int = 64):
    angles = np.exp(2j * np.pi * np.arange(n_angles) / n_angles)
    nodes = [angles]
    for i, r in enumerate(radii):
        th = (np.arange(per_circle) + (i + 1) * 0.37) / per_circle
        nodes.append(r * np.exp(2j * np.pi * th))
    return np.concatenate(nodes)


def _linear_feasible_speed(domain: Domain, x, v, nodes, margin: float) -> float:
    """Largest s with the straight disk x + s t v feasible on the nodes."""
    if float(domain.rho(x)) > -margin:
        raise GeometryError("base point within the feasibility margin of the boundary")
    lo, hi = 0.0, 2.5 * domain.bounding_radius
    base = np.multiply.outer(nodes, v)

    def ok(s):
        return bool((domain.rho_components(x + s * base) <= -margin).all())

    if ok(hi):
        return hi
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    if lo <= 0:
        raise GeometryError("no feasible analytic disk at the base point")
    return lo


def _chart_disk_coeffs(domain: Domain, pt, vv, degree: int, chart=None):
    """Taylor coefficients of the squeezing-chart disk through (pt, vv).

    The chart maps the domain onto a region pinched between balls of radii
    a and b with pt at 0, so pulling back the straight disk of radius a gives
    an analytic competitor; its Taylor coefficients (by FFT on a circle) seed
    the polynomial ansatz.  Returns (s, coeffs) or None when no chart exists.
    """
    try:
        mapping, cert = chart if chart is not None else squeezing_map(domain, pt)
    except (GeometryError, ValueError):
        return None
    J = mapping.jacobian_matrix(pt)
    u = J @ vv
    nu = np.linalg.norm(u)
    if nu == 0 or not np.isfinite(nu):
        return None
    u = u / nu
    m = 256
    zeta = np.exp(2j * np.pi * np.arange(m) / m)
    try:
        F = mapping.inverse().apply(np.multiply.outer(cert.a * zeta, u))
    except (GeometryError, ValueError):
        return None
    coef = np.fft.fft(F, axis=0) / m
    if np.linalg.norm(coef[0] - pt) > 1e-6 * max(1.0, np.linalg.norm(pt)):
        return None
    s = float(np.real(coef[1] @ vv.conj()))
    if s <= 0:
        return None
    return s, coef[2:degree + 1]


def _chart_denominator(domain: Domain, pt, chart=None):
    """Affine denominator of the squeezing-chart Mobius at the base point.

    The chart composes an affine normalization with a ball (or disc) Mobius
    whose rational components share one affine denominator D(z); D never
    vanishes on a convex domain, and dividing the functional ansatz by it
    lets polynomial numerators reach the pole structure of the extremal.
    Returns (den_const, den_lin) or None when no usable chart exists.
    """
    from .mappings import BallMobius, Composition, DiscMobius
    try:
        mapping, _ = chart if chart is not None else squeezing_map(domain, pt)
    except (GeometryError, ValueError):
        return None
    if not isinstance(mapping, Composition) or len(mapping.parts) < 2:
        return None
    pre = mapping.parts[0]
    mob = mapping.parts[1]
    A, b = pre.matrix, pre.offset
    if isinstance(mob, DiscMobius):
        wbar = np.conj(mob.w)
        return 1.0 - wbar * b[0], -wbar * A[0, :]
    if isinstance(mob, BallMobius) and not mob.inverted:
        s = mob.s
        if s <= 1e-12:
            return None
        row = mob.unitary[0, :]
        return 1.0 - s * (row @ b), -s * (row @ A)
    return None


def kobayashi_upper(domain: Domain, x, v, degree: int = 6, budget: int = 60,
                    seed: int = 0, starts: int = 8, n_angles: int = 256,
                    margin: float = 1e-6, warm_start: DiskAnsatz | None = None,
                    chart=None, trace: list | None = None,
                    full_output: bool = False):
    """Certified upper bound for the Kobayashi metric at (x, v).

    Maximizes the first-derivative speed s of a degree-`degree` polynomial
    disk through x with f'(0) = s v, subject to feasibility on circle nodes
    with margin `margin`.  Multi-starts include the straight disk scaled to
    feasibility and, on convex domains, the Taylor truncation of the
    squeezing-chart disk (pass a precomputed (map, certificate) pair as
    `chart` to skip its construction).  The best candidate is revalidated on
    a 4x denser node set and radially shrunk if needed, so the returned
    1/s^2 is an upper bound up to boundary-sampling slack.
    """
    n = domain.dim
    pt = as_points(x, n)
    scale2 = float(np.linalg.norm(as_points(v, n)) ** 2)
    if scale2 == 0:
        raise ValueError("zero direction")
    vv = as_points(v, n) / math.sqrt(scale2)
    if not bool(contains(domain, pt)):
        raise ValueError("base point is not interior")

    nodes = _disk_nodes(n_angles)
    dense = _disk_nodes(4 * n_angles, radii=_INNER_RADII + (0.97,), per_circle=128)
    K = max(int(degree), 1)
    ncoef = K - 1
    nvar = 1 + 2 * ncoef * n
    s0 = _linear_feasible_speed(domain, pt, vv, nodes, margin)
    rng = np.random.default_rng(seed)

    P = np.column_stack([nodes ** k for k in range(2, K + 1)]) if ncoef else \
        np.zeros((nodes.shape[0], 0), dtype=np.complex128)

    def unpack(theta):
        s = theta[0]
        cr = theta[1:1 + ncoef * n].reshape(ncoef, n)
        ci = theta[1 + ncoef * n:].reshape(ncoef, n)
        return s, cr + 1j * ci

    def disk_points(theta, ts, pmat=None):
        s, c = unpack(theta)
        out = pt + np.multiply.outer(ts, s * vv)
        if ncoef:
            pm = pmat if pmat is not None else np.column_stack(
                [ts ** k for k in range(2, K + 1)])
            out = out + pm @ c
        return out

    def cons_fun(theta):
        f = disk_points(theta, nodes, P)
        return (-domain.rho_components(f) - margin).ravel()

    def cons_jac(theta):
        f = disk_points(theta, nodes, P)
        G = domain.grad_components(f)            # (m, nc, n)
        A = G.conj()
        m, nc = G.shape[0], G.shape[1]
        jac = np.empty((m, nc, nvar))
        jac[:, :, 0] = np.real(np.einsum("mci,i,m->mc", A, vv, nodes))
        if ncoef:
            W = np.einsum("mci,mk->mcki", A, P).reshape(m, nc, ncoef * n)
            jac[:, :, 1:1 + ncoef * n] = W.real
            jac[:, :, 1 + ncoef * n:] = -W.imag
        return -jac.reshape(m * nc, nvar)

    bounds = [(1e-9, 2.5 * domain.bounding_radius)] + \
             [(-2.0 * domain.bounding_radius, 2.0 * domain.bounding_radius)] * (nvar - 1)

    def shrink_to_dense_feasible(theta, node_set=None):
        """Radial reparametrization f(tau t): feasible since tau D sits in D."""
        ts = dense if node_set is None else node_set

        def dense_ok(tau):
            f = disk_points(theta, tau * ts)
            return bool((domain.rho_components(f) <= -margin * 0.5).all())

        if dense_ok(1.0):
            return 1.0
        lo, hi = 0.0, 1.0
        for _ in range(50):
            mid = 0.5 * (lo + hi)
            if dense_ok(mid):
                lo = mid
            else:
                hi = mid
        return lo

    def radial_apply(theta, tau):
        s, c = unpack(theta)
        s = s * tau
        c = c * (tau ** np.arange(2, K + 1))[:, None] if ncoef else c
        out = np.empty(nvar)
        out[0] = s
        out[1:1 + ncoef * n] = c.real.ravel()
        out[1 + ncoef * n:] = c.imag.ravel()
        return out

    def pack(s, c):
        th = np.zeros(nvar)
        th[0] = s
        if ncoef:
            take = min(c.shape[0], ncoef)
            cr = np.zeros((ncoef, n))
            ci = np.zeros((ncoef, n))
            cr[:take] = c[:take].real
            ci[:take] = c[:take].imag
            th[1:1 + ncoef * n] = cr.ravel()
            th[1 + ncoef * n:] = ci.ravel()
        return th

    theta_starts = []
    base = np.zeros(nvar)
    base[0] = s0 * 0.999
    theta_starts.append(base)
    if warm_start is not None:
        theta_starts.append(pack(warm_start.speed, warm_start.higher_coeffs))
    if domain.convex or chart is not None:
        seeded = _chart_disk_coeffs(domain, pt, vv, K, chart)
        if seeded is not None:
            th = pack(*seeded)
            tau = shrink_to_dense_feasible(th, nodes)
            if tau > 0:
                theta_starts.append(radial_apply(th, tau * (1 - 1e-9)))
    while len(theta_starts) < starts:
        th = base.copy()
        th[0] = s0 * rng.uniform(0.85, 1.0)
        th[1:] = rng.normal(scale=0.02 * s0, size=nvar - 1)
        theta_starts.append(th)

    best_s = 0.0
    best_theta = base
    for si, th0 in enumerate(theta_starts):
        cb = None
        if trace is not None:
            def cb(xk, _si=si):
                trace.append((_si, len(trace), float(xk[0]),
                              float(-cons_fun(xk).min())))
        res = minimize(lambda t: -t[0], th0, jac=lambda t: -np.eye(nvar)[0],
                       method="SLSQP", bounds=bounds,
                       constraints=[{"type": "ineq", "fun": cons_fun,
                                     "jac": cons_jac}],
                       options={"maxiter": budget, "ftol": 1e-12},
                       callback=cb)
        for cand in (res.x, th0):
            tau = shrink_to_dense_feasible(cand)
            if tau <= 0:
                continue
            s_eff = float(cand[0]) * tau
            if s_eff > best_s:
                best_s = s_eff
                best_theta = radial_apply(cand, tau)
    if best_s <= 0:
        raise GeometryError("no feasible analytic disk found")
    value = (1.0 / best_s) ** 2 * scale2
    if not full_output:
        return value
    s, c = unpack(best_theta)
    return value, DiskAnsatz(base_point=pt, direction=vv, speed=s, higher_coeffs=c)


def caratheodory_lower(domain: Domain, x, v, degree: int = 6, budget: int = 50,
                       seed: int = 0, starts: int = 4, n_interior: int = 256,
                       n_boundary: int = 1024, margin: float = 1e-6,
                       warm_start: FunctionalAnsatz | None = None,
                       dual_disk: DiskAnsatz | None = None, chart=None,
                       trace: list | None = None, full_output: bool = False):
    """Certified lower bound for the Caratheodory metric at (x, v).

    Maximizes |dh(v)| over competitors h = A / D with A a polynomial of
    degree <= `degree` vanishing at x, subject to |h| <= 1 - margin on
    interior and boundary-offset samples.  On convex domains D is the affine
    Mobius denominator of the squeezing chart (D = 1 otherwise), which lets
    low-degree numerators express the pole of the extremal function.  The
    winner is rescaled against a 4x denser sample set, keeping the bound
    one-sided up to inter-sample slack.

    Multi-starts include the supporting linear functional and, when
    `dual_disk` carries an extremal-disk candidate, a least-squares left
    inverse of that disk (on convex domains the two extremal problems are
    dual, so inverting a good disk collapses the bracket).
    """
    n = domain.dim
    pt = as_points(x, n)
    scale2 = float(np.linalg.norm(as_points(v, n)) ** 2)
    if scale2 == 0:
        raise ValueError("zero direction")
    vv = as_points(v, n) / math.sqrt(scale2)
    if not bool(contains(domain, pt)):
        raise ValueError("base point is not interior")

    K = max(int(degree), 1)
    basis = MonomialBasis(n, K)
    indices = basis.indices[basis.indices.sum(axis=1) >= 1]
    nb = indices.shape[0]
    lin_rows = np.where(indices.sum(axis=1) == 1)[0]
    lin_axis = np.argmax(indices[lin_rows], axis=1)
    d_sel = np.zeros(nb, dtype=np.complex128)
    d_sel[lin_rows] = vv[lin_axis]

    anchor = interior_anchor(domain, seed)
    interior = sample_interior(domain, n_interior, seed)
    bnd = sample_boundary(domain, n_boundary, seed + 1)
    offset = bnd + 1e-9 * (anchor - bnd)
    samples = np.concatenate([interior, offset], axis=0)
    M = _monomials_for(samples - pt, indices)
    cap = 1.0 - margin

    dense_b = sample_boundary(domain, 4 * n_boundary, seed + 3)
    dense = np.concatenate([samples, dense_b + 1e-9 * (anchor - dense_b)], axis=0)
    M_dense = _monomials_for(dense - pt, indices)

    nvar = 2 * nb

    def unpack(theta):
        return theta[:nb] + 1j * theta[nb:]

    def obj(theta):
        return -float(np.real(d_sel @ unpack(theta)))

    def obj_jac(theta):
        out = np.empty(nvar)
        out[:nb] = -d_sel.real
        out[nb:] = d_sel.imag
        return out

    # candidate denominators: joint rational fit from the dual disk, the
    # squeezing-chart denominator, and the plain polynomial ansatz D = 1
    denominators = []
    extra_starts = {}
    if dual_disk is not None:
        rat = _rational_inverse_fit(dual_disk, pt, indices)
        if rat is not None:
            b_rat, dc, dl = rat
            denominators.append((dc, dl))
            extra_starts[0] = [b_rat]
    if domain.convex or chart is not None:
        den = _chart_denominator(domain, pt, chart)
        if den is not None:
            extra_starts[len(denominators)] = []
            denominators.append(den)
    denominators.append((1.0 + 0.0j, None))
    extra_starts.setdefault(len(denominators) - 1, [])

    rng = np.random.default_rng(seed + 11)
    # SLSQP's quadratic subproblem scales poorly past ~100 variables; at high
    # ansatz degree the rescaled starts (dual fit, supporting functional)
    # already carry the bound, so the polish is skipped there.
    polish = budget > 0 and nvar <= 160
    best_t = 0.0
    best = None
    for di, (den_const, den_lin) in enumerate(denominators):
        if den_lin is not None:
            den_samples = den_const + samples @ den_lin
            den_dense = den_const + dense @ den_lin
            den_base = complex(den_const + pt @ den_lin)
            scale = max(abs(den_base), 1e-12)
            if (np.abs(den_samples).min() < 1e-6 * scale
                    or np.abs(den_dense).min() < 1e-6 * scale):
                continue
        else:
            den_const = 1.0 + 0.0j
            den_samples = np.ones(samples.shape[0], dtype=np.complex128)
            den_dense = np.ones(dense.shape[0], dtype=np.complex128)
            den_base = 1.0 + 0.0j
        capvec = cap * np.abs(den_samples)
        capvec_dense = cap * np.abs(den_dense)

        def cons_fun(theta):
            h = M @ unpack(theta)
            return capvec ** 2 - np.abs(h) ** 2

        def cons_jac(theta):
            h = M @ unpack(theta)
            W = h.conj()[:, None] * M
            out = np.empty((h.shape[0], nvar))
            out[:, :nb] = -2.0 * W.real
            out[:, nb:] = 2.0 * W.imag
            return out

        def rescaled_theta(b):
            S = float((np.abs(M @ b) / capvec).max())
            if S > 1.0:
                b = b / S
            return np.concatenate([b.real, b.imag])

        theta_starts = [rescaled_theta(b) for b in extra_starts.get(di, [])
                        if np.all(np.isfinite(b))]
        b_lin = np.zeros(nb, dtype=np.complex128)
        b_lin[lin_rows] = vv.conj()[lin_axis]
        S = float((np.abs(M @ b_lin) / capvec).max())
        if S > 0:
            b_lin = b_lin / S
        theta_starts.append(np.concatenate([b_lin.real, b_lin.imag]))
        if dual_disk is not None:
            b_dual = _left_inverse_fit(dual_disk, pt, indices,
                                       den_const=den_const, den_lin=den_lin)
            if b_dual is not None:
                theta_starts.append(rescaled_theta(b_dual))
        if warm_start is not None and (
                (warm_start.den_lin is None) == (den_lin is None)):
            b0 = np.zeros(nb, dtype=np.complex128)
            for row, coef in zip(warm_start.indices, warm_start.coeffs):
                hits = np.where((indices == row).all(axis=1))[0]
                if hits.size:
                    b0[hits[0]] = coef
            theta_starts.append(rescaled_theta(b0))
        if den_lin is None:
            while len(theta_starts) < starts:
                jitter = rng.normal(scale=0.05 * max(np.abs(b_lin).max(), 1e-3),
                                    size=nb) + 1j * rng.normal(
                    scale=0.05 * max(np.abs(b_lin).max(), 1e-3), size=nb)
                theta_starts.append(rescaled_theta(b_lin + jitter))

        for si, th0 in enumerate(theta_starts):
            cb = None
            if trace is not None:
                def cb(xk, _si=si, _cf=cons_fun):
                    trace.append((_si, len(trace), -obj(xk),
                                  float(-_cf(xk).min())))
            if polish:
                res_x = minimize(obj, th0, jac=obj_jac, method="SLSQP",
                                 constraints=[{"type": "ineq", "fun": cons_fun,
                                               "jac": cons_jac}],
                                 options={"maxiter": budget, "ftol": 1e-14},
                                 callback=cb).x
            else:
                res_x = th0
            for cand in (res_x, th0):
                b = unpack(cand)
                sup = float((np.abs(M_dense @ b) / capvec_dense).max())
                if sup <= 0:
                    continue
                b_scaled = b / max(sup, 1.0)
                t = float(np.abs(d_sel @ b_scaled)) / abs(den_base)
                if t > best_t:
                    best_t = t
                    best = (b_scaled, den_const, den_lin)
    if best is None:
        raise GeometryError("no feasible disc-valued competitor found")
    value = best_t ** 2 * scale2
    if not full_output:
        return value
    b_best, dc, dl = best
    return value, FunctionalAnsatz(base_point=pt, indices=indices, coeffs=b_best,
                                   den_const=dc, den_lin=dl)


def _dual_disk_nodes(disk: DiskAnsatz, pt: np.ndarray):
    angles = np.exp(2j * np.pi * (np.arange(96) + 0.31) / 96)
    radii = np.array([0.99, 0.95, 0.9, 0.8, 0.65, 0.5, 0.35, 0.15])
    zeta = np.multiply.outer(radii, angles).ravel()
    try:
        zf = disk.evaluate(zeta)
    except (ValueError, FloatingPointError):
        return None
    return zeta, zf


def _left_inverse_fit(disk: DiskAnsatz, pt: np.ndarray, indices: np.ndarray,
                      den_const=1.0, den_lin=None):
    """Least-squares numerator A with A(f(t))/D(f(t)) ~ t along the disk f,
    used as a dual start (h = A/D inverts the extremal disk)."""
    nodes = _dual_disk_nodes(disk, pt)
    if nodes is None:
        return None
    zeta, zf = nodes
    Mf = _monomials_for(zf - pt, indices)
    target = zeta if den_lin is None else zeta * (den_const + zf @ den_lin)
    b, *_ = np.linalg.lstsq(Mf, target, rcond=None)
    if not np.all(np.isfinite(b)):
        return None
    return b


def _rational_inverse_fit(disk: DiskAnsatz, pt: np.ndarray, indices: np.ndarray):
    """Joint fit of numerator and affine denominator with A(f) = t D(f).

    Solving A(f(t)) - t <f(t) - x, delta> = t for (A, delta) is linear, and
    when the true extremal function is rational with an affine denominator
    (ball-equivalent domains) the fit recovers it exactly.  Returns
    (numerator coeffs, den_const, den_lin) or None.
    """
    nodes = _dual_disk_nodes(disk, pt)
    if nodes is None:
        return None
    zeta, zf = nodes
    n = pt.shape[0]
    Mf = _monomials_for(zf - pt, indices)
    block = np.concatenate([Mf, -zeta[:, None] * (zf - pt)], axis=1)
    sol, *_ = np.linalg.lstsq(block, zeta, rcond=None)
    if not np.all(np.isfinite(sol)):
        return None
    b = sol[:indices.shape[0]]
    delta = sol[indices.shape[0]:]
    den_lin = delta
    den_const = complex(1.0 - pt @ delta)
    return b, den_const, den_lin


def bracket(domain: Domain, x, v, degree: int = 6, budget: int = 60,
            seed: int = 0, starts: int = 8, rel_tol: float = 1e-3,
            chart=None, **kwargs) -> tuple[float, float]:
    """Two-sided bracket: Caratheodory lower bound and Kobayashi upper bound.

    The optimal disk from the upper bound seeds the lower bound through the
    left-inverse duality.  The Schwarz inequality puts the Caratheodory
    metric below the Kobayashi metric, so lo > hi beyond tolerance signals an
    optimizer inconsistency.
    """
    if chart is None and domain.convex:
        try:
            chart = squeezing_map(domain, x)
        except (GeometryError, ValueError):
            chart = None
    hi, disk = kobayashi_upper(domain, x, v, degree=degree, budget=budget,
                               seed=seed, starts=starts, chart=chart,
                               full_output=True, **kwargs)
    lo = caratheodory_lower(domain, x, v, degree=degree, budget=budget,
                            seed=seed, starts=max(starts - 4, 2),
                            dual_disk=disk, chart=chart, **kwargs)
    if lo > hi * (1.0 + 2.0 * rel_tol) + 1e-12:
        raise GeometryError(
            f"bracket inversion: lower bound {lo:.6g} exceeds upper bound "
            f"{hi:.6g} beyond tolerance (optimizer bug signal)")
    return lo, hi


def kobayashi_model(domain: Domain, x, v) -> float:
    """Closed-form metric on disc, ball and polydisc via model automorphisms."""
    if domain.model_kind not in (ModelKind.DISC, ModelKind.BALL,
                                 ModelKind.POLYDISC):
        raise GeometryError(
            f"no closed-form metric for kind {domain.model_kind.value!r}")
    pt = as_points(x, domain.dim)
    vv = as_points(v, domain.dim)
    mapping, _ = squeezing_map(domain, pt, n_boundary_samples=1000, seed=0)
    J = mapping.jacobian_matrix(pt)
    w = J @ vv
    if domain.model_kind == ModelKind.POLYDISC:
        return float((np.abs(w) ** 2).max())
    return float((np.abs(w) ** 2).sum())
