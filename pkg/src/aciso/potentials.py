"""Double-well potentials W and the derived pair Phi(t) = int_0^t sqrt(W), V = Phi^(n/(n-1)).

The normalization int_0^1 sqrt(W) = 1 is enforced at construction, so that the
transition profile carries unit 1-D energy and V(1) = 1. All objects built here
are immutable after construction and safe to share between workers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline, PPoly

from .errors import NonAdmissible, QuadratureFailure

__all__ = [
    "DoubleWell",
    "PotentialChain",
    "make_reference_well",
    "normalize_well",
    "chain",
    "well_from_poly",
    "well_from_piecewise",
]

PROBE_POINTS = 4096
_ADMISSIBILITY_TOL = 1e-9
_BOUND_CONSTANT_CAP = 1e3


def probe_grid(num: int = PROBE_POINTS) -> np.ndarray:
    """Chebyshev-distributed probe points on [0, 1], endpoints included."""
    k = np.arange(num)
    return 0.5 * (1.0 - np.cos(np.pi * k / (num - 1)))


def _gauss_panels(a: float, b: float, panels: int, order: int = 12):
    """Nodes and weights of a composite Gauss-Legendre rule on [a, b]."""
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, panels + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * np.diff(edges)
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def sqrt_well_integral(w: Callable[[np.ndarray], np.ndarray]) -> float:
    """Compute int_0^1 sqrt(W) with the endpoint substitution t = sin^2(theta).

    sqrt(W) vanishes linearly at 0 and 1, so in the theta variable the integrand
    is smooth and a moderate Gauss rule converges to near machine precision.
    """
    theta, wts = _gauss_panels(0.0, 0.5 * np.pi, panels=64, order=12)
    t = np.sin(theta) ** 2
    vals = np.sqrt(np.maximum(w(t), 0.0)) * np.sin(2.0 * theta)
    coarse = float(np.dot(vals, wts))
    theta2, wts2 = _gauss_panels(0.0, 0.5 * np.pi, panels=128, order=12)
    t2 = np.sin(theta2) ** 2
    fine = float(np.dot(np.sqrt(np.maximum(w(t2), 0.0)) * np.sin(2.0 * theta2), wts2))
    if abs(fine - coarse) > 1e-10 * max(1.0, abs(fine)):
        raise QuadratureFailure(
            f"integral of sqrt(W) did not settle: {coarse!r} vs {fine!r}"
        )
    return fine


@dataclass(frozen=True, eq=False)
class DoubleWell:
    """An admissible, normalized double-well potential on [0, 1].

    Attributes:
        w, w1, w2: vectorized evaluators of W, W', W''.
        kind: "reference-quartic" or "user-supplied".
        normalization_residual: |int_0^1 sqrt(W) - 1| after construction.
        w2_lipschitz: finite-difference Lipschitz estimate of W'' on the probe grid.
    """

    w: Callable[[np.ndarray], np.ndarray]
    w1: Callable[[np.ndarray], np.ndarray]
    w2: Callable[[np.ndarray], np.ndarray]
    kind: str
    normalization_residual: float
    w2_lipschitz: float

    def eval(self, t):
        """Return (W, W', W'') at t."""
        t = np.asarray(t, dtype=float)
        return self.w(t), self.w1(t), self.w2(t)


def _validate_well(w, w1, w2) -> float:
    """Check the non-degeneracy conditions on the probe grid; return Lip(W'')."""
    tt = probe_grid()
    vals = np.asarray(w(tt), dtype=float)
    if not np.isfinite(vals).all():
        raise NonAdmissible("W takes non-finite values on the probe grid")
    if abs(vals[0]) > _ADMISSIBILITY_TOL or abs(vals[-1]) > _ADMISSIBILITY_TOL:
        raise NonAdmissible("W(0) and W(1) must vanish")
    interior = vals[1:-1]
    if np.any(interior <= 0.0):
        raise NonAdmissible("W must be strictly positive on (0, 1)")
    curv = np.asarray(w2(tt), dtype=float)
    if curv[0] <= 0.0 or curv[-1] <= 0.0:
        raise NonAdmissible("W''(0) and W''(1) must be positive")
    slopes = np.abs(np.diff(curv) / np.diff(tt))
    lip = float(np.max(slopes))
    if not np.isfinite(lip):
        raise NonAdmissible("W'' is not Lipschitz on the probe grid")
    # Cross-check W' and W'' against finite differences of W at a few points.
    h = 1e-6
    ts = np.linspace(0.1, 0.9, 17)
    fd1 = (w(ts + h) - w(ts - h)) / (2 * h)
    fd2 = (w(ts + h) - 2 * vals_at(w, ts) + w(ts - h)) / h**2
    if np.max(np.abs(fd1 - w1(ts))) > 1e-4 * (1 + np.max(np.abs(w1(ts)))):
        raise NonAdmissible("W' evaluator inconsistent with W")
    if np.max(np.abs(fd2 - w2(ts))) > 1e-2 * (1 + np.max(np.abs(w2(ts)))):
        raise NonAdmissible("W'' evaluator inconsistent with W")
    return lip


def vals_at(f, t):
    return np.asarray(f(np.asarray(t, dtype=float)), dtype=float)


def make_reference_well() -> DoubleWell:
    """The normalized quartic W(t) = 36 t^2 (1-t)^2.

    sqrt(W) = 6 t (1-t) integrates to 1 exactly, so no rescaling is needed; the
    closed forms here are what every derived quantity can be tested against.
    """
    w = lambda t: 36.0 * np.asarray(t, float) ** 2 * (1.0 - np.asarray(t, float)) ** 2
    w1 = lambda t: 72.0 * np.asarray(t, float) * (1.0 - np.asarray(t, float)) * (1.0 - 2.0 * np.asarray(t, float))
    w2 = lambda t: 72.0 * (1.0 - 6.0 * np.asarray(t, float) + 6.0 * np.asarray(t, float) ** 2)
    lip = _validate_well(w, w1, w2)
    residual = abs(sqrt_well_integral(w) - 1.0)
    return DoubleWell(w=w, w1=w1, w2=w2, kind="reference-quartic",
                      normalization_residual=residual, w2_lipschitz=lip)


def normalize_well(w, w1, w2, kind: str = "user-supplied") -> DoubleWell:
    """Rescale a raw admissible well so that int_0^1 sqrt(W) = 1.

    The multiplier is c = (int_0^1 sqrt(W))^(-2); raises NonAdmissible when the
    raw well fails positivity or non-degeneracy on the probe grid.
    """
    _validate_well(w, w1, w2)
    total = sqrt_well_integral(w)
    if total <= 0.0:
        raise NonAdmissible("int_0^1 sqrt(W) must be positive")
    c = total ** (-2)
    wn = lambda t, _c=c: _c * np.asarray(w(t), float)
    wn1 = lambda t, _c=c: _c * np.asarray(w1(t), float)
    wn2 = lambda t, _c=c: _c * np.asarray(w2(t), float)
    lip = _validate_well(wn, wn1, wn2)
    residual = abs(sqrt_well_integral(wn) - 1.0)
    well = DoubleWell(w=wn, w1=wn1, w2=wn2, kind=kind,
                      normalization_residual=residual, w2_lipschitz=lip)
    object.__setattr__(well, "scale_applied", c)
    return well


def well_from_poly(coeffs) -> DoubleWell:
    """Normalized well from polynomial coefficients (ascending order in t)."""
    p = np.polynomial.Polynomial(np.asarray(coeffs, dtype=float))
    d1 = p.deriv(1)
    d2 = p.deriv(2)
    return normalize_well(lambda t: p(np.asarray(t, float)),
                          lambda t: d1(np.asarray(t, float)),
                          lambda t: d2(np.asarray(t, float)))


def well_from_piecewise(breaks, coeffs) -> DoubleWell:
    """Normalized well from a piecewise polynomial.

    Args:
        breaks: strictly increasing breakpoints starting at 0 and ending at 1.
        coeffs: array (k, m) of local coefficients, highest degree first, for the
            m = len(breaks) - 1 intervals (the scipy PPoly convention).
    """
    breaks = np.asarray(breaks, dtype=float)
    if breaks[0] != 0.0 or breaks[-1] != 1.0 or np.any(np.diff(breaks) <= 0):
        raise NonAdmissible("breakpoints must increase from 0 to 1")
    pp = PPoly(np.asarray(coeffs, dtype=float), breaks, extrapolate=True)
    d1 = pp.derivative(1)
    d2 = pp.derivative(2)
    return normalize_well(lambda t: pp(np.asarray(t, float)),
                          lambda t: d1(np.asarray(t, float)),
                          lambda t: d2(np.asarray(t, float)))


@dataclass(frozen=True, eq=False)
class PotentialChain:
    """W together with Phi = int_0^t sqrt(W) and V = Phi^(n/(n-1)) in dimension n.

    delta0 is the largest delta in (0, 1/2) on which the two-sided near-well
    bounds (W/t^2, W'/t, W'', Phi/t^2, V/t^(2+2/(n-1)) between 1/C and C, with
    the mirrored bounds at t = 1) hold for a constant C <= 1e3; bound_constant
    records the C realized at delta0.
    """

    well: DoubleWell
    dim: int
    delta0: float = field(init=False, default=0.0)
    bound_constant: float = field(init=False, default=np.inf)

    def __post_init__(self):
        if self.dim < 2:
            raise ValueError("dimension must be at least 2")
        object.__setattr__(self, "_phi_spline", _build_phi_spline(self.well))
        d0, c0 = _estimate_delta0(self)
        object.__setattr__(self, "delta0", d0)
        object.__setattr__(self, "bound_constant", c0)

    # ---- Phi and derivatives -------------------------------------------------

    def phi(self, t):
        t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
        return np.clip(self._phi_spline(t), 0.0, None)

    def phi1(self, t):
        t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
        return np.sqrt(np.maximum(self.well.w(t), 0.0))

    def phi2(self, t):
        """Phi'' = W'/(2 sqrt(W)), with the well limits sqrt(W''(0)/2), -sqrt(W''(1)/2)."""
        t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
        wv = np.maximum(self.well.w(t), 0.0)
        out = np.empty_like(t)
        safe = wv > 1e-28
        out[safe] = self.well.w1(t[safe]) / (2.0 * np.sqrt(wv[safe]))
        low = ~safe & (t < 0.5)
        high = ~safe & (t >= 0.5)
        out[low] = np.sqrt(max(float(self.well.w2(np.array(0.0))), 0.0) / 2.0)
        out[high] = -np.sqrt(max(float(self.well.w2(np.array(1.0))), 0.0) / 2.0)
        return out

    # ---- V and derivatives ---------------------------------------------------

    @property
    def _alpha(self) -> float:
        return 1.0 / (self.dim - 1)

    def v(self, t):
        return self.phi(t) ** (self.dim / (self.dim - 1.0))

    def v1(self, t):
        a = self._alpha
        return (1.0 + a) * self.phi(t) ** a * self.phi1(t)

    def v2(self, t):
        a = self._alpha
        p = self.phi(t)
        p1 = self.phi1(t)
        p2 = self.phi2(t)
        out = np.zeros_like(p)
        pos = p > 0.0
        out[pos] = (1.0 + a) * (a * p1[pos] ** 2 * p[pos] ** (a - 1.0)
                                + p[pos] ** a * p2[pos])
        return out

    def v_inverse(self, y):
        """Monotone inverse of V on [0, 1] (vectorized, to interpolation accuracy)."""
        return self.phi_inverse(np.asarray(y, dtype=float) ** ((self.dim - 1.0) / self.dim))

    def phi_inverse(self, y):
        y = np.clip(np.asarray(y, dtype=float), 0.0, 1.0)
        t = np.interp(y, self._phi_spline.phi_nodes, self._phi_spline.t_nodes)
        # Newton polish; Phi' vanishes only at the endpoints, which map exactly.
        for _ in range(3):
            slope = self.phi1(t)
            good = slope > 1e-9
            t = np.where(good, np.clip(t - (self.phi(t) - y) / np.where(good, slope, 1.0), 0.0, 1.0), t)
        return t


class _PhiSpline:
    __slots__ = ("spline", "t_nodes", "phi_nodes")

    def __init__(self, spline, t_nodes, phi_nodes):
        self.spline = spline
        self.t_nodes = t_nodes
        self.phi_nodes = phi_nodes

    def __call__(self, t):
        return self.spline(t)


def _build_phi_spline(well: DoubleWell) -> _PhiSpline:
    """Cumulative integral of sqrt(W) on a Chebyshev grid, cell-wise Gauss."""
    t_nodes = probe_grid(PROBE_POINTS + 1)
    gx, gw = np.polynomial.legendre.leggauss(7)
    a = t_nodes[:-1]
    b = t_nodes[1:]
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    pts = mid[:, None] + half[:, None] * gx[None, :]
    vals = np.sqrt(np.maximum(well.w(pts.ravel()), 0.0)).reshape(pts.shape)
    increments = (vals * gw[None, :]).sum(axis=1) * half
    phi_nodes = np.concatenate([[0.0], np.cumsum(increments)])
    if abs(phi_nodes[-1] - 1.0) > 1e-8:
        raise QuadratureFailure(
            f"Phi(1) = {phi_nodes[-1]!r}; well does not look normalized"
        )
    spline = CubicSpline(t_nodes, phi_nodes)
    return _PhiSpline(spline, t_nodes, phi_nodes)


def _bound_constant(ch: PotentialChain, delta: float) -> float:
    """Smallest C for the two-sided near-well bounds on (0, delta] and [1-delta, 1)."""
    tt = probe_grid()
    lo = tt[(tt > 0.0) & (tt <= delta)]
    hi = tt[(tt >= 1.0 - delta) & (tt < 1.0)]
    if lo.size == 0 or hi.size == 0:
        return np.inf
    a = ch._alpha
    ratios = []
    w, w1, w2 = ch.well.w, ch.well.w1, ch.well.w2
    ratios += [w(lo) / lo**2, w1(lo) / lo, w2(lo),
               ch.phi(lo) / lo**2, ch.v(lo) / lo ** (2 + 2 * a)]
    ratios += [w(hi) / (1 - hi) ** 2, -w1(hi) / (1 - hi), w2(hi)]
    worst = 0.0
    for r in ratios:
        rmin = float(np.min(r))
        rmax = float(np.max(r))
        if rmin <= 0.0:
            return np.inf
        worst = max(worst, rmax, 1.0 / rmin)
    return worst


def _estimate_delta0(ch: PotentialChain) -> tuple[float, float]:
    """Largest delta with bound constant <= 1e3, by scan plus bisection."""
    deltas = np.linspace(0.499, 0.005, 60)
    good = None
    bad = 0.4999
    for d in deltas:
        if _bound_constant(ch, d) <= _BOUND_CONSTANT_CAP:
            good = d
            break
        bad = d
    if good is None:
        raise NonAdmissible("no delta in (0, 1/2) satisfies the near-well bounds")
    lo, hi = good, bad
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        if _bound_constant(ch, mid) <= _BOUND_CONSTANT_CAP:
            lo = mid
        else:
            hi = mid
    return lo, _bound_constant(ch, lo)


def chain(well: DoubleWell, n: int) -> PotentialChain:
    """Build the Phi, V chain for a normalized well in dimension n >= 2."""
    return PotentialChain(well=well, dim=n)
