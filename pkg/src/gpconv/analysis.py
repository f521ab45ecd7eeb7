"""Design geometry, discrete norms, error measurement and rate fitting.

Convergence is reported against the fill distance of the design: the
largest distance from any domain point to its nearest design point.  On an
interval this is exact from sorted gaps and boundary offsets.  Errors are
measured on a uniform mesh (trapezoid quadrature for the integral norms,
central finite differences for derivative terms) and rates come from
ordinary least squares on the log-log tail.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import MeshError, ParameterError

ERROR_FLOOR = 1e-16

NORM_KINDS = ("l2", "h1", "h2", "sup")


@dataclass(frozen=True)
class DesignSet:
    """Sorted design points inside an interval domain."""

    points: np.ndarray
    domain: tuple[float, float]

    def __post_init__(self):
        pts = np.sort(np.asarray(self.points, dtype=float).ravel())
        a, b = float(self.domain[0]), float(self.domain[1])
        if not a < b:
            raise ParameterError(f"domain must satisfy a < b, got ({a}, {b})")
        if pts.size == 0:
            raise ParameterError("design must contain at least one point")
        if pts[0] < a or pts[-1] > b:
            raise ParameterError("design points must lie inside the domain")
        if np.any(np.diff(pts) == 0.0):
            raise ParameterError("design points must be pairwise distinct")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "domain", (a, b))


@dataclass(frozen=True)
class RateFit:
    """Least-squares slope of log(error) against log(fill distance)."""

    slope: float
    intercept: float
    r_squared: float
    points_used: int

    def __post_init__(self):
        if self.points_used < 2:
            raise ParameterError("a rate fit needs at least two points")


def fill_distance(design: DesignSet) -> float:
    """Largest distance from any domain point to its nearest design point.

    Exact in 1-D: max of the boundary offsets and half the interior gaps.
    """
    pts = design.points
    a, b = design.domain
    interior = 0.0 if len(pts) < 2 else float(np.max(np.diff(pts))) / 2.0
    return max(pts[0] - a, b - pts[-1], interior)


def min_separation(design: DesignSet) -> float:
    if len(design.points) < 2:
        raise ParameterError("need at least two points for a separation distance")
    return float(np.min(np.diff(design.points)))


def mesh_ratio(design: DesignSet) -> float:
    """Twice the fill distance over the minimum pairwise distance."""
    return 2.0 * fill_distance(design) / min_separation(design)


def uniform_design(domain: tuple[float, float], n: int) -> DesignSet:
    """Equispaced design u_i = a + i (b - a)/n for i = 1..n.

    An endpoint-anchored family whose fill distance is exactly |b - a|/n
    for every n.  The uncovered boundary strip sits at the left end; with
    the truth functions used here that keeps boundary extrapolation from
    dominating the error at fine levels.
    """
    a, b = domain
    if n < 1:
        raise ParameterError(f"n must be positive, got {n}")
    return DesignSet(points=a + np.arange(1, n + 1) * (b - a) / n, domain=(float(a), float(b)))


def _mesh_spacing(mesh: np.ndarray) -> float:
    mesh = np.asarray(mesh, dtype=float)
    if mesh.ndim != 1 or mesh.size < 2:
        raise MeshError("mesh must be a 1-D array with at least two points")
    gaps = np.diff(mesh)
    h = float(gaps[0])
    if h <= 0 or not np.allclose(gaps, h, rtol=1e-8, atol=0.0):
        raise MeshError("mesh must be uniformly spaced and increasing")
    return h


def _difference_derivatives(values: np.ndarray, h: float, order: int) -> list[np.ndarray]:
    """values and its first ``order`` central-difference derivatives."""
    derivatives = [np.asarray(values, dtype=float)]
    for _ in range(order):
        derivatives.append(np.gradient(derivatives[-1], h, edge_order=2))
    return derivatives


def discrete_norm(values, mesh, kind: str, order: int) -> float:
    """Discrete Sobolev or Hoelder norm of mesh values.

    ``sobolev_discrete`` is sqrt of the summed trapezoid integrals of the
    squared derivatives up to ``order``; ``holder_discrete`` sums the max
    absolute derivatives (integer-order C^p norm, no fractional seminorm).
    """
    if order < 0:
        raise ParameterError(f"order must be non-negative, got {order}")
    mesh = np.asarray(mesh, dtype=float)
    values = np.asarray(values, dtype=float)
    if values.shape != mesh.shape:
        raise MeshError("values and mesh must have matching shapes")
    if mesh.size < order + 2:
        raise MeshError(f"mesh must hold at least order + 2 = {order + 2} points")
    h = _mesh_spacing(mesh)
    derivatives = _difference_derivatives(values, h, order)
    if kind == "sobolev_discrete":
        total = sum(float(np.trapezoid(d * d, dx=h)) for d in derivatives)
        return math.sqrt(total)
    if kind == "holder_discrete":
        return sum(float(np.max(np.abs(d))) for d in derivatives)
    raise ParameterError(f"unknown discrete norm kind {kind!r}")


def error_norm(truth, approx, mesh, kind: str) -> float:
    """Norm of (truth - approx) sampled on a uniform mesh.

    ``truth`` may be a callable (evaluated on the mesh) or an array of mesh
    values.  Supported kinds: "l2", "h1", "h2" and "sup".
    """
    mesh = np.asarray(mesh, dtype=float)
    approx = np.asarray(approx, dtype=float)
    truth_vals = np.asarray(truth(mesh) if callable(truth) else truth, dtype=float)
    if truth_vals.shape != mesh.shape or approx.shape != mesh.shape:
        raise MeshError("truth and approximation must match the mesh")
    diff = truth_vals - approx
    if kind == "sup":
        _mesh_spacing(mesh)
        return float(np.max(np.abs(diff)))
    if kind == "l2":
        h = _mesh_spacing(mesh)
        return math.sqrt(float(np.trapezoid(diff * diff, dx=h)))
    if kind in ("h1", "h2"):
        return discrete_norm(diff, mesh, "sobolev_discrete", order=int(kind[1]))
    raise ParameterError(f"unknown error norm kind {kind!r}")


def fit_rate(h_values, errors, tail: int) -> RateFit:
    """OLS fit of log(error) on log(h) over the ``tail`` smallest h values.

    The slope is the convergence rate in h.  Callers should floor errors at
    1e-16 beforehand; non-positive entries are rejected here.
    """
    h_values = np.asarray(h_values, dtype=float)
    errors = np.asarray(errors, dtype=float)
    if h_values.shape != errors.shape or h_values.ndim != 1:
        raise ParameterError("h_values and errors must be 1-D arrays of equal length")
    if tail < 2 or tail > len(h_values):
        raise ParameterError(f"tail must be between 2 and {len(h_values)}, got {tail}")
    if np.any(h_values <= 0):
        raise ParameterError("fill distances must be positive")
    if np.any(errors <= 0):
        raise ParameterError("errors must be positive (floor them at 1e-16 first)")

    keep = np.argsort(h_values)[:tail]
    log_h = np.log(h_values[keep])
    log_e = np.log(errors[keep])
    slope, intercept = np.polyfit(log_h, log_e, 1)
    residual = log_e - (slope * log_h + intercept)
    ss_res = float(np.sum(residual**2))
    ss_tot = float(np.sum((log_e - np.mean(log_e)) ** 2))
    r_squared = 1.0 if ss_tot == 0.0 else max(0.0, 1.0 - ss_res / ss_tot)
    return RateFit(
        slope=float(slope),
        intercept=float(intercept),
        r_squared=float(min(r_squared, 1.0)),
        points_used=int(tail),
    )


def matern_equivalence_constants(
    nu: float, lam: float, sigma_sq: float, d: int
) -> tuple[float, float]:
    """Constants framing the Matern RKHS norm against the Sobolev norm.

    For smoothness nu, length scale lambda and variance sigma^2 in dimension
    d the two-sided comparison constants are

        sigma Gamma(nu + d/2)^(1/2) lambda^(d/2) / (pi^(d/4) Gamma(nu)^(1/2))

    times min{1, 1/lambda} (lower) and max{1, 1/lambda} (upper).
    """
    if not nu > 0 or math.isinf(nu):
        raise ParameterError(f"nu must be positive and finite, got {nu}")
    if lam <= 0 or sigma_sq <= 0 or d < 1:
        raise ParameterError("lam and sigma_sq must be positive and d >= 1")
    core = (
        math.sqrt(sigma_sq)
        * math.exp(0.5 * (math.lgamma(nu + d / 2.0) - math.lgamma(nu)))
        * lam ** (d / 2.0)
        * math.pi ** (-d / 4.0)
    )
    return core * min(1.0, 1.0 / lam), core * max(1.0, 1.0 / lam)
