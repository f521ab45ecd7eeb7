"""Covariance kernels: the Matern family and three non-stationary constructions.

The stationary building block is the Matern kernel

    k(r) = sigma^2 (2^(1-nu)/Gamma(nu)) (sqrt(2 nu) r / lambda)^nu
           K_nu(sqrt(2 nu) r / lambda),

with the Gaussian kernel sigma^2 exp(-r^2 / (2 lambda^2)) as the nu -> inf
limit, kept as its own variant.  Non-stationary kernels are built from these
by input warping, coefficient mixtures, or position-dependent length scales
with a normalising prefactor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy import special

from .bessel import log_bessel_k
from .errors import (
    DomainError,
    EvaluationError,
    ParameterError,
    UnsupportedKernelError,
)
from .functions import FunctionHandle

# Upper bound on the universal constant in the Gaussian-derivative estimate
# used by the kernel-derivative bounds; only the bound is known.
C0_DERIVATIVE_BOUND = 1.0866

_BELL_MAX_N = 25


@dataclass(frozen=True)
class MaternKernel:
    nu: float
    lam: float = 1.0
    sigma_sq: float = 1.0

    def __post_init__(self):
        _check_positive(nu=self.nu, lam=self.lam, sigma_sq=self.sigma_sq)
        if math.isinf(self.nu):
            raise ParameterError("use GaussianKernel for the infinite-smoothness limit")


@dataclass(frozen=True)
class GaussianKernel:
    lam: float = 1.0
    sigma_sq: float = 1.0

    def __post_init__(self):
        _check_positive(lam=self.lam, sigma_sq=self.sigma_sq)


@dataclass(frozen=True)
class WarpKernel:
    w: FunctionHandle
    base: "KernelSpec"

    def __post_init__(self):
        if not is_stationary(self.base):
            raise ParameterError("warp base kernel must be stationary")


@dataclass(frozen=True)
class MixtureKernel:
    components: tuple[tuple[FunctionHandle, "KernelSpec"], ...]

    def __post_init__(self):
        if len(self.components) < 1:
            raise ParameterError("mixture needs at least one component")
        object.__setattr__(self, "components", tuple(tuple(c) for c in self.components))


@dataclass(frozen=True)
class ConvolutionKernel:
    lambda_a: FunctionHandle
    base_iso: "KernelSpec"
    dim: int = 1

    def __post_init__(self):
        if not is_stationary(self.base_iso):
            raise ParameterError("convolution base kernel must be isotropic")
        if self.dim < 1:
            raise ParameterError("dim must be a positive integer")


KernelSpec = Union[MaternKernel, GaussianKernel, WarpKernel, MixtureKernel, ConvolutionKernel]


def _check_positive(**params):
    for name, value in params.items():
        if not value > 0:
            raise ParameterError(f"{name} must be positive, got {value}")


def is_stationary(spec: KernelSpec) -> bool:
    # The 1-D stationary kernels here are all isotropic as well.
    return isinstance(spec, (MaternKernel, GaussianKernel))


def _as_points(points) -> np.ndarray:
    """Canonicalise to an (n, d) float array."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 0:
        pts = pts.reshape(1, 1)
    elif pts.ndim == 1:
        pts = pts[:, None]
    elif pts.ndim != 2:
        raise ParameterError(f"points must be scalars, vectors or (n, d) arrays, got ndim={pts.ndim}")
    return pts


def _coords1d(pts: np.ndarray, what: str) -> np.ndarray:
    if pts.shape[1] != 1:
        raise ParameterError(f"{what} requires 1-D inputs, got d={pts.shape[1]}")
    return pts[:, 0]


def _cross_dist(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.shape[1] == 1:
        return np.abs(a[:, 0][:, None] - b[:, 0][None, :])
    sq = np.sum((a[:, None, :] - b[None, :, :]) ** 2, axis=-1)
    return np.sqrt(np.maximum(sq, 0.0))


def _half_integer_p(nu: float) -> int | None:
    p = nu - 0.5
    if p >= 0 and p == math.floor(p):
        return int(p)
    return None


def _matern_profile(nu: float, lam: float, sigma_sq: float, r: np.ndarray) -> np.ndarray:
    """Matern kernel as a function of distance, vectorised over r >= 0."""
    r = np.asarray(r, dtype=float)
    z = math.sqrt(2.0 * nu) * r / lam
    p = _half_integer_p(nu)
    if p is not None:
        # exponential-times-polynomial closed form for nu = p + 1/2
        poly = np.zeros_like(z)
        for i in range(p + 1):
            coeff = math.factorial(p + i) / (math.factorial(i) * math.factorial(p - i))
            poly += coeff * (2.0 * z) ** (p - i)
        scale = math.factorial(p) / math.factorial(2 * p)
        return sigma_sq * scale * np.exp(-z) * poly
    return _matern_bessel_profile(nu, sigma_sq, z)


def _matern_bessel_profile(nu: float, sigma_sq: float, z: np.ndarray) -> np.ndarray:
    """Bessel-function form of the Matern kernel; z = sqrt(2 nu) r / lambda.

    The fast path evaluates K_nu directly; entries where that over- or
    underflows (tiny z, or very large orders) are redone in log space with
    the self-contained routine, so the whole (nu, z) range is covered.
    """
    out = np.full(z.shape, sigma_sq, dtype=float)
    pos = z > 0.0
    if not np.any(pos):
        return out
    zp = z[pos]
    prefactor_log = (1.0 - nu) * math.log(2.0) - math.lgamma(nu)
    with np.errstate(over="ignore", under="ignore", invalid="ignore"):
        direct = special.kv(nu, zp) * np.exp(prefactor_log + nu * np.log(zp))
    bad = ~np.isfinite(direct) | (direct <= 0.0)
    if np.any(bad):
        log_k = prefactor_log + nu * np.log(zp[bad]) + log_bessel_k(nu, zp[bad])
        direct[bad] = np.exp(log_k)
    out[pos] = sigma_sq * np.minimum(direct, 1.0)
    return out


def matern_eval(nu: float, lam: float, sigma_sq: float, r: float) -> float:
    """Matern kernel value at distance r; nu = inf gives the Gaussian kernel.

    The r = 0 value is sigma_sq exactly (the Bessel form has a removable
    singularity there).  Half-integer orders use the closed form; other
    orders go through the Bessel-function representation.
    """
    if not nu > 0:
        raise ParameterError(f"nu must be positive, got {nu}")
    _check_positive(lam=lam, sigma_sq=sigma_sq)
    if r < 0:
        raise ParameterError(f"distance must be non-negative, got {r}")
    if math.isinf(nu):
        return float(sigma_sq * math.exp(-(r * r) / (2.0 * lam * lam)))
    return float(_matern_profile(nu, lam, sigma_sq, np.asarray(r, dtype=float)))


def _stationary_profile(spec: KernelSpec, r: np.ndarray) -> np.ndarray:
    if isinstance(spec, MaternKernel):
        return _matern_profile(spec.nu, spec.lam, spec.sigma_sq, r)
    if isinstance(spec, GaussianKernel):
        r = np.asarray(r, dtype=float)
        return spec.sigma_sq * np.exp(-(r * r) / (2.0 * spec.lam * spec.lam))
    raise UnsupportedKernelError(f"{type(spec).__name__} has no radial profile")


def _eval_fn(handle: FunctionHandle, x: np.ndarray, what: str) -> np.ndarray:
    vals = np.asarray(handle(x), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise EvaluationError(f"{what} returned a non-finite value")
    return vals


def kernel_matrix(spec: KernelSpec, a, b=None) -> np.ndarray:
    """Cross-covariance matrix k(a_i, b_j); with b omitted, the Gram matrix.

    The Gram case is exactly symmetric: every entry is assembled from
    expressions symmetric in (i, j).
    """
    pa = _as_points(a)
    pb = pa if b is None else _as_points(b)
    if pa.shape[1] != pb.shape[1]:
        raise ParameterError("point sets have mismatched dimensions")

    if is_stationary(spec):
        return _stationary_profile(spec, _cross_dist(pa, pb))

    if isinstance(spec, WarpKernel):
        ua = _coords1d(pa, "warping kernel")
        ub = ua if b is None else _coords1d(pb, "warping kernel")
        wa = _eval_fn(spec.w, ua, "warping function")
        wb = wa if b is None else _eval_fn(spec.w, ub, "warping function")
        return _stationary_profile(spec.base, np.abs(wa[:, None] - wb[None, :]))

    if isinstance(spec, MixtureKernel):
        ua = _coords1d(pa, "mixture kernel")
        ub = ua if b is None else _coords1d(pb, "mixture kernel")
        out = np.zeros((len(ua), len(ub)))
        for sigma_fn, base in spec.components:
            sa = _eval_fn(sigma_fn, ua, "mixture coefficient")
            sb = sa if b is None else _eval_fn(sigma_fn, ub, "mixture coefficient")
            out += (sa[:, None] * sb[None, :]) * kernel_matrix(base, pa, None if b is None else pb)
        return out

    if isinstance(spec, ConvolutionKernel):
        ua = _coords1d(pa, "convolution kernel")
        ub = ua if b is None else _coords1d(pb, "convolution kernel")
        la = _eval_fn(spec.lambda_a, ua, "length-scale function")
        lb = la if b is None else _eval_fn(spec.lambda_a, ub, "length-scale function")
        if np.any(la <= 0) or np.any(lb <= 0):
            raise DomainError("length-scale function must be strictly positive")
        d = spec.dim
        mean_l = 0.5 * (la[:, None] + lb[None, :])
        # 2^(d/2) la^(d/4) lb^(d/4) assembled as (2 la)^(d/4) (2 lb)^(d/4)
        # so every factor is symmetric in (i, j) down to the last ulp
        sa = (2.0 * la) ** (d / 4.0)
        sb = sa if b is None else (2.0 * lb) ** (d / 4.0)
        prefactor = (sa[:, None] * sb[None, :]) * (la[:, None] + lb[None, :]) ** (-d / 2.0)
        scaled = _cross_dist(pa, pb) / np.sqrt(mean_l)
        return prefactor * _stationary_profile(spec.base_iso, scaled)

    raise UnsupportedKernelError(f"unknown kernel spec {type(spec).__name__}")


def kernel_diag(spec: KernelSpec, points) -> np.ndarray:
    """Vector of k(p_i, p_i); the convolution prefactor is 1 on the diagonal."""
    pts = _as_points(points)
    if is_stationary(spec):
        return np.full(len(pts), float(_stationary_profile(spec, np.zeros(1))[0]))
    if isinstance(spec, WarpKernel):
        return np.full(len(pts), float(_stationary_profile(spec.base, np.zeros(1))[0]))
    if isinstance(spec, MixtureKernel):
        u = _coords1d(pts, "mixture kernel")
        out = np.zeros(len(u))
        for sigma_fn, base in spec.components:
            sig = _eval_fn(sigma_fn, u, "mixture coefficient")
            out += sig * sig * kernel_diag(base, pts)
        return out
    if isinstance(spec, ConvolutionKernel):
        u = _coords1d(pts, "convolution kernel")
        lam_vals = _eval_fn(spec.lambda_a, u, "length-scale function")
        if np.any(lam_vals <= 0):
            raise DomainError("length-scale function must be strictly positive")
        return np.full(len(pts), float(_stationary_profile(spec.base_iso, np.zeros(1))[0]))
    raise UnsupportedKernelError(f"unknown kernel spec {type(spec).__name__}")


def kernel_eval(spec: KernelSpec, u, v) -> float:
    """Kernel value at a single pair of points."""
    value = kernel_matrix(spec, _as_points(u), _as_points(v))[0, 0]
    if not np.isfinite(value):
        raise EvaluationError("kernel evaluation produced a non-finite value")
    return float(value)


def gram(spec: KernelSpec, points) -> np.ndarray:
    """Gram matrix on a point set; exactly symmetric."""
    return kernel_matrix(spec, points)


def check_psd(spec: KernelSpec, points, tol: float) -> tuple[bool, float]:
    """Whether the Gram matrix is positive semi-definite up to -tol.

    Returns the verdict together with the smallest eigenvalue.
    """
    if tol <= 0:
        raise ParameterError(f"tol must be positive, got {tol}")
    eigenvalues = np.linalg.eigvalsh(gram(spec, points))
    smallest = float(eigenvalues[0])
    return smallest >= -tol, smallest


def bell_number(n: int) -> int:
    """Number of set partitions of {1, ..., n}; B_0 = 1.

    Computed with the Bell triangle.  Guarded at n <= 25 so results stay
    inside the exact 64-bit integer range of downstream consumers.
    """
    if n < 0:
        raise ParameterError(f"n must be non-negative, got {n}")
    if n > _BELL_MAX_N:
        raise ParameterError(f"n={n} exceeds the supported range n <= {_BELL_MAX_N}")
    row = [1]
    for _ in range(n):
        nxt = [row[-1]]
        for value in row:
            nxt.append(nxt[-1] + value)
        row = nxt
    return row[0]


def derivative_bound_constant(spec: KernelSpec, p: int, norm_inputs: dict) -> float:
    """Constant bounding the order-2p mixed kernel derivatives.

    Covers warping, mixture and convolution kernels over a Gaussian base;
    the caller supplies the required function norms in ``norm_inputs``:

    - warp:        ``{"w_c2p": ||w||_C^2p}``
    - mixture:     ``{"sigma_c2p_max": max_l ||sigma_l||_C^2p}``
    - convolution: ``{"lambda_c2p": ||lambda_a||_C^2p, "c_min": inf lambda_a,
                      "lambda_c0": ||lambda_a||_C^0 (optional)}``

    The universal factor is pinned at its known upper bound 1.0866.  The
    convolution constant is evaluated with the published grouping and is
    informational only; no convergence check consumes it.
    """
    if p < 1:
        raise ParameterError(f"p must be a positive integer, got {p}")
    b2p = bell_number(2 * p)
    sqrt_fact = math.sqrt(math.factorial(2 * p))

    if isinstance(spec, WarpKernel):
        base = _require_gaussian_base(spec.base, "warp")
        w_norm = _norm_input(norm_inputs, "w_c2p")
        return C0_DERIVATIVE_BOUND * base.sigma_sq * sqrt_fact * b2p * w_norm

    if isinstance(spec, MixtureKernel):
        for _, base in spec.components:
            _require_gaussian_base(base, "mixture")
        sig_norm = _norm_input(norm_inputs, "sigma_c2p_max")
        return C0_DERIVATIVE_BOUND * (2 * p) * 2 ** (4 * p) * sqrt_fact * sig_norm**2

    if isinstance(spec, ConvolutionKernel):
        base = _require_gaussian_base(spec.base_iso, "convolution")
        lam_norm = _norm_input(norm_inputs, "lambda_c2p")
        c_min = _norm_input(norm_inputs, "c_min")
        lam_c0 = norm_inputs.get("lambda_c0", lam_norm)
        if c_min <= 0:
            raise ParameterError("c_min must be positive")
        first = (
            abs(5.0 / 4.0 - 2 * p) ** (2 * p)
            * max(lam_c0, 1.0) ** (0.25 - 2 * p)
            * lam_norm
        ) ** 2
        third = (
            math.factorial(4 * p)
            * 2.0
            * C0_DERIVATIVE_BOUND
            * sqrt_fact
            * lam_norm**2
            * math.factorial(2 * p)
            * (2.0 * c_min) ** (-1 - 2 * p)
        )
        return math.sqrt(2.0) * base.sigma_sq * first * third * lam_norm * b2p**5

    raise UnsupportedKernelError(
        f"no derivative bound is available for {type(spec).__name__}"
    )


def _require_gaussian_base(base: KernelSpec, which: str) -> GaussianKernel:
    if not isinstance(base, GaussianKernel):
        raise UnsupportedKernelError(
            f"derivative bounds for the {which} kernel require a Gaussian base"
        )
    return base


def _norm_input(norm_inputs: dict, key: str) -> float:
    if key not in norm_inputs:
        raise ParameterError(f"norm_inputs is missing required entry {key!r}")
    value = float(norm_inputs[key])
    if value < 0:
        raise ParameterError(f"norm_inputs[{key!r}] must be non-negative")
    return value
