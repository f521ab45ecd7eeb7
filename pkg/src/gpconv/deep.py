"""Layered conditionally-Gaussian hierarchies and their posterior sampling.

A depth-D hierarchy starts from a stationary Matern layer and feeds each
layer's sample into the covariance kernel of the next: through input
warping (the layer becomes the warping map) or through a single-component
mixture where the coefficient is F(layer) with F(x) = x^2 + eta > 0.  A
width-L variant (depth 1) draws L independent initial layers and uses them
as the coefficients of an L-component mixture.

The layer feeding the final kernel may be truncated to a discrete Hoelder
or Sobolev norm ball; sampling then rejects and redraws until the ball is
hit.  Posterior inference over the hidden layers marginalises the final
layer analytically (the data are conditionally Gaussian given the hidden
layers) and runs a preconditioned Crank-Nicolson walk on the whitened
layer coefficients, ``xi' = sqrt(1 - beta^2) xi + beta eta``, accepted by
the marginal likelihood ratio.  Noise-free data are not supported: the
conditioning is only defined through the noisy likelihood, so callers pass
a positive (possibly N-dependent) noise level.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .analysis import discrete_norm
from .errors import (
    DomainError,
    EvaluationError,
    GpconvError,
    ParameterError,
    TruncationError,
)
from .functions import FunctionHandle, piecewise_linear
from .gp import PATH_JITTER_SCALE, TrainingData
from .kernels import (
    KernelSpec,
    MaternKernel,
    MixtureKernel,
    WarpKernel,
    gram,
    kernel_matrix,
)

TUNE_WINDOW = 50
TUNE_LOW = 0.15
TUNE_HIGH = 0.40


@dataclass(frozen=True)
class Truncation:
    """Norm-ball constraint on the layer feeding the final kernel."""

    norm_kind: str  # "holder_discrete" or "sobolev_discrete"
    order: int
    radius: float
    max_rejections: int = 1000

    def __post_init__(self):
        if self.norm_kind not in ("holder_discrete", "sobolev_discrete"):
            raise ParameterError(f"unknown truncation norm {self.norm_kind!r}")
        if self.order < 0 or self.radius <= 0 or self.max_rejections < 1:
            raise ParameterError("truncation needs order >= 0, radius > 0, max_rejections >= 1")

    def admits(self, values: np.ndarray, mesh: np.ndarray) -> bool:
        return discrete_norm(values, mesh, self.norm_kind, self.order) <= self.radius


@dataclass(frozen=True)
class LayerSpec:
    """One transition of the hierarchy: how layer n builds the kernel of n+1.

    ``truncation`` constrains this transition's input layer; the hierarchy
    only permits it on the final transition, i.e. on the layer the final
    kernel is built from.
    """

    construction: str  # "warp" or "mixture_f"
    base_nu: float
    base_lambda: float = 1.0
    base_sigma_sq: float = 1.0
    link_eta: float = 1.0
    truncation: Truncation | None = None

    def __post_init__(self):
        if self.construction not in ("warp", "mixture_f"):
            raise ParameterError(f"unknown construction {self.construction!r}")
        if self.construction == "mixture_f" and self.link_eta <= 0:
            raise ParameterError("link_eta must be positive")
        # base kernel parameters validated by MaternKernel
        self.base_kernel()

    def base_kernel(self) -> MaternKernel:
        return MaternKernel(self.base_nu, self.base_lambda, self.base_sigma_sq)


@dataclass(frozen=True)
class DgpSpec:
    """Depth-D (or width-L) hierarchy description."""

    depth: int
    layer0_nu: float
    layers: tuple[LayerSpec, ...]
    layer0_lambda: float = 1.0
    layer0_sigma_sq: float = 1.0
    width: int = 1
    rescale_warp: bool = False
    domain: tuple[float, float] = (0.0, 5.0)

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        if self.depth < 1:
            raise ParameterError("depth must be at least 1")
        if len(self.layers) != self.depth:
            raise ParameterError(f"need {self.depth} layer specs, got {len(self.layers)}")
        if self.width < 1:
            raise ParameterError("width must be at least 1")
        if self.width > 1 and (self.depth != 1 or self.layers[0].construction != "mixture_f"):
            raise ParameterError("width > 1 requires depth 1 with a mixture_f construction")
        for layer in self.layers[:-1]:
            if layer.truncation is not None:
                raise ParameterError(
                    "truncation is only legal on the layer feeding the final kernel"
                )
        if not self.domain[0] < self.domain[1]:
            raise ParameterError("domain must satisfy a < b")
        self.layer0_kernel()

    def layer0_kernel(self) -> MaternKernel:
        return MaternKernel(self.layer0_nu, self.layer0_lambda, self.layer0_sigma_sq)


def _affine_rescale(values: np.ndarray, domain: tuple[float, float]) -> np.ndarray:
    a, b = domain
    lo, hi = float(np.min(values)), float(np.max(values))
    if hi - lo <= 0.0:
        raise DomainError("warp layer is constant; affine rescaling is degenerate")
    return (values - lo) / (hi - lo) * (b - a) + a


def layer_kernel(
    layer: LayerSpec,
    prev_values: np.ndarray,
    mesh: np.ndarray,
    rescale_warp: bool,
    domain: tuple[float, float],
) -> KernelSpec:
    """Kernel of the next layer, built from the previous layer's mesh values.

    Mesh values are extended to arbitrary inputs by piecewise-linear
    interpolation.  For warping, the layer itself is the warping map
    (optionally rescaled affinely onto the domain); for mixture_f the
    coefficient is F(layer) = layer^2 + eta.  A (width, m) array of
    previous values yields a multi-component mixture.
    """
    base = layer.base_kernel()
    prev_values = np.asarray(prev_values, dtype=float)
    if not np.all(np.isfinite(prev_values)):
        raise EvaluationError("layer values are not finite")

    if layer.construction == "warp":
        if prev_values.ndim != 1:
            raise ParameterError("warp construction takes a single previous layer")
        vals = _affine_rescale(prev_values, domain) if rescale_warp else prev_values
        return WarpKernel(w=piecewise_linear(mesh, vals, label="layer warp"), base=base)

    rows = prev_values[None, :] if prev_values.ndim == 1 else prev_values
    eta = layer.link_eta
    components = []
    for row in rows:
        interp = piecewise_linear(mesh, row, label="layer coefficient")
        sigma_fn = FunctionHandle(
            fn=lambda u, f=interp: f(u) ** 2 + eta,
            declared_smoothness=interp.declared_smoothness,
            label=f"F(layer), eta={eta}",
        )
        components.append((sigma_fn, base))
    return MixtureKernel(components=tuple(components))


def _path_cholesky(kernel: KernelSpec, mesh: np.ndarray) -> np.ndarray:
    matrix = gram(kernel, mesh)
    jitter = PATH_JITTER_SCALE * float(np.max(np.diag(matrix)))
    return linalg.cholesky(matrix + jitter * np.eye(len(matrix)), lower=True, check_finite=False)


def _check_mesh(mesh) -> np.ndarray:
    mesh = np.asarray(mesh, dtype=float).ravel()
    if mesh.size < 2 or np.any(np.diff(mesh) <= 0):
        raise ParameterError("mesh must be sorted with at least two distinct points")
    return mesh


def sample_dgp_prior(spec: DgpSpec, mesh, seed: int) -> list[np.ndarray]:
    """One draw of every layer of the hierarchy on the mesh.

    Returns [f0, f1, ..., fD]; for width L > 1 the first entry is an
    (L, m) array of the independent initial layers.  A truncated layer is
    redrawn until it lands in its norm ball, up to max_rejections.
    """
    mesh = _check_mesh(mesh)
    rng = np.random.default_rng(seed)
    chol0 = _path_cholesky(spec.layer0_kernel(), mesh)

    # layers[i].truncation constrains the input layer f^i of transition i;
    # validation restricts it to the layer feeding the final kernel.
    trunc0 = spec.layers[0].truncation
    if spec.width > 1:
        current = np.vstack(
            [_draw_truncated(chol0, trunc0, mesh, rng) for _ in range(spec.width)]
        )
    else:
        current = _draw_truncated(chol0, trunc0, mesh, rng)
    layers = [current]

    for n, layer in enumerate(spec.layers):
        kernel = layer_kernel(layer, current, mesh, spec.rescale_warp, spec.domain)
        chol = _path_cholesky(kernel, mesh)
        trunc = spec.layers[n + 1].truncation if n + 1 < spec.depth else None
        current = _draw_truncated(chol, trunc, mesh, rng)
        layers.append(current)
    return layers


def _draw_truncated(
    chol: np.ndarray, trunc: Truncation | None, mesh: np.ndarray, rng
) -> np.ndarray:
    if trunc is None:
        return chol @ rng.standard_normal(len(mesh))
    for _ in range(trunc.max_rejections):
        values = chol @ rng.standard_normal(len(mesh))
        if trunc.admits(values, mesh):
            return values
    raise TruncationError(
        f"no draw satisfied the norm ball after {trunc.max_rejections} attempts "
        f"(empirical acceptance rate 0/{trunc.max_rejections}); enlarge the radius"
    )


class DgpChain:
    """Preconditioned Crank-Nicolson walk over the hidden layers.

    The state is the whitened coefficient vector of every hidden layer
    (layers 0 .. D-1 on the mesh); the final layer is marginalised, so the
    target density of the hidden layers is the Gaussian marginal likelihood

        Phi = 1/2 log det(K_D + delta^2 I) + 1/2 y^T (K_D + delta^2 I)^{-1} y

    with K_D the final-layer Gram matrix at the training points.  Proposals
    whose kernel assembly fails, or whose constrained layer leaves its norm
    ball, count as rejections.  The whole trajectory is reproducible from
    (spec, data, mesh, step_beta, rng_seed).
    """

    def __init__(
        self,
        spec: DgpSpec,
        data: TrainingData,
        mesh,
        step_beta: float,
        rng_seed: int,
    ):
        if data.noise_var <= 0:
            raise ParameterError(
                "hidden-layer conditioning requires noise_var > 0; use a "
                "noise schedule for nominally noise-free data"
            )
        if not 0.0 <= step_beta <= 1.0:
            raise ParameterError(f"step_beta must lie in [0, 1], got {step_beta}")
        self.spec = spec
        self.data = data
        self.mesh = _check_mesh(mesh)
        self.step_beta = float(step_beta)
        self.rng_seed = int(rng_seed)
        self.rng = np.random.default_rng(rng_seed)
        self.trace: list[dict] = []
        self.warnings: list[str] = []
        self.iteration = 0
        self.n_trunc_rejections = 0
        self.n_assembly_failures = 0
        self.n_accepted = 0
        self._tuning = False
        self._window_accepts: list[bool] = []

        self._chol0 = _path_cholesky(spec.layer0_kernel(), self.mesh)
        m = len(self.mesh)
        shape = (spec.width, m) if spec.width > 1 else (m,)

        # Rejection-sample an admissible starting state from the prior.
        budget = spec.layers[-1].truncation.max_rejections if spec.layers[-1].truncation else 50
        state = None
        for _ in range(budget):
            self.whitened_state = [self.rng.standard_normal(shape)]
            for _ in range(spec.depth - 1):
                self.whitened_state.append(self.rng.standard_normal(m))
            state = self._assemble(self.whitened_state)
            if state is not None:
                break
        if state is None:
            raise TruncationError(
                f"no admissible starting state found in {budget} prior draws"
            )
        self._current = state
        self.mean_accumulator = np.zeros(m)
        self.n_accumulated = 0

    # -- state assembly -------------------------------------------------

    def _assemble(self, whitened: list[np.ndarray]):
        """Hidden layer values, final kernel and likelihood for a whitened state.

        Returns None when the state is inadmissible (truncation violated or
        kernel assembly failed), which the caller treats as a rejection.
        """
        spec = self.spec
        try:
            values = whitened[0] @ self._chol0.T if whitened[0].ndim == 2 else self._chol0 @ whitened[0]
            hidden = [values]
            for n in range(1, spec.depth):
                kernel = layer_kernel(
                    spec.layers[n - 1], hidden[-1], self.mesh, spec.rescale_warp, spec.domain
                )
                chol = _path_cholesky(kernel, self.mesh)
                hidden.append(chol @ whitened[n])

            trunc = spec.layers[-1].truncation
            if trunc is not None and not self._admits(trunc, hidden[-1]):
                self.n_trunc_rejections += 1
                return None

            final_kernel = layer_kernel(
                spec.layers[-1], hidden[-1], self.mesh, spec.rescale_warp, spec.domain
            )
            train = gram(final_kernel, self.data.points)
            train[np.diag_indices_from(train)] += self.data.noise_var
            factor = linalg.cholesky(train, lower=True, check_finite=False)
        except (np.linalg.LinAlgError, GpconvError):
            self.n_assembly_failures += 1
            return None

        solved = linalg.cho_solve((factor, True), self.data.values, check_finite=False)
        log_det = 2.0 * float(np.sum(np.log(np.diag(factor))))
        neg_log_like = 0.5 * log_det + 0.5 * float(self.data.values @ solved)
        if not np.isfinite(neg_log_like):
            self.n_assembly_failures += 1
            return None
        return {
            "hidden": hidden,
            "kernel": final_kernel,
            "solved": solved,
            "neg_log_like": neg_log_like,
            "mean": None,
        }

    def _admits(self, trunc: Truncation, values: np.ndarray) -> bool:
        rows = values[None, :] if values.ndim == 1 else values
        return all(trunc.admits(row, self.mesh) for row in rows)

    def conditional_mean(self) -> np.ndarray:
        """Posterior mean on the mesh given the current hidden layers."""
        if self._current["mean"] is None:
            cross = kernel_matrix(self._current["kernel"], self.mesh, self.data.points)
            self._current["mean"] = cross @ self._current["solved"]
        return self._current["mean"]

    @property
    def log_likelihood(self) -> float:
        return -self._current["neg_log_like"]

    # -- MCMC -----------------------------------------------------------

    def step(self) -> bool:
        """Advance one iteration; returns whether the proposal was accepted."""
        beta = self.step_beta
        root = np.sqrt(max(0.0, 1.0 - beta * beta))
        proposal = [
            root * xi + beta * self.rng.standard_normal(xi.shape)
            for xi in self.whitened_state
        ]
        log_u = np.log(self.rng.uniform())

        state = self._assemble(proposal)
        accepted = False
        if state is not None:
            log_ratio = self._current["neg_log_like"] - state["neg_log_like"]
            if log_u < min(0.0, log_ratio):
                self.whitened_state = proposal
                self._current = state
                accepted = True

        self.iteration += 1
        self.n_accepted += int(accepted)
        self.trace.append(
            {
                "iteration": self.iteration,
                "log_likelihood": -self._current["neg_log_like"],
                "accepted": accepted,
                "beta": self.step_beta,
            }
        )
        if self._tuning:
            self._window_accepts.append(accepted)
            if len(self._window_accepts) >= TUNE_WINDOW:
                rate = sum(self._window_accepts) / len(self._window_accepts)
                if rate < TUNE_LOW:
                    self.step_beta = max(self.step_beta / 2.0, 1e-6)
                elif rate > TUNE_HIGH:
                    self.step_beta = min(self.step_beta * 2.0, 1.0)
                self._window_accepts = []
        return accepted

    def accumulate(self):
        self.mean_accumulator += self.conditional_mean()
        self.n_accumulated += 1

    def trace_csv(self) -> str:
        """Chain trace as CSV text (iteration, log_likelihood, accepted, beta)."""
        lines = ["iteration,log_likelihood,accepted,beta"]
        for row in self.trace:
            lines.append(
                f"{row['iteration']},{float(row['log_likelihood'])!r},"
                f"{int(row['accepted'])},{float(row['beta'])!r}"
            )
        return "\n".join(lines) + "\n"


def pcn_step(chain: DgpChain) -> DgpChain:
    """Advance the chain by a single iteration and return it."""
    chain.step()
    return chain


def dgp_posterior_mean(chain: DgpChain, n_burn: int, n_iter: int) -> np.ndarray:
    """Posterior mean of the final layer on the chain's mesh.

    Runs ``n_burn`` tuning iterations, freezes the step size, then averages
    the conditional posterior mean over ``n_iter`` further iterations.  If
    more than half of all proposals violated the truncation ball, a warning
    is recorded on ``chain.warnings``.
    """
    if n_iter < 1:
        raise ParameterError(f"n_iter must be at least 1, got {n_iter}")
    if n_burn < 0:
        raise ParameterError(f"n_burn must be non-negative, got {n_burn}")
    chain._tuning = True
    for _ in range(n_burn):
        chain.step()
    chain._tuning = False
    for _ in range(n_iter):
        chain.step()
        chain.accumulate()
    total = chain.iteration
    if total > 0 and chain.n_trunc_rejections > 0.5 * total:
        chain.warnings.append(
            f"truncation ball rejected {chain.n_trunc_rejections}/{total} proposals"
        )
    return chain.mean_accumulator / chain.n_accumulated
