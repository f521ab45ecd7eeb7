"""Scalar function handles used as kernel hyper-parameters.

Warping maps, mixture coefficients and length-scale fields are all plain
scalar functions of a scalar input.  A ``FunctionHandle`` wraps the callable
together with the smoothness the caller asserts for it; built-in handles are
constructed from a small registry of named forms so experiment configs can
be serialised to and from JSON.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np


class FunctionSpecError(ValueError):
    """Raised for malformed or non-serialisable function descriptions."""


@dataclass(frozen=True)
class FunctionHandle:
    """A deterministic scalar function with caller-asserted smoothness.

    ``fn`` must accept floats and numpy arrays elementwise.
    ``declared_smoothness`` is the number of continuous derivatives the
    caller asserts; it is carried as metadata and never verified here.
    ``params`` holds the registry description for built-ins (empty for
    ad-hoc callables, which then cannot be serialised).  Equality compares
    the description (label, smoothness, params), not callable identity.
    """

    fn: Callable = field(compare=False)
    declared_smoothness: float | None = None
    label: str = ""
    params: dict = field(default_factory=dict)

    def __call__(self, x):
        return self.fn(x)

    def to_params(self) -> dict:
        if not self.params:
            raise FunctionSpecError(
                f"function {self.label!r} was built from a raw callable and "
                "cannot be serialised; use a registry form"
            )
        return dict(self.params)


def _poly2(a: float, b: float, c: float) -> FunctionHandle:
    return FunctionHandle(
        fn=lambda u: (a * np.asarray(u, dtype=float) + b) ** 2 + c,
        declared_smoothness=math.inf,
        label=f"({a}*u+{b})^2+{c}",
        params={"kind": "poly2", "a": a, "b": b, "c": c},
    )


def _poly2_sin(a: float, b: float, c: float) -> FunctionHandle:
    def fn(u):
        u = np.asarray(u, dtype=float)
        return (a * u + b) ** 2 + np.sin(u) + c

    return FunctionHandle(
        fn=fn,
        declared_smoothness=math.inf,
        label=f"({a}*u+{b})^2+sin(u)+{c}",
        params={"kind": "poly2_sin", "a": a, "b": b, "c": c},
    )


def _indicator(lo, hi, scale, include_lo=True, include_hi=True) -> FunctionHandle:
    def fn(u):
        u = np.asarray(u, dtype=float)
        left = u >= lo if include_lo else u > lo
        right = u <= hi if include_hi else u < hi
        return scale * (left & right).astype(float)

    lb = "[" if include_lo else "("
    rb = "]" if include_hi else ")"
    return FunctionHandle(
        fn=fn,
        declared_smoothness=0.0,
        label=f"{scale}*1_{lb}{lo},{hi}{rb}",
        params={
            "kind": "indicator",
            "lo": lo,
            "hi": hi,
            "scale": scale,
            "include_lo": include_lo,
            "include_hi": include_hi,
        },
    )


def _piecewise_poly2(split, a1, b1, c1, a2, b2, c2) -> FunctionHandle:
    def fn(u):
        u = np.asarray(u, dtype=float)
        return np.where(
            u < split,
            (a1 * u + b1) ** 2 + c1,
            (a2 * u + b2) ** 2 + c2,
        )

    return FunctionHandle(
        fn=fn,
        declared_smoothness=0.0,
        label=f"poly2 split at {split}",
        params={
            "kind": "piecewise_poly2",
            "split": split,
            "a1": a1,
            "b1": b1,
            "c1": c1,
            "a2": a2,
            "b2": b2,
            "c2": c2,
        },
    )


def _sine(freq: float = 1.0, amp: float = 1.0) -> FunctionHandle:
    return FunctionHandle(
        fn=lambda u: amp * np.sin(freq * np.asarray(u, dtype=float)),
        declared_smoothness=math.inf,
        label=f"{amp}*sin({freq}*u)",
        params={"kind": "sine", "freq": freq, "amp": amp},
    )


def _constant(value: float) -> FunctionHandle:
    def fn(u):
        u = np.asarray(u, dtype=float)
        return np.full_like(u, float(value))

    return FunctionHandle(
        fn=fn,
        declared_smoothness=math.inf,
        label=f"const {value}",
        params={"kind": "constant", "value": value},
    )


def _identity() -> FunctionHandle:
    return FunctionHandle(
        fn=lambda u: np.asarray(u, dtype=float),
        declared_smoothness=math.inf,
        label="u",
        params={"kind": "identity"},
    )


_REGISTRY: dict[str, Callable[..., FunctionHandle]] = {
    "poly2": _poly2,
    "poly2_sin": _poly2_sin,
    "indicator": _indicator,
    "piecewise_poly2": _piecewise_poly2,
    "sine": _sine,
    "constant": _constant,
    "identity": _identity,
}


def make_function(params: dict) -> FunctionHandle:
    """Build a FunctionHandle from its registry description.

    ``params`` is a mapping with a ``kind`` key naming the form plus the
    form's own parameters; unknown kinds and unknown keys are rejected.
    """
    if "kind" not in params:
        raise FunctionSpecError(f"function description missing 'kind': {params}")
    kind = params["kind"]
    if kind not in _REGISTRY:
        raise FunctionSpecError(f"unknown function kind {kind!r}")
    kwargs = {k: v for k, v in params.items() if k != "kind"}
    try:
        return _REGISTRY[kind](**kwargs)
    except TypeError as exc:
        raise FunctionSpecError(f"bad parameters for {kind!r}: {exc}") from exc


def piecewise_linear(mesh: np.ndarray, values: np.ndarray, label: str = "") -> FunctionHandle:
    """Piecewise-linear interpolant of mesh values, constant beyond the ends.

    Used to extend layer samples held on a grid to arbitrary query points;
    not serialisable.
    """
    mesh = np.asarray(mesh, dtype=float)
    values = np.asarray(values, dtype=float)
    if mesh.shape != values.shape or mesh.ndim != 1:
        raise FunctionSpecError("mesh and values must be 1-D arrays of equal length")
    return FunctionHandle(
        fn=lambda u: np.interp(np.asarray(u, dtype=float), mesh, values),
        declared_smoothness=0.0,
        label=label or "piecewise-linear",
    )
