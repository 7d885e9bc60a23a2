"""
Activation functions
ReLU, Leaky ReLU and Absolute Leaky ReLU (ALReLU) with their derivatives.

ALReLU keeps the leaky slope but takes the absolute value on the negative
side: f(x) = x for x > 0, |alpha * x| for x <= 0. Its negative-side
derivative is therefore -alpha, never zero, so a unit stuck on the negative
side still passes gradient back.

Derivatives at exactly x = 0 follow the x <= 0 branch:
ReLU -> 0, LReLU -> alpha, ALReLU -> -alpha.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Dict, Union

import numpy as np

from afnet.errors import NondifferentiableError, ValidationError
from afnet.tensor import DTYPE, Tensor
from config.settings import DEFAULT_ALPHA


class ActivationType(Enum):
    """Activation variants, valued by their config names"""

    RELU = "relu"
    LRELU = "lrelu"
    ALRELU = "alrelu"


@dataclass(frozen=True)
class ActivationKind:
    """Activation variant plus its fixed negative-side slope alpha"""

    variant: ActivationType
    alpha: float = DEFAULT_ALPHA

    def __post_init__(self):
        if not isinstance(self.variant, ActivationType):
            raise ValidationError(f"variant must be an ActivationType, got {self.variant!r}")
        if not (0.0 < float(self.alpha) < 1.0):
            raise ValidationError(f"alpha must lie in (0, 1), got {self.alpha}")

    @property
    def name(self) -> str:
        return self.variant.value

    @classmethod
    def from_name(cls, name: str, alpha: float = DEFAULT_ALPHA) -> "ActivationKind":
        """Build from a config name: "relu", "lrelu" or "alrelu" (exact)"""
        try:
            variant = ActivationType(name)
        except ValueError:
            names = ", ".join(f'"{t.value}"' for t in ActivationType)
            raise ValidationError(f"unknown activation '{name}', expected one of {names}")
        return cls(variant, alpha)

    def to_dict(self) -> Dict:
        return {"name": self.name, "alpha": self.alpha}

    @classmethod
    def from_dict(cls, data: Dict) -> "ActivationKind":
        return cls.from_name(data["name"], data.get("alpha", DEFAULT_ALPHA))


RELU = ActivationKind(ActivationType.RELU)
LRELU = ActivationKind(ActivationType.LRELU)
ALRELU = ActivationKind(ActivationType.ALRELU)


def _forward(kind: ActivationKind, x: np.ndarray) -> np.ndarray:
    # keeps x's dtype so float64 copies can be used for finite differences
    alpha = x.dtype.type(kind.alpha)
    zero = x.dtype.type(0)
    if kind.variant is ActivationType.RELU:
        return np.where(x > 0, x, zero)
    if kind.variant is ActivationType.LRELU:
        return np.where(x > 0, x, alpha * x)
    return np.where(x > 0, x, np.abs(alpha * x))


def _derivative(kind: ActivationKind, x: np.ndarray) -> np.ndarray:
    alpha = x.dtype.type(kind.alpha)
    one = x.dtype.type(1)
    if kind.variant is ActivationType.RELU:
        negative = x.dtype.type(0)
    elif kind.variant is ActivationType.LRELU:
        negative = alpha
    else:
        negative = -alpha
    return np.where(x > 0, one, negative).astype(x.dtype)


def _as_float_array(x) -> np.ndarray:
    x = np.asarray(x)
    if not np.issubdtype(x.dtype, np.floating):
        x = x.astype(DTYPE)
    return x


def activate(kind: ActivationKind, x: Tensor) -> Tensor:
    """Apply the activation elementwise; shape preserved, input untouched"""
    x = _as_float_array(x)
    return _forward(kind, x)


def activate_grad(kind: ActivationKind, x: Tensor) -> Tensor:
    """Elementwise derivative, x <= 0 branch at exactly zero"""
    x = _as_float_array(x)
    return _derivative(kind, x)


def activate_max_form(kind: ActivationKind, x: Tensor) -> Tensor:
    """
    ALReLU written as max(|alpha*x|, x), the one-line framework form.
    Equal to ``activate`` for every x whenever alpha < 1.
    """
    if kind.variant is not ActivationType.ALRELU:
        raise ValidationError(f"max form is defined for alrelu only, got {kind.name}")
    x = _as_float_array(x)
    alpha = x.dtype.type(kind.alpha)
    return np.maximum(np.abs(alpha * x), x)


def grad_check(kind: ActivationKind, x: float, step: float = 1e-4) -> float:
    """
    Relative error between the central difference and ``activate_grad``:
    |fd - g| / max(|g|, 1e-12). Evaluated in float64.
    """
    if step <= 0:
        raise ValidationError(f"step must be positive, got {step}")
    if abs(x) <= 10 * step:
        raise NondifferentiableError(
            f"nondifferentiable neighborhood: |x|={abs(x):g} <= 10*step={10 * step:g}"
        )

    points = np.array([x + step, x - step, x], dtype=np.float64)
    f_plus, f_minus, _ = _forward(kind, points)
    central = (f_plus - f_minus) / (2 * step)
    analytic = float(_derivative(kind, points)[2])
    return float(abs(central - analytic) / max(abs(analytic), 1e-12))


def resolve(kind: Union[str, ActivationKind]) -> ActivationKind:
    """Accept either a kind or its config name"""
    if isinstance(kind, ActivationKind):
        return kind
    return ActivationKind.from_name(kind)
