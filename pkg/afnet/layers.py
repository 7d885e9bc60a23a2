"""
Layer zoo
Declarative layer specs plus the forward/backward kernels behind them.

Shapes are per sample (batch axis excluded): tabular (features,), images
(height, width, channels). Kernels keep the dtype of their input so a float64
copy of a model can be used for finite-difference checks.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Dict, Optional, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from afnet.activations import ActivationKind, activate, activate_grad, resolve
from afnet.errors import ShapeError, ValidationError
from afnet.tensor import matmul, reduce
from config.settings import (
    BATCHNORM_EPSILON,
    BATCHNORM_MOMENTUM,
    CONV_KERNEL_SIZES,
    POOL_WINDOW,
)


class LayerType(Enum):
    """Layer variants"""

    DENSE = "dense"
    CONV2D = "conv2d"
    MAX_POOL2D = "max_pool2d"
    GLOBAL_AVG_POOL = "global_avg_pool"
    GLOBAL_MAX_POOL = "global_max_pool"
    BATCH_NORM = "batch_norm"
    DROPOUT = "dropout"
    ACTIVATION = "activation"
    SOFTMAX = "softmax"


@dataclass(frozen=True)
class LayerSpec:
    """One entry of a declarative layer stack"""

    type: LayerType
    units: Optional[int] = None
    filters: Optional[int] = None
    kernel_size: Optional[int] = None
    window: Optional[int] = None
    rate: Optional[float] = None
    activation: Optional[ActivationKind] = None

    def __post_init__(self):
        if self.type is LayerType.DENSE:
            if self.units is None or self.units < 1:
                raise ValidationError(f"Dense units must be >= 1, got {self.units}")
        elif self.type is LayerType.CONV2D:
            if self.filters is None or self.filters < 1:
                raise ValidationError(f"Conv2D filters must be >= 1, got {self.filters}")
            if self.kernel_size not in CONV_KERNEL_SIZES:
                raise ValidationError(
                    f"Conv2D kernel_size must be one of {CONV_KERNEL_SIZES}, got {self.kernel_size}"
                )
        elif self.type is LayerType.MAX_POOL2D:
            if self.window is None or self.window < 1:
                raise ValidationError(f"MaxPool2D window must be >= 1, got {self.window}")
        elif self.type is LayerType.DROPOUT:
            if self.rate is None or not (0.0 <= self.rate < 1.0):
                raise ValidationError(f"Dropout rate must lie in [0, 1), got {self.rate}")
        elif self.type is LayerType.ACTIVATION:
            if not isinstance(self.activation, ActivationKind):
                raise ValidationError("Activation layer needs an ActivationKind")

    # Constructors
    @classmethod
    def dense(cls, units: int) -> "LayerSpec":
        return cls(LayerType.DENSE, units=units)

    @classmethod
    def conv2d(cls, filters: int, kernel_size: int) -> "LayerSpec":
        return cls(LayerType.CONV2D, filters=filters, kernel_size=kernel_size)

    @classmethod
    def max_pool2d(cls, window: int = POOL_WINDOW) -> "LayerSpec":
        return cls(LayerType.MAX_POOL2D, window=window)

    @classmethod
    def global_avg_pool(cls) -> "LayerSpec":
        return cls(LayerType.GLOBAL_AVG_POOL)

    @classmethod
    def global_max_pool(cls) -> "LayerSpec":
        return cls(LayerType.GLOBAL_MAX_POOL)

    @classmethod
    def batch_norm(cls) -> "LayerSpec":
        return cls(LayerType.BATCH_NORM)

    @classmethod
    def dropout(cls, rate: float) -> "LayerSpec":
        return cls(LayerType.DROPOUT, rate=rate)

    @classmethod
    def act(cls, kind) -> "LayerSpec":
        return cls(LayerType.ACTIVATION, activation=resolve(kind))

    @classmethod
    def softmax(cls) -> "LayerSpec":
        return cls(LayerType.SOFTMAX)

    def to_dict(self) -> Dict:
        data = {"type": self.type.value}
        for key in ("units", "filters", "kernel_size", "window", "rate"):
            value = getattr(self, key)
            if value is not None:
                data[key] = value
        if self.activation is not None:
            data["activation"] = self.activation.to_dict()
        return data

    @classmethod
    def from_dict(cls, data: Dict) -> "LayerSpec":
        try:
            layer_type = LayerType(data["type"])
        except (KeyError, ValueError):
            raise ValidationError(f"unknown layer type in {data!r}")
        activation = data.get("activation")
        return cls(
            layer_type,
            units=data.get("units"),
            filters=data.get("filters"),
            kernel_size=data.get("kernel_size"),
            window=data.get("window"),
            rate=data.get("rate"),
            activation=ActivationKind.from_dict(activation) if activation else None,
        )

    def describe(self) -> str:
        if self.type is LayerType.DENSE:
            return f"Dense({self.units})"
        if self.type is LayerType.CONV2D:
            return f"Conv2D({self.filters}, {self.kernel_size}x{self.kernel_size})"
        if self.type is LayerType.MAX_POOL2D:
            return f"MaxPool2D({self.window})"
        if self.type is LayerType.DROPOUT:
            return f"Dropout({self.rate})"
        if self.type is LayerType.ACTIVATION:
            return f"Activation({self.activation.name})"
        return self.type.value


class Layer:
    """
    Runtime counterpart of a LayerSpec: owns params, grads and
    non-trainable state (batch-norm running statistics).
    """

    def __init__(self, spec: LayerSpec, index: int, in_shape: Tuple[int, ...]):
        self.spec = spec
        self.index = index
        self.in_shape = tuple(in_shape)
        self.out_shape = self._output_shape()
        self.params: Dict[str, np.ndarray] = {}
        self.grads: Dict[str, np.ndarray] = {}
        self.state: Dict[str, np.ndarray] = {}

    def _shape_error(self, message: str) -> ShapeError:
        return ShapeError(
            f"layer {self.index} ({self.spec.describe()}): {message}, input shape {list(self.in_shape)}"
        )

    def _output_shape(self) -> Tuple[int, ...]:
        return self.in_shape

    def init_params(self, rng: np.random.Generator, bias_init: float = 0.0):
        pass

    def zero_grads(self):
        for name, value in self.params.items():
            self.grads[name] = np.zeros_like(value)

    def forward(self, x, training: bool, rng: Optional[np.random.Generator]):
        raise NotImplementedError

    def backward(self, cache, dy):
        raise NotImplementedError

    def kink_signature(self, cache) -> Optional[np.ndarray]:
        """Discrete pattern that must not change across a finite difference"""
        return None


def _he_normal(rng: np.random.Generator, shape: Tuple[int, ...], fan_in: int) -> np.ndarray:
    return rng.normal(0.0, np.sqrt(2.0 / fan_in), size=shape).astype(np.float32)


class DenseLayer(Layer):
    def _output_shape(self):
        if len(self.in_shape) != 1:
            raise self._shape_error("Dense expects rank-1 features per sample")
        return (self.spec.units,)

    def init_params(self, rng, bias_init=0.0):
        fan_in = self.in_shape[0]
        self.params["W"] = _he_normal(rng, (fan_in, self.spec.units), fan_in)
        self.params["b"] = np.full(self.spec.units, bias_init, dtype=np.float32)
        self.zero_grads()

    def forward(self, x, training, rng):
        y = matmul(x, self.params["W"]) + self.params["b"]
        return y, x

    def backward(self, cache, dy):
        x = cache
        self.grads["W"] += matmul(x.T, dy)
        self.grads["b"] += reduce(dy, "sum", axis=0)
        return matmul(dy, self.params["W"].T)


class Conv2DLayer(Layer):
    """'valid' padding, stride 1, NHWC"""

    def _output_shape(self):
        if len(self.in_shape) != 3:
            raise self._shape_error("Conv2D expects (height, width, channels)")
        h, w, _ = self.in_shape
        k = self.spec.kernel_size
        if h < k or w < k:
            raise self._shape_error(f"kernel {k}x{k} larger than the feature map")
        return (h - k + 1, w - k + 1, self.spec.filters)

    def init_params(self, rng, bias_init=0.0):
        k = self.spec.kernel_size
        channels = self.in_shape[2]
        self.params["W"] = _he_normal(
            rng, (k, k, channels, self.spec.filters), k * k * channels
        )
        self.params["b"] = np.full(self.spec.filters, bias_init, dtype=np.float32)
        self.zero_grads()

    def forward(self, x, training, rng):
        k = self.spec.kernel_size
        # windows: [n, out_h, out_w, channels, k, k]
        windows = sliding_window_view(x, (k, k), axis=(1, 2))
        y = np.einsum("nhwcij,ijcf->nhwf", windows, self.params["W"], optimize=True)
        return y + self.params["b"], x

    def backward(self, cache, dy):
        x = cache
        k = self.spec.kernel_size
        W = self.params["W"]
        windows = sliding_window_view(x, (k, k), axis=(1, 2))
        self.grads["W"] += np.einsum("nhwcij,nhwf->ijcf", windows, dy, optimize=True)
        self.grads["b"] += dy.sum(axis=(0, 1, 2))

        out_h, out_w = dy.shape[1], dy.shape[2]
        dx = np.zeros_like(x)
        for i in range(k):
            for j in range(k):
                dx[:, i : i + out_h, j : j + out_w, :] += dy @ W[i, j].T
        return dx


class MaxPool2DLayer(Layer):
    """Window p, stride p; trailing rows/cols that do not fill a window are dropped"""

    def _output_shape(self):
        if len(self.in_shape) != 3:
            raise self._shape_error("MaxPool2D expects (height, width, channels)")
        h, w, c = self.in_shape
        p = self.spec.window
        if h < p or w < p:
            raise self._shape_error(f"pool window {p} larger than the feature map")
        return (h // p, w // p, c)

    def _windows(self, x):
        n = x.shape[0]
        p = self.spec.window
        out_h, out_w, c = self.out_shape
        cropped = x[:, : out_h * p, : out_w * p, :]
        blocks = cropped.reshape(n, out_h, p, out_w, p, c)
        # -> [n, out_h, out_w, c, p*p]
        return blocks.transpose(0, 1, 3, 5, 2, 4).reshape(n, out_h, out_w, c, p * p)

    def forward(self, x, training, rng):
        windows = self._windows(x)
        argmax = windows.argmax(axis=-1)
        y = np.take_along_axis(windows, argmax[..., None], axis=-1)[..., 0]
        return y, (x.shape, argmax)

    def backward(self, cache, dy):
        x_shape, argmax = cache
        n = x_shape[0]
        p = self.spec.window
        out_h, out_w, c = self.out_shape

        grad_windows = np.zeros((n, out_h, out_w, c, p * p), dtype=dy.dtype)
        np.put_along_axis(grad_windows, argmax[..., None], dy[..., None], axis=-1)
        blocks = grad_windows.reshape(n, out_h, out_w, c, p, p).transpose(0, 1, 4, 2, 5, 3)

        dx = np.zeros(x_shape, dtype=dy.dtype)
        dx[:, : out_h * p, : out_w * p, :] = blocks.reshape(n, out_h * p, out_w * p, c)
        return dx

    def kink_signature(self, cache):
        return cache[1]


class GlobalAvgPoolLayer(Layer):
    def _output_shape(self):
        if len(self.in_shape) != 3:
            raise self._shape_error("GlobalAvgPool expects (height, width, channels)")
        return (self.in_shape[2],)

    def forward(self, x, training, rng):
        return x.mean(axis=(1, 2)), x.shape

    def backward(self, cache, dy):
        n, h, w, c = cache
        return np.broadcast_to(dy[:, None, None, :] / (h * w), (n, h, w, c)).copy()


class GlobalMaxPoolLayer(Layer):
    def _output_shape(self):
        if len(self.in_shape) != 3:
            raise self._shape_error("GlobalMaxPool expects (height, width, channels)")
        return (self.in_shape[2],)

    def forward(self, x, training, rng):
        n, h, w, c = x.shape
        flat = x.reshape(n, h * w, c)
        argmax = flat.argmax(axis=1)
        y = np.take_along_axis(flat, argmax[:, None, :], axis=1)[:, 0, :]
        return y, (x.shape, argmax)

    def backward(self, cache, dy):
        (n, h, w, c), argmax = cache
        flat = np.zeros((n, h * w, c), dtype=dy.dtype)
        np.put_along_axis(flat, argmax[:, None, :], dy[:, None, :], axis=1)
        return flat.reshape(n, h, w, c)

    def kink_signature(self, cache):
        return cache[1]


class BatchNormLayer(Layer):
    """Per feature for rank-2 inputs, per channel for image inputs"""

    def _axes(self, x):
        return tuple(range(x.ndim - 1))

    def init_params(self, rng, bias_init=0.0):
        channels = self.in_shape[-1]
        self.params["gamma"] = np.ones(channels, dtype=np.float32)
        self.params["beta"] = np.zeros(channels, dtype=np.float32)
        self.state["running_mean"] = np.zeros(channels, dtype=np.float32)
        self.state["running_var"] = np.ones(channels, dtype=np.float32)
        self.zero_grads()

    def normalize(self, x):
        """Training-mode normalisation before scale/shift"""
        axes = self._axes(x)
        mean = x.mean(axis=axes)
        var = x.var(axis=axes)
        inv_std = 1.0 / np.sqrt(var + BATCHNORM_EPSILON)
        return (x - mean) * inv_std, mean, var, inv_std

    def forward(self, x, training, rng):
        gamma = self.params["gamma"]
        beta = self.params["beta"]

        if not training:
            inv_std = 1.0 / np.sqrt(self.state["running_var"] + BATCHNORM_EPSILON)
            x_hat = (x - self.state["running_mean"]) * inv_std
            return (gamma * x_hat + beta).astype(x.dtype), None

        x_hat, mean, var, inv_std = self.normalize(x)
        momentum = BATCHNORM_MOMENTUM
        running_mean = self.state["running_mean"]
        running_var = self.state["running_var"]
        self.state["running_mean"] = (
            momentum * running_mean + (1 - momentum) * mean
        ).astype(running_mean.dtype)
        self.state["running_var"] = (
            momentum * running_var + (1 - momentum) * var
        ).astype(running_var.dtype)

        return gamma * x_hat + beta, (x_hat, inv_std)

    def backward(self, cache, dy):
        if cache is None:
            raise ValidationError(
                f"layer {self.index}: batch norm backward needs a training-mode forward"
            )
        x_hat, inv_std = cache
        axes = self._axes(dy)
        count = int(np.prod([dy.shape[a] for a in axes]))

        self.grads["gamma"] += (dy * x_hat).sum(axis=axes)
        self.grads["beta"] += dy.sum(axis=axes)

        dx_hat = dy * self.params["gamma"]
        return (inv_std / count) * (
            count * dx_hat
            - dx_hat.sum(axis=axes)
            - x_hat * (dx_hat * x_hat).sum(axis=axes)
        )


class DropoutLayer(Layer):
    """Inverted dropout: scaled by 1/(1-rate) at train time, identity at inference"""

    def forward(self, x, training, rng):
        rate = self.spec.rate
        if not training or rate == 0.0:
            return x, None
        keep = rng.random(x.shape) >= rate
        mask = keep.astype(x.dtype) / x.dtype.type(1.0 - rate)
        return x * mask, mask

    def backward(self, cache, dy):
        if cache is None:
            return dy
        return dy * cache


class ActivationLayer(Layer):
    def forward(self, x, training, rng):
        return activate(self.spec.activation, x), x

    def backward(self, cache, dy):
        return dy * activate_grad(self.spec.activation, cache)

    def kink_signature(self, cache):
        return cache > 0


class SoftmaxLayer(Layer):
    def _output_shape(self):
        if len(self.in_shape) != 1:
            raise self._shape_error("Softmax expects rank-1 logits per sample")
        return self.in_shape

    def forward(self, x, training, rng):
        shifted = x - x.max(axis=-1, keepdims=True)
        exp = np.exp(shifted)
        y = exp / exp.sum(axis=-1, keepdims=True)
        return y, y

    def backward(self, cache, dy):
        y = cache
        return y * (dy - (dy * y).sum(axis=-1, keepdims=True))


LAYER_CLASSES = {
    LayerType.DENSE: DenseLayer,
    LayerType.CONV2D: Conv2DLayer,
    LayerType.MAX_POOL2D: MaxPool2DLayer,
    LayerType.GLOBAL_AVG_POOL: GlobalAvgPoolLayer,
    LayerType.GLOBAL_MAX_POOL: GlobalMaxPoolLayer,
    LayerType.BATCH_NORM: BatchNormLayer,
    LayerType.DROPOUT: DropoutLayer,
    LayerType.ACTIVATION: ActivationLayer,
    LayerType.SOFTMAX: SoftmaxLayer,
}


def create_layer(spec: LayerSpec, index: int, in_shape: Tuple[int, ...]) -> Layer:
    return LAYER_CLASSES[spec.type](spec, index, in_shape)
