# Model presets - desk-scale versions of the benchmark architectures
from typing import Callable, Dict, List

from afnet.activations import ActivationKind
from afnet.errors import ValidationError
from afnet.layers import LayerSpec

ModelTemplate = Callable[[ActivationKind, int], List[LayerSpec]]


def shallow_dense(activation: ActivationKind, n_classes: int, units: int = 100) -> List[LayerSpec]:
    """
    Tabular model: (Dense(100) -> Dropout(0.4) -> BatchNorm -> AF) x 2,
    then Dense(n_classes) -> Softmax
    """
    layers = []
    for _ in range(2):
        layers += [
            LayerSpec.dense(units),
            LayerSpec.dropout(0.4),
            LayerSpec.batch_norm(),
            LayerSpec.act(activation),
        ]
    layers += [LayerSpec.dense(n_classes), LayerSpec.softmax()]
    return layers


def small_cnn(activation: ActivationKind, n_classes: int) -> List[LayerSpec]:
    """
    Image model: conv blocks Conv -> AF -> BatchNorm -> MaxPool -> Dropout
    (5x5 first, then 3x3; filters capped at 8 and 16), global average pooling
    and a small dense head. Expects inputs of at least 14x14.
    """
    layers = []
    for filters, kernel_size, rate in ((8, 5, 0.1), (16, 3, 0.2)):
        layers += [
            LayerSpec.conv2d(filters, kernel_size),
            LayerSpec.act(activation),
            LayerSpec.batch_norm(),
            LayerSpec.max_pool2d(2),
            LayerSpec.dropout(rate),
        ]
    layers += [
        LayerSpec.global_avg_pool(),
        LayerSpec.act(activation),
        LayerSpec.batch_norm(),
        LayerSpec.dropout(0.3),
        LayerSpec.dense(32),
        LayerSpec.act(activation),
        LayerSpec.batch_norm(),
        LayerSpec.dropout(0.4),
        LayerSpec.dense(n_classes),
        LayerSpec.softmax(),
    ]
    return layers


def stress_mlp(activation: ActivationKind, n_classes: int, units: int = 16) -> List[LayerSpec]:
    """No batch norm, so a hostile bias reaches the activations unchanged"""
    return [
        LayerSpec.dense(units),
        LayerSpec.act(activation),
        LayerSpec.dense(units),
        LayerSpec.act(activation),
        LayerSpec.dense(n_classes),
        LayerSpec.softmax(),
    ]


PRESETS: Dict[str, ModelTemplate] = {
    "shallow_dense": shallow_dense,
    "small_cnn": small_cnn,
    "stress_mlp": stress_mlp,
}


def get_preset(name: str) -> ModelTemplate:
    if name not in PRESETS:
        raise ValidationError(
            f"unknown model preset '{name}', expected one of {sorted(PRESETS)}"
        )
    return PRESETS[name]
