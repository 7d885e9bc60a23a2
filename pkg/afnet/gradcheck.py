"""
Gradient checks
Central finite differences against the analytic derivatives, both for the
activation functions and for whole-model backpropagation.
"""

from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional

import numpy as np

from afnet.activations import ActivationKind, ActivationType, grad_check
from afnet.errors import ValidationError
from afnet.layers import LayerSpec
from afnet.nn import Model, backward, build_model, cross_entropy, forward, one_hot
from config.settings import (
    GRADCHECK_ACTIVATION_TOL,
    GRADCHECK_MODEL_ATOL,
    GRADCHECK_MODEL_RTOL,
    GRADCHECK_MODEL_STEP,
    GRADCHECK_STEP,
)


@dataclass
class ActivationCheck:
    """Worst relative error over random points for one activation"""

    activation: str
    trials: int
    max_rel_error: float
    tolerance: float = GRADCHECK_ACTIVATION_TOL

    @property
    def passed(self) -> bool:
        return self.max_rel_error <= self.tolerance

    def to_dict(self) -> Dict:
        return {**asdict(self), "passed": self.passed}


@dataclass
class ModelCheck:
    """Finite-difference comparison for every parameter of one model"""

    name: str
    n_params: int
    n_checked: int = 0
    n_excluded: int = 0
    max_rel_error: float = 0.0
    max_abs_error: float = 0.0
    failures: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures and self.n_checked > 0

    def to_dict(self) -> Dict:
        return {**asdict(self), "passed": self.passed}


def check_activation(
    kind: ActivationKind,
    n_trials: int,
    seed: int = 0,
    step: float = GRADCHECK_STEP,
    bound: float = 10.0,
) -> ActivationCheck:
    """Sample points uniformly in [-bound, bound] outside the kink zone"""
    rng = np.random.default_rng(seed)
    worst = 0.0
    checked = 0
    while checked < n_trials:
        x = float(rng.uniform(-bound, bound))
        if abs(x) <= 10 * step:
            continue
        worst = max(worst, grad_check(kind, x, step))
        checked += 1
    return ActivationCheck(kind.name, n_trials, worst)


def check_activations(n_trials: int, seed: int = 0) -> List[ActivationCheck]:
    if n_trials < 1:
        raise ValidationError("nothing to check: n_trials must be >= 1")
    return [
        check_activation(ActivationKind(variant), n_trials, seed + i)
        for i, variant in enumerate(ActivationType)
    ]


def _loss_and_kinks(model: Model, batch, targets, seed: int):
    rng = np.random.default_rng(seed)
    probs, cache = forward(model, batch, training=True, rng=rng)
    kinks = []
    for module, layer_cache in zip(model.modules, cache.layer_caches):
        signature = module.kink_signature(layer_cache)
        if signature is not None:
            kinks.append(signature)
    return cross_entropy(probs, targets), kinks, cache


def _same_kinks(a: List[np.ndarray], b: List[np.ndarray]) -> bool:
    return all(np.array_equal(x, y) for x, y in zip(a, b))


def check_model_gradients(
    model: Model,
    batch: np.ndarray,
    labels: np.ndarray,
    name: str = "model",
    seed: int = 0,
    step: float = GRADCHECK_MODEL_STEP,
    rtol: float = GRADCHECK_MODEL_RTOL,
    atol: float = GRADCHECK_MODEL_ATOL,
) -> ModelCheck:
    """
    Compare every analytic parameter gradient with a central difference of the
    loss. Runs on a float64 copy with identical dropout masks per pass.
    Parameters whose perturbation moves an activation input across zero or
    changes a pooling winner are excluded.
    """
    probe = model.astype(np.float64)
    batch = np.asarray(batch, dtype=np.float64)
    targets = one_hot(labels, model.n_classes, dtype=np.float64)

    _, _, cache = _loss_and_kinks(probe, batch, targets, seed)
    backward(probe, cache, targets)
    analytic = [{k: v.copy() for k, v in g.items()} for g in probe.grads]

    result = ModelCheck(name, probe.n_params())
    for index, params in enumerate(probe.params):
        for pname, value in params.items():
            flat = value.reshape(-1)
            grad = analytic[index][pname].reshape(-1)
            for i in range(flat.size):
                original = flat[i]
                flat[i] = original + step
                loss_plus, kinks_plus, _ = _loss_and_kinks(probe, batch, targets, seed)
                flat[i] = original - step
                loss_minus, kinks_minus, _ = _loss_and_kinks(probe, batch, targets, seed)
                flat[i] = original

                if not _same_kinks(kinks_plus, kinks_minus):
                    result.n_excluded += 1
                    continue

                numeric = (loss_plus - loss_minus) / (2 * step)
                abs_err = abs(numeric - grad[i])
                scale = max(abs(numeric), abs(grad[i]))
                rel_err = abs_err / scale if scale > 0 else 0.0
                result.n_checked += 1
                result.max_abs_error = max(result.max_abs_error, abs_err)
                if abs_err > atol:
                    result.max_rel_error = max(result.max_rel_error, rel_err)
                if abs_err > max(atol, rtol * scale):
                    result.failures.append(
                        f"layer {index} {pname}[{i}]: analytic={grad[i]:.6g} numeric={numeric:.6g}"
                    )
    return result


def tiny_models(activation: ActivationKind, seed: int = 0) -> Dict[str, tuple]:
    """
    Small models (< 500 parameters) that between them use every layer
    variant, with a matching random batch: name -> (model, batch, labels)
    """
    rng = np.random.default_rng(seed)

    dense_specs = [
        LayerSpec.dense(6),
        LayerSpec.batch_norm(),
        LayerSpec.act(activation),
        LayerSpec.dropout(0.25),
        LayerSpec.dense(3),
        LayerSpec.softmax(),
    ]
    conv_specs = [
        LayerSpec.conv2d(2, 3),
        LayerSpec.act(activation),
        LayerSpec.batch_norm(),
        LayerSpec.max_pool2d(2),
        LayerSpec.dropout(0.2),
        LayerSpec.global_avg_pool(),
        LayerSpec.dense(3),
        LayerSpec.act(activation),
        LayerSpec.dense(2),
        LayerSpec.softmax(),
    ]
    branch_specs = [
        LayerSpec.conv2d(3, 1),
        LayerSpec.act(activation),
        LayerSpec.conv2d(2, 3),
        LayerSpec.global_max_pool(),
        LayerSpec.act(activation),
        LayerSpec.dense(2),
        LayerSpec.softmax(),
    ]

    models = {}
    for name, specs, shape, n_classes in (
        ("dense", dense_specs, (4,), 3),
        ("conv", conv_specs, (6, 6, 1), 2),
        ("global_max", branch_specs, (5, 5, 2), 2),
    ):
        model = build_model(specs, shape, n_classes, seed)
        batch = rng.standard_normal((5,) + shape)
        labels = rng.integers(0, n_classes, size=5)
        models[f"{name}/{activation.name}"] = (model, batch, labels)
    return models


def run_model_checks(seed: int = 0, kinds: Optional[List[ActivationKind]] = None) -> List[ModelCheck]:
    kinds = kinds or [ActivationKind(variant) for variant in ActivationType]
    results = []
    for kind in kinds:
        for name, (model, batch, labels) in tiny_models(kind, seed).items():
            results.append(check_model_gradients(model, batch, labels, name=name, seed=seed))
    return results
