"""
Model, training loop and optimizers
Builds a layer stack from LayerSpecs, runs forward/backward passes under
softmax cross-entropy, and trains with SGD or Adam while counting dead units.
"""

import copy
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from colorama import Fore, Style

from afnet.activations import activate_grad
from afnet.errors import ShapeError, ValidationError
from afnet.layers import Layer, LayerSpec, LayerType, create_layer
from afnet.tensor import reduce
from config.settings import (
    ADAM_BETA1,
    ADAM_BETA2,
    ADAM_EPSILON,
    DEFAULT_BATCH_SIZE,
    DEFAULT_EPOCHS,
    DEFAULT_LEARNING_RATE,
    DEFAULT_SEED,
    PROBA_CLAMP,
)

OPTIMIZERS = ("sgd", "adam")
UINT64_MAX = 2**64 - 1


@dataclass
class TrainConfig:
    """Optimisation settings for one training run"""

    epochs: int = DEFAULT_EPOCHS
    batch_size: int = DEFAULT_BATCH_SIZE
    learning_rate: float = DEFAULT_LEARNING_RATE
    optimizer: str = "adam"
    beta1: float = ADAM_BETA1
    beta2: float = ADAM_BETA2
    epsilon: float = ADAM_EPSILON
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        if self.epochs < 1:
            raise ValidationError(f"epochs must be positive, got {self.epochs}")
        if self.batch_size < 1:
            raise ValidationError(f"batch_size must be positive, got {self.batch_size}")
        if self.learning_rate <= 0:
            raise ValidationError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.optimizer not in OPTIMIZERS:
            raise ValidationError(
                f"optimizer must be one of {OPTIMIZERS}, got '{self.optimizer}'"
            )
        if not (0.0 < self.beta1 < 1.0 and 0.0 < self.beta2 < 1.0):
            raise ValidationError("Adam betas must lie in (0, 1)")
        if self.epsilon <= 0:
            raise ValidationError(f"epsilon must be positive, got {self.epsilon}")
        if not (0 <= self.seed <= UINT64_MAX):
            raise ValidationError(f"seed must be a 64-bit unsigned integer, got {self.seed}")

    def to_dict(self) -> Dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict) -> "TrainConfig":
        return cls(**data)


@dataclass
class EpochStats:
    """Outcome of one pass over the training data"""

    epoch: int
    mean_loss: float
    dead_unit_count: int
    accuracy: float

    def to_dict(self) -> Dict:
        return asdict(self)


@dataclass
class ForwardCache:
    """Per-layer caches of one forward pass"""

    layer_caches: List = field(default_factory=list)
    probabilities: Optional[np.ndarray] = None
    training: bool = False
    # activation layer index -> positions whose own derivative was 0 for the whole batch
    dead_masks: Dict[int, np.ndarray] = field(default_factory=dict)


class Model:
    """Layer stack plus learned parameters and gradient buffers"""

    def __init__(
        self,
        layers: List[LayerSpec],
        modules: List[Layer],
        input_shape: Tuple[int, ...],
        n_classes: int,
        rng_seed: int,
    ):
        self.layers = list(layers)
        self.modules = modules
        self.input_shape = tuple(input_shape)
        self.n_classes = n_classes
        self.rng_seed = rng_seed
        self.epochs_trained = 0
        self.optimizer: Optional["Optimizer"] = None
        self.dropout_rng = np.random.default_rng(rng_seed)

    @property
    def params(self) -> List[Dict[str, np.ndarray]]:
        return [m.params for m in self.modules]

    @property
    def grads(self) -> List[Dict[str, np.ndarray]]:
        return [m.grads for m in self.modules]

    @property
    def state(self) -> List[Dict[str, np.ndarray]]:
        return [m.state for m in self.modules]

    def n_params(self) -> int:
        return sum(v.size for p in self.params for v in p.values())

    def zero_grads(self):
        for module in self.modules:
            module.zero_grads()

    def activation_indices(self) -> List[int]:
        return [
            i for i, spec in enumerate(self.layers) if spec.type is LayerType.ACTIVATION
        ]

    def astype(self, dtype) -> "Model":
        """Deep copy with params, grads and state cast to dtype"""
        clone = copy.deepcopy(self)
        for module in clone.modules:
            for store in (module.params, module.grads, module.state):
                for name in store:
                    store[name] = store[name].astype(dtype)
        clone.optimizer = None
        return clone

    def summary(self) -> str:
        lines = [f"Model(input={list(self.input_shape)}, classes={self.n_classes})"]
        for module in self.modules:
            n = sum(v.size for v in module.params.values())
            lines.append(
                f"  [{module.index}] {module.spec.describe():<24} -> {list(module.out_shape)}"
                + (f"  params={n}" if n else "")
            )
        return "\n".join(lines)


def shape_of(shape: Sequence[int]) -> Tuple[int, ...]:
    return tuple(int(s) for s in shape)


def build_model(
    specs: Sequence[LayerSpec],
    input_shape: Sequence[int],
    n_classes: int,
    seed: int,
    bias_init: float = 0.0,
) -> Model:
    """
    Instantiate a layer stack with He-normal weights and constant biases
    (``bias_init``, -10 for the hostile-initialisation stress).
    """
    if not specs:
        raise ShapeError("model needs at least one layer")
    if n_classes < 1:
        raise ValidationError(f"n_classes must be >= 1, got {n_classes}")
    if not (0 <= seed <= UINT64_MAX):
        raise ValidationError(f"seed must be a 64-bit unsigned integer, got {seed}")

    rng = np.random.default_rng(seed)
    modules = []
    shape = shape_of(input_shape)
    for index, spec in enumerate(specs):
        module = create_layer(spec, index, shape)
        module.init_params(rng, bias_init)
        modules.append(module)
        shape = module.out_shape

    last = len(specs) - 1
    if specs[last].type is not LayerType.SOFTMAX:
        raise ShapeError(f"layer {last} ({specs[last].describe()}): final layer must be Softmax")
    if shape != (n_classes,):
        raise ShapeError(
            f"layer {last} (softmax): output width {list(shape)} does not match {n_classes} classes"
        )

    return Model(list(specs), modules, shape_of(input_shape), n_classes, seed)


def forward(
    model: Model,
    batch: np.ndarray,
    training: bool = False,
    rng: Optional[np.random.Generator] = None,
) -> Tuple[np.ndarray, ForwardCache]:
    """Run the stack; returns class probabilities and the per-layer caches"""
    batch = np.asarray(batch)
    if not np.issubdtype(batch.dtype, np.floating):
        batch = batch.astype(np.float32)
    if batch.ndim < 1 or tuple(batch.shape[1:]) != model.input_shape:
        raise ShapeError(
            f"batch shape {list(batch.shape)} does not match model input [n, {', '.join(map(str, model.input_shape))}]"
        )
    if training and rng is None:
        rng = model.dropout_rng

    cache = ForwardCache(training=training)
    x = batch
    for module in model.modules:
        x, layer_cache = module.forward(x, training, rng)
        cache.layer_caches.append(layer_cache)
    cache.probabilities = x
    return x, cache


def cross_entropy(probabilities: np.ndarray, labels: np.ndarray) -> float:
    """Mean categorical cross-entropy with probabilities clamped to [1e-7, 1-1e-7]"""
    clipped = np.clip(probabilities.astype(np.float64), PROBA_CLAMP, 1.0 - PROBA_CLAMP)
    per_sample = -(labels * np.log(clipped)).sum(axis=1)
    return float(reduce(per_sample.astype(np.float64), "mean")[0])


def one_hot(labels: np.ndarray, n_classes: int, dtype=np.float32) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size and (labels.min() < 0 or labels.max() >= n_classes):
        raise ValidationError(f"labels must lie in [0, {n_classes})")
    encoded = np.zeros((labels.shape[0], n_classes), dtype=dtype)
    encoded[np.arange(labels.shape[0]), labels] = 1
    return encoded


def backward(model: Model, cache: ForwardCache, labels: np.ndarray) -> float:
    """
    Fill model.grads for every parameter and return the batch's mean
    cross-entropy. ``labels`` is one-hot, same shape as the probabilities.
    """
    if not cache.training:
        raise ValidationError("backward needs a cache from forward(training=True)")
    probs = cache.probabilities
    labels = np.asarray(labels)
    if labels.shape != probs.shape:
        raise ShapeError(
            f"labels shape {list(labels.shape)} does not match probabilities {list(probs.shape)}"
        )

    loss = cross_entropy(probs, labels)

    # gradient of the clamped loss w.r.t. the probabilities
    n = probs.shape[0]
    inside = (probs > PROBA_CLAMP) & (probs < 1.0 - PROBA_CLAMP)
    safe = np.where(inside, probs, 1)
    grad = np.where(inside, -labels / (safe * n), 0).astype(probs.dtype)

    model.zero_grads()
    cache.dead_masks = {}
    for module, layer_cache in zip(reversed(model.modules), reversed(cache.layer_caches)):
        if module.spec.type is LayerType.ACTIVATION:
            local = activate_grad(module.spec.activation, layer_cache)
            cache.dead_masks[module.index] = np.all(local == 0, axis=0)
        grad = module.backward(layer_cache, grad)
    return loss


class Optimizer:
    def __init__(self, learning_rate: float):
        self.learning_rate = learning_rate

    def signature(self) -> Tuple:
        return (type(self).__name__, self.learning_rate)

    def step(self, model: Model):
        raise NotImplementedError


class SGD(Optimizer):
    def step(self, model: Model):
        lr = self.learning_rate
        for params, grads in zip(model.params, model.grads):
            for name in params:
                params[name] -= params[name].dtype.type(lr) * grads[name]


class Adam(Optimizer):
    def __init__(self, learning_rate: float, beta1: float, beta2: float, epsilon: float):
        super().__init__(learning_rate)
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.t = 0
        self.m: Dict[Tuple[int, str], np.ndarray] = {}
        self.v: Dict[Tuple[int, str], np.ndarray] = {}

    def signature(self) -> Tuple:
        return ("Adam", self.learning_rate, self.beta1, self.beta2, self.epsilon)

    def step(self, model: Model):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        for index, (params, grads) in enumerate(zip(model.params, model.grads)):
            for name in params:
                key = (index, name)
                g = grads[name]
                if key not in self.m:
                    self.m[key] = np.zeros_like(g)
                    self.v[key] = np.zeros_like(g)
                self.m[key] = b1 * self.m[key] + (1 - b1) * g
                self.v[key] = b2 * self.v[key] + (1 - b2) * (g * g)
                m_hat = self.m[key] / (1 - b1**self.t)
                v_hat = self.v[key] / (1 - b2**self.t)
                update = self.learning_rate * m_hat / (np.sqrt(v_hat) + self.epsilon)
                params[name] -= update.astype(params[name].dtype)


def make_optimizer(config: TrainConfig) -> Optimizer:
    if config.optimizer == "sgd":
        return SGD(config.learning_rate)
    return Adam(config.learning_rate, config.beta1, config.beta2, config.epsilon)


def _ensure_optimizer(model: Model, config: TrainConfig) -> Optimizer:
    wanted = make_optimizer(config)
    if model.optimizer is None or model.optimizer.signature() != wanted.signature():
        model.optimizer = wanted
    return model.optimizer


def train_epoch(model: Model, dataset, config: TrainConfig, verbose: bool = False) -> EpochStats:
    """
    One shuffled pass over ``dataset``. A hidden unit counts as dead when its
    activation derivative was exactly 0 for every sample of every batch.
    """
    features = dataset.features
    n = features.shape[0]
    if n == 0:
        raise ValidationError("cannot train on an empty dataset")

    optimizer = _ensure_optimizer(model, config)
    rng = np.random.default_rng([config.seed, model.rng_seed, model.epochs_trained])
    order = rng.permutation(n)
    targets = one_hot(dataset.labels, model.n_classes)

    dead: Dict[int, np.ndarray] = {}
    total_loss = 0.0
    correct = 0
    for start in range(0, n, config.batch_size):
        idx = order[start : start + config.batch_size]
        probs, cache = forward(model, features[idx], training=True, rng=rng)
        loss = backward(model, cache, targets[idx])
        optimizer.step(model)

        total_loss += loss * len(idx)
        correct += int((probs.argmax(axis=1) == dataset.labels[idx]).sum())
        for index, mask in cache.dead_masks.items():
            dead[index] = mask if index not in dead else dead[index] & mask

    model.epochs_trained += 1
    stats = EpochStats(
        epoch=model.epochs_trained,
        mean_loss=total_loss / n,
        dead_unit_count=int(sum(int(mask.sum()) for mask in dead.values())),
        accuracy=correct / n,
    )

    if verbose:
        print(
            f"  {Fore.CYAN}[Epoch {stats.epoch}]{Style.RESET_ALL} "
            f"loss={stats.mean_loss:.4f} acc={stats.accuracy:.3f} dead={stats.dead_unit_count}"
        )
    return stats


def fit(model: Model, dataset, config: TrainConfig, verbose: bool = False) -> List[EpochStats]:
    """Train for ``config.epochs`` epochs"""
    return [train_epoch(model, dataset, config, verbose) for _ in range(config.epochs)]


def predict_proba(model: Model, features: np.ndarray) -> np.ndarray:
    """Inference-mode forward: dropout off, batch norm on running statistics"""
    probs, _ = forward(model, features, training=False)
    return probs


def predict(model: Model, features: np.ndarray) -> np.ndarray:
    return predict_proba(model, features).argmax(axis=1)
