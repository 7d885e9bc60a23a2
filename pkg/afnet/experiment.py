"""
Experiment configs and protocols
An ExperimentConfig names a dataset source, a model preset and the activations
to compare. ``run_experiment`` is the cross-validated comparison,
``run_stress`` the hostile-initialisation dead-unit experiment.
"""

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional

from colorama import Fore, Style
from jsonschema import Draft7Validator
from jsonschema.exceptions import best_match

from afnet.activations import ActivationKind
from afnet.data import Dataset, load_csv, load_pgm_dir, make_blobs, make_dying_relu_stress
from afnet.errors import ConfigError, ValidationError
from afnet.evaluation import CvSummary, derive_seed, run_cv
from afnet.nn import TrainConfig, build_model, fit
from afnet.presets import ModelTemplate, get_preset
from config.settings import (
    CONFIG_SCHEMA_PATH,
    CV_WORKERS,
    DEFAULT_ALPHA,
    DEFAULT_FOLDS,
    DEFAULT_REPEATS,
    DEFAULT_SEED,
    HOSTILE_BIAS,
    REPORTS_DIR,
)
from tools.atomic_io import load_json

GENERATORS = {
    "blobs": make_blobs,
    "dying_relu_stress": make_dying_relu_stress,
}

_validator: Optional[Draft7Validator] = None


def _schema_validator() -> Draft7Validator:
    global _validator
    if _validator is None:
        _validator = Draft7Validator(load_json(CONFIG_SCHEMA_PATH))
    return _validator


def _field_name(error) -> str:
    name = ""
    for part in error.absolute_path:
        name += f"[{part}]" if isinstance(part, int) else (f".{part}" if name else part)
    if error.validator == "required":
        missing = [p for p in error.validator_value if p not in error.instance]
        if missing:
            name = f"{name}.{missing[0]}" if name else missing[0]
    return name or "config"


def validate_config_dict(data) -> None:
    """Raise ConfigError for the most relevant schema violation, if any"""
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    error = best_match(_schema_validator().iter_errors(data))
    if error is not None:
        raise ConfigError(error.message, field=_field_name(error))


@dataclass
class DatasetSource:
    source: str
    path: Optional[str] = None
    label_column: Optional[str] = None
    feature_columns: Optional[List[str]] = None
    generator: Optional[str] = None
    params: Dict = field(default_factory=dict)

    def to_dict(self) -> Dict:
        data = {"source": self.source}
        for key in ("path", "label_column", "feature_columns", "generator"):
            value = getattr(self, key)
            if value is not None:
                data[key] = value
        if self.source == "generator":
            data["params"] = dict(self.params)
        return data

    @classmethod
    def from_dict(cls, data: Dict) -> "DatasetSource":
        return cls(
            source=data["source"],
            path=data.get("path"),
            label_column=data.get("label_column"),
            feature_columns=data.get("feature_columns"),
            generator=data.get("generator"),
            params=dict(data.get("params", {})),
        )


@dataclass
class ExperimentConfig:
    """One comparison of activations on one dataset with one model preset"""

    name: str
    dataset: DatasetSource
    model: str
    activations: List[str]
    alpha: float = DEFAULT_ALPHA
    k: int = DEFAULT_FOLDS
    repeats: int = DEFAULT_REPEATS
    train: TrainConfig = field(default_factory=TrainConfig)
    seed: int = DEFAULT_SEED
    workers: int = CV_WORKERS
    stress_bias: float = HOSTILE_BIAS
    output_dir: Optional[str] = None

    @property
    def kinds(self) -> List[ActivationKind]:
        return [ActivationKind.from_name(name, self.alpha) for name in self.activations]

    @property
    def template(self) -> ModelTemplate:
        return get_preset(self.model)

    def train_config(self) -> TrainConfig:
        """Training settings with the base seed filled in"""
        return replace(self.train, seed=self.seed)

    def resolve_output_dir(self, override=None) -> Path:
        if override:
            return Path(override)
        if self.output_dir:
            return Path(self.output_dir)
        return REPORTS_DIR / self.name

    def to_dict(self) -> Dict:
        train = self.train.to_dict()
        train.pop("seed")
        return {
            "name": self.name,
            "dataset": self.dataset.to_dict(),
            "model": self.model,
            "activations": list(self.activations),
            "alpha": self.alpha,
            "k": self.k,
            "repeats": self.repeats,
            "train": train,
            "seed": self.seed,
            "workers": self.workers,
            "stress_bias": self.stress_bias,
            "output_dir": self.output_dir,
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "ExperimentConfig":
        validate_config_dict(data)
        seed = data.get("seed", DEFAULT_SEED)
        try:
            train = TrainConfig(**data.get("train", {}), seed=seed)
        except ValidationError as e:
            raise ConfigError(str(e), field="train") from e

        return cls(
            name=data["name"],
            dataset=DatasetSource.from_dict(data["dataset"]),
            model=data["model"],
            activations=list(data["activations"]),
            alpha=data.get("alpha", DEFAULT_ALPHA),
            k=data.get("k", DEFAULT_FOLDS),
            repeats=data.get("repeats", DEFAULT_REPEATS),
            train=train,
            seed=seed,
            workers=data.get("workers", CV_WORKERS),
            stress_bias=data.get("stress_bias", HOSTILE_BIAS),
            output_dir=data.get("output_dir"),
        )


def load_config(path) -> ExperimentConfig:
    """Read and validate a JSON experiment config"""
    try:
        data = load_json(path)
    except json.JSONDecodeError as e:
        raise ConfigError(f"invalid JSON at line {e.lineno}, column {e.colno}: {e.msg}") from e
    except UnicodeDecodeError as e:
        raise ConfigError(f"not UTF-8 text (byte {e.start}): {e.reason}") from e
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e.strerror or e}") from e
    return ExperimentConfig.from_dict(data)


def load_dataset(source: DatasetSource) -> Dataset:
    if source.source == "csv":
        return load_csv(source.path, source.label_column, source.feature_columns)
    if source.source == "pgm":
        return load_pgm_dir(source.path)

    generator = GENERATORS[source.generator]
    try:
        return generator(**source.params)
    except (TypeError, ValidationError) as e:
        raise ConfigError(str(e), field="dataset.params") from e


def run_experiment(
    config: ExperimentConfig,
    workers: Optional[int] = None,
    verbose: bool = False,
) -> CvSummary:
    """Cross-validate the preset once per configured activation"""
    dataset = load_dataset(config.dataset)
    if verbose:
        print(
            f"{Fore.CYAN}📦 Dataset '{dataset.name}': {len(dataset)} samples, "
            f"{dataset.n_classes} classes, input {list(dataset.input_shape)}{Style.RESET_ALL}"
        )
    return run_cv(
        dataset,
        config.template,
        config.train_config(),
        config.kinds,
        config.k,
        config.repeats,
        workers=workers or config.workers,
        verbose=verbose,
    )


@dataclass
class StressResult:
    """Dead hidden units per epoch for each activation"""

    dataset: str
    bias_init: float
    series: Dict[str, List[int]] = field(default_factory=dict)
    losses: Dict[str, List[float]] = field(default_factory=dict)

    def rows(self) -> List[tuple]:
        """(epoch, activation, dead_units), epoch-major"""
        epochs = max((len(s) for s in self.series.values()), default=0)
        return [
            (epoch + 1, name, counts[epoch])
            for epoch in range(epochs)
            for name, counts in self.series.items()
            if epoch < len(counts)
        ]

    def to_dict(self) -> Dict:
        return {
            "dataset": self.dataset,
            "bias_init": self.bias_init,
            "dead_units": self.series,
            "mean_loss": self.losses,
        }


def run_stress(config: ExperimentConfig, verbose: bool = False) -> StressResult:
    """
    Train every activation from the same hostile start (all biases set to
    ``config.stress_bias``) on the full dataset and record the dead-unit
    count after each epoch.
    """
    dataset = load_dataset(config.dataset)
    result = StressResult(dataset.name, config.stress_bias)

    for kind in config.kinds:
        seed = derive_seed(config.seed, "stress", kind.name)
        model = build_model(
            config.template(kind, dataset.n_classes),
            dataset.input_shape,
            dataset.n_classes,
            seed,
            bias_init=config.stress_bias,
        )
        if verbose:
            print(f"{Fore.YELLOW}⚡ {kind.name}{Style.RESET_ALL} bias_init={config.stress_bias:g}")
        history = fit(model, dataset, replace(config.train, seed=seed), verbose=verbose)
        result.series[kind.name] = [stats.dead_unit_count for stats in history]
        result.losses[kind.name] = [stats.mean_loss for stats in history]
    return result
