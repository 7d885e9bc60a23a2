"""
Cross-validation protocol
Repeated stratified k-fold evaluation of one model template under several
activation functions, producing per-fold MetricsReports and their averages.
"""

import hashlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
from colorama import Fore, Style
from sklearn.model_selection import StratifiedKFold

from afnet.activations import ActivationKind, resolve
from afnet.data import Dataset
from afnet.errors import ValidationError
from afnet.metrics import METRIC_NAMES, MetricsReport, evaluate, summarize
from afnet.nn import TrainConfig, build_model, fit, predict_proba
from afnet.presets import ModelTemplate


def derive_seed(base_seed: int, *parts) -> int:
    """
    64-bit run seed: first 8 bytes (little-endian) of
    BLAKE2b("base_seed|part1|part2|...").
    """
    key = "|".join(str(p) for p in (base_seed,) + parts)
    digest = hashlib.blake2b(key.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


@dataclass
class FoldPlan:
    """Per-sample fold index in [0, k)"""

    k: int
    assignments: np.ndarray
    seed: int

    def test_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments == fold)

    def train_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments != fold)

    def fold_sizes(self) -> List[int]:
        return np.bincount(self.assignments, minlength=self.k).tolist()

    def to_dict(self) -> Dict:
        return {"k": self.k, "seed": self.seed, "assignments": self.assignments.tolist()}


def stratified_kfold(labels, k: int, seed: int) -> FoldPlan:
    """
    Shuffled stratified folds: each class's samples are spread so per-fold
    counts differ by at most one. Deterministic in (seed, labels, k).
    """
    labels = np.asarray(labels, dtype=np.int64)
    if k < 2:
        raise ValidationError(f"k must be >= 2, got {k}")
    if labels.size == 0:
        raise ValidationError("no labels to split")

    classes, counts = np.unique(labels, return_counts=True)
    for cls, count in zip(classes, counts):
        if count < k:
            raise ValidationError(
                f"class {cls} has {count} samples, fewer than k={k} folds"
            )

    splitter = StratifiedKFold(n_splits=k, shuffle=True, random_state=seed % 2**32)
    assignments = np.empty(labels.size, dtype=np.int64)
    for fold, (_, test) in enumerate(splitter.split(np.zeros(labels.size), labels)):
        assignments[test] = fold
    return FoldPlan(k, assignments, seed)


@dataclass
class CvSummary:
    """All fold reports of a run plus per-activation mean/std of each metric"""

    dataset: str
    activations: List[str]
    k: int
    repeats: int
    base_seed: int
    reports: List[MetricsReport] = field(default_factory=list)
    stats: Dict[str, Dict[str, Dict[str, float]]] = field(default_factory=dict)
    fold_plans: List[FoldPlan] = field(default_factory=list)

    def reports_for(self, activation: str) -> List[MetricsReport]:
        return [r for r in self.reports if r.activation == activation]

    def aggregate(self):
        self.stats = {a: summarize(self.reports_for(a)) for a in self.activations}

    def mean(self, activation: str, metric: str) -> float:
        return self.stats[activation][metric]["mean"]

    def best_by_metric(self) -> Dict[str, str]:
        """Activation with the highest mean per metric (first listed wins ties)"""
        best = {}
        for metric in METRIC_NAMES:
            best[metric] = max(self.activations, key=lambda a: (self.mean(a, metric), -self.activations.index(a)))
        return best

    def to_dict(self) -> Dict:
        return {
            "dataset": self.dataset,
            "activations": list(self.activations),
            "k": self.k,
            "repeats": self.repeats,
            "base_seed": self.base_seed,
            "reports": [r.to_dict() for r in self.reports],
            "summary": self.stats,
            "fold_plans": [p.to_dict() for p in self.fold_plans],
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "CvSummary":
        return cls(
            dataset=data["dataset"],
            activations=list(data["activations"]),
            k=data["k"],
            repeats=data["repeats"],
            base_seed=data["base_seed"],
            reports=[MetricsReport.from_dict(r) for r in data["reports"]],
            stats=data["summary"],
            fold_plans=[
                FoldPlan(p["k"], np.asarray(p["assignments"], dtype=np.int64), p["seed"])
                for p in data.get("fold_plans", [])
            ],
        )


@dataclass(frozen=True)
class _FoldJob:
    activation: ActivationKind
    repeat: int
    fold: int
    seed: int


def _run_job(
    job: _FoldJob,
    dataset: Dataset,
    plan: FoldPlan,
    model_template: ModelTemplate,
    train_config: TrainConfig,
) -> MetricsReport:
    train = dataset.subset(plan.train_indices(job.fold))
    test = dataset.subset(plan.test_indices(job.fold))

    specs = model_template(job.activation, dataset.n_classes)
    model = build_model(specs, dataset.input_shape, dataset.n_classes, job.seed)
    fit(model, train, replace(train_config, seed=job.seed))

    probs = predict_proba(model, test.features)
    return evaluate(
        probs,
        test.labels,
        activation=job.activation.name,
        fold=job.fold,
        repeat=job.repeat,
        n_classes=dataset.n_classes,
    )


def run_cv(
    dataset: Dataset,
    model_template: ModelTemplate,
    train_config: TrainConfig,
    activations: Sequence[Union[str, ActivationKind]],
    k: int,
    repeats: int,
    workers: int = 1,
    verbose: bool = False,
) -> CvSummary:
    """
    Train a fresh model per (activation, repeat, fold) on k-1 folds and score
    it on the held-out fold. Folds are reshuffled per repeat and shared by all
    activations. ``train_config.seed`` is the base seed; the result does not
    depend on ``workers``.
    """
    kinds = [resolve(a) for a in activations]
    if not kinds:
        raise ValidationError("at least one activation is required")
    if repeats < 1:
        raise ValidationError(f"repeats must be >= 1, got {repeats}")
    base_seed = train_config.seed

    plans = [
        stratified_kfold(dataset.labels, k, derive_seed(base_seed, "folds", r))
        for r in range(repeats)
    ]
    jobs = [
        _FoldJob(kind, r, f, derive_seed(base_seed, kind.name, r, f))
        for kind in kinds
        for r in range(repeats)
        for f in range(k)
    ]

    if verbose:
        print(
            f"{Fore.CYAN}🔁 {len(jobs)} runs: {len(kinds)} activations x {repeats} repeats x {k} folds{Style.RESET_ALL}"
        )

    def run(job: _FoldJob) -> MetricsReport:
        report = _run_job(job, dataset, plans[job.repeat], model_template, train_config)
        if verbose:
            print(
                f"  {Fore.GREEN}✓{Style.RESET_ALL} {job.activation.name:<7} "
                f"repeat {job.repeat} fold {job.fold}: acc={report.accuracy:.4f} auc={report.auc:.4f}"
            )
        return report

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(run, jobs))
    else:
        reports = [run(job) for job in jobs]

    summary = CvSummary(
        dataset=dataset.name,
        activations=[kind.name for kind in kinds],
        k=k,
        repeats=repeats,
        base_seed=base_seed,
        reports=reports,
        fold_plans=plans,
    )
    summary.aggregate()
    return summary
