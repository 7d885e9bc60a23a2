"""
Datasets
CSV and PGM ingestion plus synthetic generators standing in for the large
tabular and image benchmarks.
"""

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd
from PIL import Image, UnidentifiedImageError

from afnet.errors import DatasetError, ValidationError

TABULAR = "tabular"
IMAGE = "image"


@dataclass
class Dataset:
    """Features, integer class ids and class names"""

    features: np.ndarray
    labels: np.ndarray
    class_names: List[str]
    feature_kind: str = TABULAR
    name: str = "dataset"
    feature_names: Optional[List[str]] = field(default=None)

    def __post_init__(self):
        self.features = np.ascontiguousarray(self.features, dtype=np.float32)
        self.labels = np.asarray(self.labels, dtype=np.int64)

        n = self.features.shape[0] if self.features.ndim else 0
        if n < 1:
            raise ValidationError("dataset needs at least one sample")
        if self.labels.shape != (n,):
            raise ValidationError(
                f"labels shape {list(self.labels.shape)} does not match {n} samples"
            )
        if self.labels.min() < 0 or self.labels.max() >= len(self.class_names):
            raise ValidationError(
                f"labels must lie in [0, {len(self.class_names)}) for classes {self.class_names}"
            )
        if self.feature_kind == TABULAR and self.features.ndim != 2:
            raise ValidationError("tabular features must be rank-2 [n, d]")
        if self.feature_kind == IMAGE and self.features.ndim != 4:
            raise ValidationError("image features must be rank-4 [n, h, w, channels]")
        if not np.all(np.isfinite(self.features)):
            raise ValidationError("features must be finite")

    def __len__(self) -> int:
        return self.features.shape[0]

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    @property
    def input_shape(self):
        return tuple(self.features.shape[1:])

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.n_classes)

    def subset(self, indices: Sequence[int]) -> "Dataset":
        indices = np.asarray(indices, dtype=np.int64)
        return Dataset(
            self.features[indices],
            self.labels[indices],
            list(self.class_names),
            self.feature_kind,
            self.name,
            self.feature_names,
        )

    def to_csv(self, path, label_column: str = "label"):
        """Write tabular features plus the class name column"""
        if self.feature_kind != TABULAR:
            raise ValidationError("only tabular datasets can be written as CSV")
        columns = self.feature_names or [f"x{i}" for i in range(self.features.shape[1])]
        frame = pd.DataFrame(self.features.astype(np.float64), columns=columns)
        frame[label_column] = [self.class_names[i] for i in self.labels]
        frame.to_csv(path, index=False, float_format="%.9g")


def load_csv(
    path,
    label_column: str,
    feature_columns: Optional[List[str]] = None,
    normalize: bool = True,
) -> Dataset:
    """
    Load a comma-separated file with a header row. Features are min-max scaled
    per column to [0, 1] (constant columns become 0); class ids follow the
    first appearance of each label. Row numbers in errors are file lines.
    """
    path = Path(path)
    if not path.exists():
        raise DatasetError("file not found", path=str(path))

    try:
        frame = pd.read_csv(
            path, dtype=str, keep_default_na=False, skipinitialspace=True, encoding="utf-8"
        )
    except pd.errors.EmptyDataError:
        raise DatasetError("empty file, header row required", path=str(path))
    except pd.errors.ParserError as e:
        raise DatasetError(f"malformed CSV: {e}", path=str(path))

    if label_column not in frame.columns:
        raise DatasetError(
            f"missing label column '{label_column}'", path=str(path), column=label_column
        )
    if len(frame) == 0:
        raise DatasetError("no data rows", path=str(path))

    columns = feature_columns or [c for c in frame.columns if c != label_column]
    for column in columns:
        if column not in frame.columns:
            raise DatasetError(f"missing feature column '{column}'", path=str(path), column=column)
    if not columns:
        raise DatasetError("no feature columns", path=str(path))

    values = np.empty((len(frame), len(columns)), dtype=np.float64)
    for j, column in enumerate(columns):
        parsed = pd.to_numeric(frame[column], errors="coerce")
        bad = parsed.isna() | ~np.isfinite(parsed.to_numpy(dtype=np.float64, na_value=np.nan))
        if bad.any():
            position = int(np.flatnonzero(bad.to_numpy())[0])
            cell = frame[column].iloc[position]
            # +2: header is line 1, first data row is line 2
            raise DatasetError(
                f"non-numeric feature cell '{cell}'",
                path=str(path),
                row=position + 2,
                column=column,
            )
        values[:, j] = parsed.to_numpy(dtype=np.float64)

    if normalize:
        values = min_max_normalize(values)

    raw_labels = frame[label_column].tolist()
    class_names: List[str] = []
    ids = {}
    for label in raw_labels:
        if label not in ids:
            ids[label] = len(class_names)
            class_names.append(label)
    labels = np.array([ids[label] for label in raw_labels], dtype=np.int64)

    return Dataset(values, labels, class_names, TABULAR, path.stem, list(columns))


def min_max_normalize(values: np.ndarray) -> np.ndarray:
    """Per-column scaling to [0, 1]; zero-range columns map to 0"""
    low = values.min(axis=0)
    span = values.max(axis=0) - low
    safe = np.where(span > 0, span, 1.0)
    return np.where(span > 0, (values - low) / safe, 0.0)


def _pgm_header(path: Path):
    """(width, height, maxval) of a binary PGM, comments allowed"""
    with open(path, "rb") as f:
        head = f.read(512)
    if head[:2] != b"P5":
        raise DatasetError(
            f"unsupported image format {head[:2]!r}, expected binary PGM 'P5'", path=str(path)
        )
    body = re.sub(rb"#[^\n]*", b" ", head[2:])
    tokens = body.split()[:3]
    if len(tokens) < 3 or not all(t.isdigit() for t in tokens):
        raise DatasetError("malformed PGM header", path=str(path))
    return tuple(int(t) for t in tokens)


def _read_pgm(path: Path) -> np.ndarray:
    _, _, maxval = _pgm_header(path)
    if maxval != 255:
        raise DatasetError(f"PGM maxval must be 255, got {maxval}", path=str(path))

    try:
        with Image.open(path) as img:
            img.load()
            pixels = np.asarray(img, dtype=np.uint8)
    except (OSError, UnidentifiedImageError, SyntaxError, ValueError) as e:
        raise DatasetError(f"truncated or unreadable PGM: {e}", path=str(path))

    return pixels.astype(np.float32) / 255.0


def load_pgm_dir(root) -> Dataset:
    """
    One subdirectory per class, each with binary PGM files of identical size.
    Class ids follow the lexicographic order of the subdirectory names.
    """
    root = Path(root)
    if not root.is_dir():
        raise DatasetError("not a directory", path=str(root))

    class_dirs = sorted((d for d in root.iterdir() if d.is_dir()), key=lambda d: d.name)
    if not class_dirs:
        raise DatasetError("no class subdirectories", path=str(root))

    images = []
    labels = []
    expected_shape = None
    for class_id, class_dir in enumerate(class_dirs):
        files = sorted(p for p in class_dir.iterdir() if p.is_file() and p.suffix.lower() == ".pgm")
        if not files:
            raise DatasetError("class directory has no .pgm files", path=str(class_dir))
        for file in files:
            pixels = _read_pgm(file)
            if expected_shape is None:
                expected_shape = pixels.shape
            elif pixels.shape != expected_shape:
                raise DatasetError(
                    f"image is {pixels.shape[1]}x{pixels.shape[0]}, expected "
                    f"{expected_shape[1]}x{expected_shape[0]}",
                    path=str(file),
                )
            images.append(pixels)
            labels.append(class_id)

    features = np.stack(images)[..., None]
    return Dataset(
        features,
        np.array(labels, dtype=np.int64),
        [d.name for d in class_dirs],
        IMAGE,
        root.name,
    )


def make_blobs(
    n_per_class: int,
    n_classes: int = 2,
    dim: int = 2,
    separation: float = 10.0,
    seed: int = 0,
) -> Dataset:
    """
    Unit-variance Gaussian clusters. Class c is centred at c * separation along
    the diagonal direction, so neighbouring classes sit ``separation`` apart.
    """
    if n_per_class < 1 or n_classes < 1 or dim < 1:
        raise ValidationError("n_per_class, n_classes and dim must be positive")

    rng = np.random.default_rng(seed)
    direction = np.ones(dim) / np.sqrt(dim)
    features = []
    labels = []
    for c in range(n_classes):
        centre = c * separation * direction
        features.append(centre + rng.standard_normal((n_per_class, dim)))
        labels.append(np.full(n_per_class, c))

    return Dataset(
        np.concatenate(features),
        np.concatenate(labels),
        [f"class_{c}" for c in range(n_classes)],
        TABULAR,
        "blobs",
    )


def make_dying_relu_stress(n: int, dim: int = 4, seed: int = 0) -> Dataset:
    """
    Two classes whose features are all <= -1. Together with strongly negative
    biases this drives every first-layer ReLU pre-activation below zero.
    """
    if n < 2 or dim < 1:
        raise ValidationError("stress dataset needs n >= 2 and dim >= 1")

    rng = np.random.default_rng(seed)
    labels = np.arange(n) % 2
    centres = np.where(labels == 0, -2.0, -4.0)[:, None]
    features = centres + 0.5 * rng.standard_normal((n, dim))
    features = np.minimum(features, -1.0)

    return Dataset(features, labels, ["low", "lower"], TABULAR, "dying_relu_stress")
