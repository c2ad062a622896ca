"""Dataset loading, standardisation and stratified splitting.

Feature matrices are M x N (one column per observation), matching the
layer-value convention used everywhere else.
"""
import csv
from dataclasses import dataclass, field
from importlib import resources

import numpy as np


class DataError(ValueError):
    pass


@dataclass
class Dataset:
    x: np.ndarray
    labels: np.ndarray = None          # class indices, classification only
    y: np.ndarray = None               # real targets (R x N), regression only
    class_names: list = None
    feature_names: list = field(default_factory=list)

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=np.float64)
        if self.x.ndim != 2 or self.x.shape[1] < 1:
            raise DataError("features must be an M x N matrix with N >= 1")
        if not np.all(np.isfinite(self.x)):
            raise DataError("features must be finite")
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.int64)
            if self.labels.shape != (self.n,):
                raise DataError("need one label per observation")
            k = len(self.class_names) if self.class_names else int(self.labels.max()) + 1
            if self.labels.min() < 0 or self.labels.max() >= k:
                raise DataError("label index out of range")

    @property
    def n(self):
        return self.x.shape[1]

    @property
    def n_classes(self):
        if self.labels is None:
            return 0
        return len(self.class_names) if self.class_names else int(self.labels.max()) + 1

    def subset(self, idx):
        idx = np.asarray(idx)
        return Dataset(self.x[:, idx],
                       None if self.labels is None else self.labels[idx],
                       None if self.y is None else np.asarray(self.y)[:, idx],
                       self.class_names, list(self.feature_names))

    def targets(self):
        """K x N one-hot labels, or the real-valued target matrix."""
        if self.labels is not None:
            return one_hot(self.labels, self.n_classes)
        return np.atleast_2d(np.asarray(self.y, dtype=np.float64))

    def metadata(self):
        return {"n_obs": self.n, "n_features": self.x.shape[0],
                "feature_names": list(self.feature_names),
                "class_names": self.class_names, "n_classes": self.n_classes}


def _resolve(header, col, what):
    if isinstance(col, int):
        return col
    if header is None:
        raise DataError(f"{what} {col!r} given by name but the file has no header")
    try:
        return header.index(col)
    except ValueError:
        raise DataError(f"unknown {what} {col!r}; columns are {header}") from None


def load_csv(path, feature_columns=None, label_column=-1, header=True, target="class"):
    """Read a CSV of observations in rows.

    ``feature_columns`` and ``label_column`` are names (with a header) or
    integer positions; by default every column except the label is a
    feature; ``label_column=None`` reads features only. ``target`` is
    ``"class"`` (labels mapped to indices in order of first appearance) or
    ``"real"``.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    rows = [r for r in rows if r]
    if not rows:
        raise DataError(f"{path}: empty file")
    head = [h.strip() for h in rows[0]] if header else None
    body = rows[1:] if header else rows
    width = len(rows[0])
    lab = None if label_column is None else _resolve(head, label_column, "label column") % width
    if feature_columns is None:
        feats = [j for j in range(width) if j != lab]
    else:
        feats = [_resolve(head, c, "feature column") % width for c in feature_columns]
    x = np.empty((len(feats), len(body)))
    raw_labels = []
    first = 2 if header else 1
    for i, row in enumerate(body):
        if len(row) != width:
            raise DataError(f"{path}: row {i + first} has {len(row)} fields, expected {width}")
        for a, j in enumerate(feats):
            try:
                x[a, i] = float(row[j])
            except ValueError:
                raise DataError(f"{path}: row {i + first}, column {j + 1}: "
                                f"non-numeric value {row[j]!r}") from None
        if lab is not None:
            raw_labels.append(row[lab].strip())
    names = [head[j] for j in feats] if head else [f"x{j}" for j in feats]
    if lab is None:
        return Dataset(x, feature_names=names)
    if target == "real":
        try:
            y = np.array([[float(v) for v in raw_labels]])
        except ValueError as e:
            raise DataError(f"{path}: non-numeric target ({e})") from None
        return Dataset(x, y=y, feature_names=names)
    classes = list(dict.fromkeys(raw_labels))
    index = {c: k for k, c in enumerate(classes)}
    return Dataset(x, labels=[index[v] for v in raw_labels], class_names=classes,
                   feature_names=names)


def iris_path():
    return str(resources.files("proxdeep") / "data" / "iris.csv")


def load_iris():
    """The bundled 150-observation Fisher Iris data (4 features, 3 species)."""
    return load_csv(iris_path(), label_column="species")


@dataclass
class Scaler:
    mean: np.ndarray
    sd: np.ndarray

    def apply(self, x):
        return (np.asarray(x, dtype=np.float64) - self.mean[:, None]) / self.sd[:, None]

    def invert(self, x):
        return np.asarray(x, dtype=np.float64) * self.sd[:, None] + self.mean[:, None]

    def to_dict(self):
        return {"mean": self.mean.tolist(), "sd": self.sd.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(np.asarray(d["mean"], dtype=np.float64), np.asarray(d["sd"], dtype=np.float64))


def standardize(ds):
    """Centre each feature and scale it to unit (population) sd."""
    mean = ds.x.mean(axis=1)
    sd = ds.x.std(axis=1)
    for j, s in enumerate(sd):
        if not s > 0:
            name = ds.feature_names[j] if j < len(ds.feature_names) else j
            raise DataError(f"feature {name!r} has zero variance")
    scaler = Scaler(mean, sd)
    out = ds.subset(np.arange(ds.n))
    out.x = scaler.apply(ds.x)
    return out, scaler


def stratified_split(ds, train_frac, seed):
    """Partition into train/test keeping per-class proportions.

    Each class contributes ``round(train_frac * n_class)`` training
    observations (at least one on each side).
    """
    if not 0 < train_frac < 1:
        raise DataError("train_frac must lie strictly between 0 and 1")
    if ds.labels is None:
        raise DataError("stratified split needs class labels")
    rng = np.random.default_rng(seed)
    train, test = [], []
    for k in range(ds.n_classes):
        members = np.flatnonzero(ds.labels == k)
        if len(members) < 2:
            raise DataError(f"class {k} has fewer than 2 members")
        n_tr = int(np.floor(train_frac * len(members) + 0.5))
        if n_tr < 1 or n_tr >= len(members):
            raise DataError(f"train_frac={train_frac} leaves class {k} "
                            f"({len(members)} members) without train or test data")
        perm = rng.permutation(members)
        train.extend(perm[:n_tr])
        test.extend(perm[n_tr:])
    return ds.subset(np.sort(train)), ds.subset(np.sort(test))


def one_hot(labels, k):
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size and (labels.min() < 0 or labels.max() >= k):
        raise DataError(f"label out of range for {k} classes")
    out = np.zeros((k, labels.size))
    out[labels, np.arange(labels.size)] = 1.0
    return out
