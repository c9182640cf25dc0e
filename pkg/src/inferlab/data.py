"""Dataset ingestion, synthetic generators and train/test splitting.

Tabular records are stored as attribute *level indices*: categorical
attributes map to their position in the declared level list, numeric ones
to their half-open bin ``[edge_i, edge_{i+1})``.
"""
from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class DataError(ValueError):
    """Raised for unreadable or inconsistent input files."""


@dataclass(frozen=True)
class Attribute:
    name: str
    kind: str  # "categorical" | "numeric"
    levels: tuple = ()
    bin_edges: tuple = ()
    sensitive: bool = False

    def __post_init__(self):
        if self.kind == "categorical":
            if not self.levels:
                raise DataError(f"attribute {self.name!r}: categorical needs a non-empty level list")
        elif self.kind == "numeric":
            e = self.bin_edges
            if len(e) < 2 or any(b <= a for a, b in zip(e, e[1:])):
                raise DataError(f"attribute {self.name!r}: bin edges must be strictly increasing, >= 2 edges")
        else:
            raise DataError(f"attribute {self.name!r}: unknown kind {self.kind!r}")

    @property
    def n_levels(self):
        return len(self.levels) if self.kind == "categorical" else len(self.bin_edges) - 1

    def encode(self, cell: str) -> int:
        if self.kind == "categorical":
            try:
                return self.levels.index(cell)
            except ValueError:
                raise DataError(f"unknown level {cell!r}") from None
        try:
            v = float(cell)
        except ValueError:
            raise DataError(f"not a number: {cell!r}") from None
        i = int(np.searchsorted(self.bin_edges, v, side="right")) - 1
        if i < 0 or i >= self.n_levels:
            raise DataError(f"value {cell} outside all bins {list(self.bin_edges)}")
        return i

    def decode(self, index: int) -> str:
        if self.kind == "categorical":
            return self.levels[index]
        return repr(float(self.bin_edges[index]))

    def to_json(self):
        d = {"name": self.name, "kind": self.kind, "sensitive": self.sensitive}
        if self.kind == "categorical":
            d["levels"] = list(self.levels)
        else:
            d["bin_edges"] = list(self.bin_edges)
        return d


@dataclass(frozen=True)
class AttributeSchema:
    attributes: tuple
    label: str
    classes: int
    class_names: tuple = ()

    def __post_init__(self):
        if not self.attributes:
            raise DataError("schema needs at least one attribute")
        names = [a.name for a in self.attributes]
        if len(set(names)) != len(names):
            raise DataError("duplicate attribute names")
        if self.label in names:
            raise DataError(f"label column {self.label!r} is also listed as an attribute")
        if self.classes < 2:
            raise DataError("schema needs at least 2 classes")

    @property
    def names(self):
        return [a.name for a in self.attributes]

    def index(self, name):
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"unknown attribute {name!r}") from None

    @property
    def sensitive(self):
        return [a.name for a in self.attributes if a.sensitive]

    @classmethod
    def from_json(cls, obj):
        attrs = []
        for a in obj["attributes"]:
            attrs.append(Attribute(a["name"], a["kind"], tuple(a.get("levels", ())),
                                   tuple(float(e) for e in a.get("bin_edges", ())), bool(a.get("sensitive", False))))
        classes = obj["classes"]
        names = ()
        if isinstance(classes, list):
            names = tuple(str(c) for c in classes)
            classes = len(names)
        return cls(tuple(attrs), obj["label"], int(classes), names)

    def to_json(self):
        return {"attributes": [a.to_json() for a in self.attributes], "label": self.label,
                "classes": list(self.class_names) if self.class_names else self.classes}

    def encode_label(self, cell):
        if self.class_names:
            try:
                return self.class_names.index(cell)
            except ValueError:
                raise DataError(f"unknown class {cell!r}") from None
        try:
            y = int(cell)
        except ValueError:
            raise DataError(f"label {cell!r} is not an integer") from None
        if not 0 <= y < self.classes:
            raise DataError(f"label {y} outside [0, {self.classes})")
        return y

    def decode_label(self, y):
        return self.class_names[y] if self.class_names else str(y)


@dataclass
class TabularDataset:
    records: np.ndarray  # (n, d) int level indices
    labels: np.ndarray   # (n,) int
    schema: AttributeSchema

    def __post_init__(self):
        self.records = np.asarray(self.records, dtype=np.int64).reshape(-1, len(self.schema.attributes))
        self.labels = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        if len(self.records) != len(self.labels):
            raise DataError("records and labels differ in length")
        for j, a in enumerate(self.schema.attributes):
            col = self.records[:, j]
            if col.size and (col.min() < 0 or col.max() >= a.n_levels):
                raise DataError(f"attribute {a.name!r} has level indices outside [0, {a.n_levels})")
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.schema.classes):
            raise DataError("labels outside [0, classes)")

    def __len__(self):
        return len(self.labels)

    def subset(self, idx):
        return TabularDataset(self.records[idx], self.labels[idx], self.schema)


@dataclass
class ImageDataset:
    images: np.ndarray  # (n, side, side) in [0, 1]
    labels: np.ndarray
    names: list = field(default_factory=list)

    def __post_init__(self):
        self.images = np.asarray(self.images, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        if self.images.ndim != 3 or len(self.images) != len(self.labels):
            raise DataError("images must be (n, H, W) with one label each")
        if self.images.size and (self.images.min() < 0 or self.images.max() > 1):
            raise DataError("pixel values must lie in [0, 1]")

    def __len__(self):
        return len(self.labels)

    @property
    def side(self):
        return self.images.shape[1]

    def subset(self, idx):
        names = [self.names[i] for i in np.asarray(idx)] if self.names else []
        return ImageDataset(self.images[idx], self.labels[idx], names)


# -- tabular files ------------------------------------------------------------

def load_schema(path) -> AttributeSchema:
    with open(path) as f:
        return AttributeSchema.from_json(json.load(f))


def load_tabular(csv_path, schema_path) -> TabularDataset:
    """Read a CSV with a header row into level indices.

    All bad cells are collected and reported together as ``row R, column C``
    (row 1 is the first data row).
    """
    schema = load_schema(schema_path)
    with open(csv_path, newline="") as f:
        reader = csv.reader(f)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{csv_path}: missing header row") from None
        missing = [n for n in schema.names + [schema.label] if n not in header]
        if missing:
            raise DataError(f"{csv_path}: missing column(s) {missing}")
        cols = [header.index(n) for n in schema.names]
        lab_col = header.index(schema.label)
        records, labels, problems = [], [], []
        for r, row in enumerate(reader, start=1):
            if not row:
                continue
            rec = []
            for a, c in zip(schema.attributes, cols):
                try:
                    rec.append(a.encode(row[c].strip()))
                except (DataError, IndexError) as e:
                    problems.append(f"row {r}, column {a.name!r}: {e}")
            try:
                y = schema.encode_label(row[lab_col].strip())
            except (DataError, IndexError) as e:
                problems.append(f"row {r}, column {schema.label!r}: {e}")
                y = None
            if len(rec) == len(cols) and y is not None:
                records.append(rec)
                labels.append(y)
    if problems:
        raise DataError(f"{csv_path}: {len(problems)} unmappable cell(s):\n  " + "\n  ".join(problems))
    return TabularDataset(np.array(records, dtype=np.int64).reshape(-1, len(cols)), np.array(labels), schema)


def write_tabular(dataset: TabularDataset, csv_path, schema_path=None):
    """Inverse of :func:`load_tabular` (numeric cells are written as bin lower edges)."""
    schema = dataset.schema
    with open(csv_path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(schema.names + [schema.label])
        for rec, y in zip(dataset.records, dataset.labels):
            w.writerow([a.decode(int(i)) for a, i in zip(schema.attributes, rec)] + [schema.decode_label(int(y))])
    if schema_path is not None:
        with open(schema_path, "w") as f:
            json.dump(schema.to_json(), f, indent=2)


# -- PGM images ---------------------------------------------------------------

def _pgm_tokens(buf, count):
    """Parse ``count`` whitespace-separated header tokens; returns (tokens, payload offset)."""
    tokens, pos = [], 0
    while len(tokens) < count:
        while pos < len(buf) and buf[pos:pos + 1].isspace():
            pos += 1
        if buf[pos:pos + 1] == b"#":
            while pos < len(buf) and buf[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(buf) and not buf[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise DataError("truncated PGM header")
        tokens.append(buf[start:pos])
    return tokens, pos + 1  # exactly one whitespace byte before the raster


def read_pgm(path) -> np.ndarray:
    """Binary (P5) PGM with maxval 255, scaled to [0, 1]."""
    buf = Path(path).read_bytes()
    if buf[:2] != b"P5":
        raise DataError(f"{path}: not a binary PGM (expected magic P5)")
    (w, h, maxval), off = _pgm_tokens(buf[2:], 3)
    w, h, maxval = int(w), int(h), int(maxval)
    if maxval != 255:
        raise DataError(f"{path}: maxval {maxval} unsupported (only 255)")
    raster = buf[2 + off:2 + off + w * h]
    if len(raster) != w * h:
        raise DataError(f"{path}: truncated raster")
    return np.frombuffer(raster, dtype=np.uint8).reshape(h, w) / 255.0


def to_bytes(image) -> np.ndarray:
    return np.clip(np.rint(np.asarray(image) * 255.0), 0, 255).astype(np.uint8)


def write_pgm(path, image):
    """Write a [0, 1] grayscale array as P5 (rounded to the nearest 8-bit level)."""
    px = to_bytes(image)
    h, w = px.shape
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as f:
        f.write(b"P5\n%d %d\n255\n" % (w, h))
        f.write(px.tobytes())
    os.replace(tmp, path)


def load_pgm(dir_path, labels_csv) -> ImageDataset:
    """Load the images listed in a ``filename,label`` CSV (header optional)."""
    dir_path = Path(dir_path)
    names, labels = [], []
    with open(labels_csv, newline="") as f:
        for row in csv.reader(f):
            if not row or (not names and row[0].strip() == "filename"):
                continue
            names.append(row[0].strip())
            labels.append(int(row[1]))
    images = []
    for n in names:
        img = read_pgm(dir_path / n)
        if images and img.shape != images[0].shape:
            raise DataError(f"{n}: size {img.shape} differs from {images[0].shape}")
        images.append(img)
    if images and images[0].shape[0] != images[0].shape[1]:
        raise DataError("images must be square")
    arr = np.stack(images) if images else np.zeros((0, 0, 0))
    return ImageDataset(arr, np.array(labels, dtype=np.int64), names)


def write_pgm_dataset(dataset: ImageDataset, dir_path, labels_csv):
    dir_path = Path(dir_path)
    dir_path.mkdir(parents=True, exist_ok=True)
    names = dataset.names or [f"img_{i:05d}.pgm" for i in range(len(dataset))]
    with open(labels_csv, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["filename", "label"])
        for name, img, y in zip(names, dataset.images, dataset.labels):
            write_pgm(dir_path / name, img)
            w.writerow([name, int(y)])


# -- synthetic workloads ------------------------------------------------------

SENSITIVE_AGREEMENT = 0.85
CORRELATED_AGREEMENT = 0.7
N_NOISE = 6


def synth_schema() -> AttributeSchema:
    binary = ("0", "1")
    attrs = [Attribute("sensitive", "categorical", binary, sensitive=True)]
    attrs += [Attribute(f"corr_{i}", "categorical", binary) for i in (1, 2)]
    attrs += [Attribute(f"noise_{i}", "categorical", binary) for i in range(1, N_NOISE + 1)]
    return AttributeSchema(tuple(attrs), "label", 2)


def synth_tabular(n, seed):
    """Binary records with a planted sensitive attribute.

    ``label ~ Bernoulli(0.5)``; ``sensitive`` equals the label with
    probability 0.85; ``corr_1`` and ``corr_2`` each equal it with
    probability 0.7; six ``noise_*`` columns are fair coins. Returns
    ``(dataset, schema)``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    y = rng.integers(0, 2, n)

    def agree(p):
        return np.where(rng.random(n) < p, y, 1 - y)

    cols = [agree(SENSITIVE_AGREEMENT), agree(CORRELATED_AGREEMENT), agree(CORRELATED_AGREEMENT)]
    cols += [rng.integers(0, 2, n) for _ in range(N_NOISE)]
    schema = synth_schema()
    return TabularDataset(np.stack(cols, axis=1), y, schema), schema


def synth_images(n, side, seed):
    """Mammogram-like stand-ins.

    Every image is a smooth random background (a few low-frequency cosines)
    plus N(0, 0.01^2) pixel noise; odd-indexed images are class 1 and also
    get one bright soft-edged ellipse with random centre, axes, angle and
    intensity. Pixels are clipped to [0, 1].
    """
    if side % 8:
        raise ValueError(f"side must be divisible by 8, got {side}")
    rng = np.random.default_rng(seed)
    t = np.arange(side) / side
    yy, xx = np.meshgrid(t, t, indexing="ij")
    labels = np.arange(n) % 2
    images = np.empty((n, side, side))
    for i in range(n):
        img = np.full((side, side), rng.uniform(0.25, 0.45))
        for _ in range(3):
            fx, fy = rng.integers(0, 3, size=2)
            phase = rng.uniform(0, 2 * np.pi)
            img += rng.uniform(0.02, 0.08) * np.cos(2 * np.pi * (fx * xx + fy * yy) + phase)
        if labels[i]:
            cy, cx = rng.uniform(0.25, 0.75, size=2)
            ay, ax = rng.uniform(0.08, 0.22, size=2)
            th = rng.uniform(0, np.pi)
            dy, dx = yy - cy, xx - cx
            u = (dx * np.cos(th) + dy * np.sin(th)) / ax
            v = (-dx * np.sin(th) + dy * np.cos(th)) / ay
            r2 = u * u + v * v
            img += rng.uniform(0.25, 0.45) / (1.0 + np.exp(np.minimum(8.0 * (r2 - 1.0), 700.0)))
        img += rng.normal(0.0, 0.01, size=(side, side))
        images[i] = np.clip(img, 0.0, 1.0)
    return ImageDataset(images, labels)


# -- splitting and priors -----------------------------------------------------

def split_train_test(dataset, fraction=0.8, seed=0):
    """Shuffled partition with ``round(fraction * n)`` (half-up) training items."""
    if not 0 < fraction < 1:
        raise ValueError("fraction must lie strictly between 0 and 1")
    n = len(dataset)
    if n < 2:
        raise ValueError("need at least 2 items to split")
    n_train = int(np.floor(fraction * n + 0.5))
    perm = np.random.default_rng(seed).permutation(n)
    return dataset.subset(np.sort(perm[:n_train])), dataset.subset(np.sort(perm[n_train:]))


def estimate_priors(train: TabularDataset, attr) -> np.ndarray:
    """Add-one smoothed level frequencies of one attribute."""
    schema = train.schema
    j = schema.index(attr) if isinstance(attr, str) else int(attr)
    if not 0 <= j < len(schema.attributes):
        raise KeyError(f"unknown attribute {attr!r}")
    k = schema.attributes[j].n_levels
    counts = np.bincount(train.records[:, j], minlength=k) if len(train) else np.zeros(k)
    return (counts + 1.0) / (len(train) + k)


def estimate_prior_table(train: TabularDataset) -> dict:
    """PriorTable: ``{sensitive attribute name: probability vector}``."""
    return {name: estimate_priors(train, name) for name in train.schema.sensitive}
