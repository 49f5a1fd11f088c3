"""CSV ingestion, quantization, one-hot binarization, and CV folds."""

from __future__ import annotations

import random
from bisect import bisect_left
from dataclasses import dataclass, field
from math import ceil


class DatasetError(ValueError):
    """Malformed input data or invalid pipeline parameters."""


@dataclass
class RawDataset:
    """Header-labelled string table; the last CSV column is the class."""

    feature_names: list[str]
    class_name: str
    rows: list[list[str]]  # feature values only
    labels: list[str]

    @property
    def num_examples(self) -> int:
        return len(self.rows)


@dataclass
class BinDataset:
    """Fully binarized dataset: examples are 0/1 feature vectors."""

    num_features: int
    classes: list[str]
    feature_names: list[str]
    examples: list[tuple[tuple[int, ...], int, int]]  # (bits, class index, weight)

    def __post_init__(self):
        if len(self.feature_names) != self.num_features:
            raise DatasetError("feature name count does not match width")
        for bits, cls, weight in self.examples:
            if len(bits) != self.num_features:
                raise DatasetError("example width %d, expected %d" % (len(bits), self.num_features))
            if any(b not in (0, 1) for b in bits):
                raise DatasetError("non-binary feature value")
            if not 0 <= cls < len(self.classes):
                raise DatasetError("class index %d out of range" % cls)
            if weight < 1:
                raise DatasetError("example weight must be >= 1")

    @property
    def num_examples(self) -> int:
        return len(self.examples)

    @property
    def total_weight(self) -> int:
        return sum(w for _, _, w in self.examples)

    def subset(self, indices) -> "BinDataset":
        return BinDataset(
            num_features=self.num_features,
            classes=list(self.classes),
            feature_names=list(self.feature_names),
            examples=[self.examples[i] for i in indices],
        )


@dataclass
class SanitizeReport:
    merged: int = 0   # weight units folded into duplicate carriers
    removed: int = 0  # weight units dropped with contradictory groups


@dataclass
class FoldPlan:
    num_folds: int
    seed: int
    assignments: list[int]  # example index -> fold index

    def test_indices(self, fold: int) -> list[int]:
        return [i for i, f in enumerate(self.assignments) if f == fold]

    def train_indices(self, fold: int) -> list[int]:
        return [i for i, f in enumerate(self.assignments) if f != fold]


def load_csv(path: str) -> RawDataset:
    """Parse a comma-separated UTF-8 file with a header row.

    The last column is the class label.  Fields may not be quoted;
    ragged rows and empty cells are rejected with their position.
    """
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    while lines and not lines[-1].strip():
        lines.pop()
    if not lines:
        raise DatasetError("empty file: no header row")
    header = [h.strip() for h in lines[0].split(",")]
    if len(header) < 1 or any(not h for h in header):
        raise DatasetError("header row has an empty column name")
    width = len(header)
    rows: list[list[str]] = []
    labels: list[str] = []
    for lineno, line in enumerate(lines[1:], start=2):
        cells = [c.strip() for c in line.split(",")]
        if len(cells) != width:
            raise DatasetError(
                "row %d: expected %d fields, got %d" % (lineno, width, len(cells))
            )
        for col, cell in enumerate(cells):
            if not cell:
                raise DatasetError(
                    "row %d, column %r: empty value" % (lineno, header[col])
                )
            if cell.startswith('"') or cell.endswith('"'):
                raise DatasetError(
                    "row %d, column %r: quoted fields are not supported" % (lineno, header[col])
                )
        rows.append(cells[:-1])
        labels.append(cells[-1])
    return RawDataset(
        feature_names=header[:-1], class_name=header[-1], rows=rows, labels=labels
    )


def _as_numbers(values: list[str]) -> list[float] | None:
    out = []
    for v in values:
        try:
            out.append(float(v))
        except ValueError:
            return None
    return out


def _quantize(numbers: list[float], q: int) -> tuple[list[int], list[str]]:
    """Equal-frequency binning into at most q bins.

    Columns with at most q distinct values pass through untouched, one
    bin per value; this keeps 0/1 data fixed under re-binarization.
    """
    distinct = sorted(set(numbers))
    if len(distinct) <= q:
        labels = ["%g" % v for v in distinct]
        return [distinct.index(v) for v in numbers], labels
    srt = sorted(numbers)
    m = len(srt)
    cuts = []
    for k in range(1, q):
        cuts.append(srt[ceil(m * k / q) - 1])
    cuts = sorted(set(cuts))
    bins = [bisect_left(cuts, v) for v in numbers]  # count of cuts strictly below v
    used = sorted(set(bins))
    remap = {b: i for i, b in enumerate(used)}
    labels = ["bin%d" % i for i in range(len(used))]
    return [remap[b] for b in bins], labels


def binarize(raw: RawDataset, q: int = 2, max_categories: int = 32) -> BinDataset:
    """Quantize numeric columns and one-hot everything wider than one bit.

    Columns with exactly two values become a single bit, columns with d > 2
    values become d indicator bits, and constant columns become a single
    all-zero bit.  q must be 2, 3, or 4.
    """
    if q not in (2, 3, 4):
        raise DatasetError("quantization level must be 2, 3, or 4, got %r" % (q,))
    if raw.num_examples == 0:
        raise DatasetError("cannot binarize an empty dataset")
    feature_names: list[str] = []
    columns: list[list[int]] = []  # one 0/1 column per emitted feature
    for ci, name in enumerate(raw.feature_names):
        values = [row[ci] for row in raw.rows]
        numbers = _as_numbers(values)
        if numbers is not None:
            codes, labels = _quantize(numbers, q)
        else:
            distinct = sorted(set(values))
            if len(distinct) > max_categories:
                raise DatasetError(
                    "column %r has %d categories, over the limit of %d"
                    % (name, len(distinct), max_categories)
                )
            index = {v: i for i, v in enumerate(distinct)}
            codes, labels = [index[v] for v in values], distinct
        d = len(labels)
        if d == 1:
            feature_names.append(name)
            columns.append([0] * len(codes))
        elif d == 2:
            feature_names.append(name)
            columns.append(codes)
        else:
            for level in range(d):
                feature_names.append("%s=%s" % (name, labels[level]))
                columns.append([1 if c == level else 0 for c in codes])
    classes = sorted(set(raw.labels))
    class_index = {c: i for i, c in enumerate(classes)}
    examples = []
    for r in range(raw.num_examples):
        bits = tuple(col[r] for col in columns)
        examples.append((bits, class_index[raw.labels[r]], 1))
    return BinDataset(
        num_features=len(feature_names),
        classes=classes,
        feature_names=feature_names,
        examples=examples,
    )


def sanitize(ds: BinDataset, mode: str) -> tuple[BinDataset, SanitizeReport]:
    """Merge duplicate examples into weights; optionally drop contradictions.

    mode "perfect" removes every group of identical feature vectors that
    carries more than one class; mode "sparse" keeps them (the training
    objective charges for them instead).
    """
    if mode not in ("perfect", "sparse"):
        raise DatasetError("sanitize mode must be 'perfect' or 'sparse'")
    groups: dict[tuple[int, ...], dict[int, int]] = {}
    order: list[tuple[tuple[int, ...], int]] = []
    for bits, cls, weight in ds.examples:
        by_class = groups.setdefault(bits, {})
        if cls not in by_class:
            order.append((bits, cls))
            by_class[cls] = 0
        by_class[cls] += weight
    report = SanitizeReport()
    report.merged = ds.total_weight - len(order)
    examples = []
    for bits, cls in order:
        by_class = groups[bits]
        if mode == "perfect" and len(by_class) > 1:
            continue
        examples.append((bits, cls, by_class[cls]))
    report.removed = ds.total_weight - sum(w for _, _, w in examples)
    out = BinDataset(
        num_features=ds.num_features,
        classes=list(ds.classes),
        feature_names=list(ds.feature_names),
        examples=examples,
    )
    return out, report


def kfold_split(ds: BinDataset, k: int, seed: int) -> FoldPlan:
    """Deterministic stratified k-fold assignment.

    Examples are shuffled within each class and dealt cyclically to folds
    with a single cursor shared across classes, so overall fold sizes
    differ by at most one and each class spreads as evenly as possible.
    """
    if k < 2:
        raise DatasetError("need at least 2 folds, got %d" % k)
    if ds.num_examples < k:
        raise DatasetError("cannot split %d examples into %d folds" % (ds.num_examples, k))
    rng = random.Random(seed)
    by_class: dict[int, list[int]] = {}
    for i, (_, cls, _) in enumerate(ds.examples):
        by_class.setdefault(cls, []).append(i)
    assignments = [0] * ds.num_examples
    cursor = rng.randrange(k)
    for cls in sorted(by_class):
        members = by_class[cls]
        rng.shuffle(members)
        for i in members:
            assignments[i] = cursor % k
            cursor += 1
    return FoldPlan(num_folds=k, seed=seed, assignments=assignments)
