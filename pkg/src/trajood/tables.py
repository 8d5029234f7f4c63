"""CSV exports for feature and score batches.

Floats are written with ``repr`` so that reading them back gives the exact
same doubles.
"""

from __future__ import annotations

import csv
import io

import numpy as np

FEATURE_HEADER = ["sample_id", "f1", "f2", "label"]
SCORE_HEADER = ["sample_id", "raw_score", "calibrated_score", "label"]


def _render(header, columns) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in zip(*columns):
        writer.writerow([v if isinstance(v, str) else repr(float(v)) for v in row])
    return buf.getvalue()


def _ids_labels(n, sample_ids, labels):
    ids = [str(i) for i in (range(n) if sample_ids is None else sample_ids)]
    if labels is None:
        labels = ["unlabeled"] * n
    elif isinstance(labels, str):
        labels = [labels] * n
    if len(ids) != n or len(labels) != n:
        raise ValueError("sample_ids and labels must match the number of rows")
    return ids, list(labels)


def features_to_csv(features, sample_ids=None, labels=None) -> str:
    feats = np.asarray(features, dtype=np.float64).reshape(-1, 2)
    ids, labels = _ids_labels(len(feats), sample_ids, labels)
    return _render(FEATURE_HEADER, [ids, feats[:, 0], feats[:, 1], labels])


def scores_to_csv(raw, calibrated, sample_ids=None, labels=None) -> str:
    raw = np.asarray(raw, dtype=np.float64).reshape(-1)
    cal = np.asarray(calibrated, dtype=np.float64).reshape(-1)
    ids, labels = _ids_labels(len(raw), sample_ids, labels)
    return _render(SCORE_HEADER, [ids, raw, cal, labels])


def read_features_csv(text: str) -> tuple[list, np.ndarray, list]:
    """Parse a feature CSV into ``(sample_ids, features (n, 2), labels)``."""
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header != FEATURE_HEADER:
        raise ValueError(f"feature CSV header must be {','.join(FEATURE_HEADER)}, got {header}")
    ids, rows, labels = [], [], []
    for lineno, row in enumerate(reader, start=2):
        if len(row) != 4:
            raise ValueError(f"line {lineno}: expected 4 fields, got {len(row)}")
        ids.append(row[0])
        try:
            rows.append((float(row[1]), float(row[2])))
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from exc
        labels.append(row[3])
    feats = np.array(rows, dtype=np.float64).reshape(-1, 2)
    if not np.all(np.isfinite(feats)):
        raise ValueError("feature CSV contains non-finite values")
    return ids, feats, labels
