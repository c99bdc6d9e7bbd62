"""CSV/JSON serialization for ratings, MOS tables, and predictions."""

from __future__ import annotations

import csv
import io
import json
from datetime import datetime
from pathlib import Path

from talkqa.errors import RatingError
from talkqa.subjective import (
    N_DISTORTIONS,
    ProcessingReport,
    RatingRecord,
    SubjectiveTable,
)

_D_COLS = [f"d{i + 1:02d}" for i in range(N_DISTORTIONS)]
RATINGS_HEADER = ["subject_id", "stimulus_id", "q", *_D_COLS, "timestamp", "session_id"]
TABLE_HEADER = ["stimulus_id", "mos", "n_ratings", *_D_COLS]
PRED_HEADER = ["stimulus_id", "pred"]


def read_ratings_csv(path) -> list[RatingRecord]:
    path = Path(path)
    records: list[RatingRecord] = []
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise RatingError(f"{path}: empty ratings file, header row required")
        missing = set(RATINGS_HEADER) - set(reader.fieldnames)
        if missing:
            raise RatingError(f"{path}: missing columns {sorted(missing)}")
        for lineno, row in enumerate(reader, start=2):
            try:
                records.append(
                    RatingRecord(
                        subject_id=row["subject_id"],
                        stimulus_id=row["stimulus_id"],
                        q=float(row["q"]),
                        d=tuple(int(row[c]) for c in _D_COLS),
                        timestamp=datetime.fromisoformat(row["timestamp"]),
                        session_id=row["session_id"],
                    )
                )
            except (ValueError, RatingError) as exc:
                raise RatingError(f"{path}:{lineno}: {exc}") from exc
    return records


def ratings_csv_text(records: list[RatingRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(RATINGS_HEADER)
    for r in records:
        writer.writerow(
            [r.subject_id, r.stimulus_id, repr(r.q), *r.d, r.timestamp.isoformat(), r.session_id]
        )
    return buf.getvalue()


def write_ratings_csv(records: list[RatingRecord], path) -> None:
    Path(path).write_text(ratings_csv_text(records), encoding="utf-8")


def write_table_csv(table: SubjectiveTable, path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TABLE_HEADER)
        for row in table.rows:
            writer.writerow([row.stimulus_id, repr(row.mos), row.n_ratings, *row.distortions])


def read_mos_csv(path) -> dict[str, float]:
    """stimulus_id -> mos from a table CSV (extra columns ignored)."""
    path = Path(path)
    out: dict[str, float] = {}
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"stimulus_id", "mos"} <= set(reader.fieldnames):
            raise RatingError(f"{path}: need columns stimulus_id, mos")
        for row in reader:
            out[row["stimulus_id"]] = float(row["mos"])
    return out


def write_pred_csv(predictions: dict[str, float], path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(PRED_HEADER)
        for sid in sorted(predictions):
            writer.writerow([sid, repr(predictions[sid])])


def read_pred_csv(path) -> dict[str, float]:
    path = Path(path)
    out: dict[str, float] = {}
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"stimulus_id", "pred"} <= set(reader.fieldnames):
            raise RatingError(f"{path}: need columns stimulus_id, pred")
        for row in reader:
            out[row["stimulus_id"]] = float(row["pred"])
    return out


def write_report_json(report: ProcessingReport, path) -> None:
    Path(path).write_text(
        json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
