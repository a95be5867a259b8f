"""Report emission: JSON document plus optional CSV tables."""
from __future__ import annotations

import csv
import json
from pathlib import Path

from .schemas import Report

VOLATILE = ("wall_time",)


def to_json(report: Report) -> str:
    """UTF-8 JSON with the model's field order and insertion-ordered tables."""
    return json.dumps(report.model_dump(mode="json"), indent=2, ensure_ascii=False) + "\n"


def stable_view(report: Report) -> dict:
    """Report without volatile fields, for determinism comparisons."""
    data = report.model_dump(mode="json")
    for key in VOLATILE:
        data.pop(key, None)
    return data


def _cell(v):
    return json.dumps(v, sort_keys=False) if isinstance(v, (dict, list)) else v


def emit(report: Report, path, tables: bool = True) -> list[Path]:
    """Write ``path`` and, when ``tables`` is set, one ``<stem>.<table>.csv``
    per convergence table.  Returns the written paths."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(to_json(report), encoding="utf-8")
    written = [path]
    if tables:
        for name, rows in report.tables.items():
            if not rows:
                continue
            out = path.with_name(f"{path.stem}.{name}.csv")
            keys = list(dict.fromkeys(k for r in rows for k in r))
            with out.open("w", newline="", encoding="utf-8") as fh:
                w = csv.DictWriter(fh, fieldnames=keys)
                w.writeheader()
                for r in rows:
                    w.writerow({k: _cell(r.get(k)) for k in keys})
            written.append(out)
    return written


def load(path) -> Report:
    return Report.model_validate_json(Path(path).read_text(encoding="utf-8"))
