"""CSV tables, JSON summaries and run manifests."""
from __future__ import annotations

import csv
import hashlib
import json
import math
from pathlib import Path
from typing import Iterable, Sequence


def fmt(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    if hasattr(v, "item"):
        return fmt(v.item())
    return str(v)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    """RFC-4180 CSV (CRLF line ends, minimal quoting), UTF-8, header row first."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(header)
        for row in rows:
            if len(row) != len(header):
                raise ValueError(f"row of length {len(row)} does not match header {list(header)}")
            w.writerow([fmt(v) for v in row])
    return path


def read_csv(path: Path) -> tuple[list[str], list[list[str]]]:
    with Path(path).open(encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path} is empty")
    return rows[0], rows[1:]


def read_columns(path: Path, required: Sequence[str] = ()) -> dict[str, list[str]]:
    header, rows = read_csv(path)
    missing = [c for c in required if c not in header]
    if missing:
        raise ValueError(f"{path.name} lacks columns: {', '.join(missing)}")
    return {h: [r[i] for r in rows] for i, h in enumerate(header)}


def write_json(path: Path, obj) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n", encoding="utf-8")
    return path


def _jsonable(o):
    if hasattr(o, "item"):
        return o.item()
    if isinstance(o, Path):
        return str(o)
    raise TypeError(f"cannot serialize {type(o).__name__}")


def sha256(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(run_dir: Path, config: dict, version: str, wall_time: float, files: Sequence[Path]) -> Path:
    entry = {
        "config": config,
        "version": version,
        "wall_time_s": round(wall_time, 3),
        "files": {p.name: sha256(p) for p in sorted(files, key=lambda p: p.name)},
    }
    return write_json(run_dir / "manifest.json", entry)


def read_manifest(path: Path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))
