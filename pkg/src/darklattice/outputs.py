"""CSV tables and JSON summaries written by the experiment runner."""
from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np

from . import __version__
from .config import _json_default


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v) + 0.0)  # no negative zero
    return str(v)


def format_csv(columns, rows, config_hash: str) -> str:
    """RFC-4180 text (CRLF line ends) preceded by a ``# config-hash:`` comment line."""
    buf = io.StringIO(newline="")
    buf.write(f"# config-hash: {config_hash}\r\n")
    w = csv.writer(buf, lineterminator="\r\n", quoting=csv.QUOTE_MINIMAL)
    w.writerow(columns)
    for r in rows:
        if len(r) != len(columns):
            raise ValueError(f"row has {len(r)} cells, header has {len(columns)}")
        w.writerow([_cell(v) for v in r])
    return buf.getvalue()


def read_csv(path) -> tuple[str, list[str], list[list[str]]]:
    """(config hash, header, rows) of a file written by :func:`write_outputs`."""
    with open(path, newline="") as fh:
        first = fh.readline()
        if not first.startswith("# config-hash:"):
            raise ValueError(f"{path}: missing config-hash header")
        rows = list(csv.reader(fh))
    return first.split(":", 1)[1].strip(), rows[0], rows[1:]


def write_outputs(out_dir, experiment: str, config: dict, config_hash: str, columns, rows,
                  summary: dict) -> tuple[Path, Path]:
    """Write ``<experiment>-<hash12>.csv`` and ``.json`` into ``out_dir``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = f"{experiment}-{config_hash[:12]}"
    csv_path = out_dir / f"{stem}.csv"
    json_path = out_dir / f"{stem}.json"
    with open(csv_path, "w", newline="") as fh:
        fh.write(format_csv(columns, rows, config_hash))
    record = {"experiment": experiment, "config_hash": config_hash, "version": __version__,
              "config": config, "csv": csv_path.name, "n_rows": len(rows), "columns": list(columns),
              "summary": summary}
    with open(json_path, "w") as fh:
        json.dump(record, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")
    return csv_path, json_path
