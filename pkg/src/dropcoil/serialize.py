"""Deterministic CSV/JSON writers with version + config-hash metadata."""

from __future__ import annotations

import csv
import hashlib
import json

from . import __version__
from .errors import IoError


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def config_hash(config: dict) -> str:
    return hashlib.sha256(canonical_json(config).encode("utf-8")).hexdigest()[:16]


def fmt_float(x) -> str:
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def write_csv(path, columns, rows, config: dict = None, extra_meta: dict = None):
    """RFC-4180 body preceded by '#'-prefixed metadata lines."""
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(f"# dropcoil {__version__}\n")
            if config is not None:
                fh.write(f"# config-hash {config_hash(config)}\n")
            for k in sorted(extra_meta or {}):
                fh.write(f"# {k} {fmt_float(extra_meta[k])}\n")
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(columns)
            for row in rows:
                writer.writerow([fmt_float(v) for v in row])
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def write_json(path, payload: dict, config: dict = None):
    doc = {"dropcoil_version": __version__}
    if config is not None:
        doc["config_hash"] = config_hash(config)
        doc["config"] = config
    doc.update(payload)
    try:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, sort_keys=True, indent=2)
            fh.write("\n")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc
