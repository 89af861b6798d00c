"""CSV/JSON artifacts, run manifests and TOML plan loading."""
from __future__ import annotations

import csv
import json
import math
import platform
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone
from importlib import resources
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import jsonschema
import numpy as np
import tomli

MANIFEST_SCHEMA_VERSION = 1


def tool_version() -> str:
    try:
        return version("artifact")
    except PackageNotFoundError:
        from . import __version__

        return __version__


def _cell(v: Any) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return "" if math.isnan(v) else repr(v)
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    """RFC-4180 CSV: header row, CRLF line ends, shortest round-trip floats, NaN as empty."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(header)
        for row in rows:
            if len(row) != len(header):
                raise ValueError(f"row has {len(row)} cells, header has {len(header)}")
            w.writerow([_cell(v) for v in row])
    return path


def read_csv(path: str | Path) -> list[dict[str, str]]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, Mapping):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return None if math.isnan(f) or math.isinf(f) else f
    return obj


def write_json(path: str | Path, obj: Any) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def write_jsonl(path: str | Path, records: Iterable[Mapping]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            fh.write(json.dumps(_jsonable(r), sort_keys=True) + "\n")
    return path


# ---------------------------------------------------------------- plans


def deep_merge(base: Mapping, override: Mapping) -> dict:
    out = dict(base)
    for k, v in override.items():
        if isinstance(v, Mapping) and isinstance(out.get(k), Mapping):
            out[k] = deep_merge(out[k], v)
        else:
            out[k] = v
    return out


def load_config(path: str | Path) -> dict:
    """Plan dictionary from a TOML file, or from the ``plan`` key of a JSON manifest."""
    path = Path(path)
    if path.suffix == ".json":
        doc = json.loads(path.read_text(encoding="utf-8"))
        if "plan" not in doc:
            raise ValueError(f"{path}: JSON config must be a run manifest with a 'plan' key")
        return doc["plan"]
    with open(path, "rb") as fh:
        doc = tomli.load(fh)
    return doc.get("plan", doc)


# ---------------------------------------------------------------- manifests


def manifest_schema() -> dict:
    text = resources.files("chainstrength").joinpath("manifest.schema.json").read_text(encoding="utf-8")
    return json.loads(text)


def validate_manifest(doc: Mapping) -> None:
    jsonschema.validate(_jsonable(doc), manifest_schema())


def now_utc() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


@dataclass
class RunManifest:
    """Provenance record written next to every output set.

    ``plan`` plus ``command`` are enough to rerun: ``chainstrength <command>
    --config manifest.json`` reproduces the tables byte for byte.
    """

    command: str
    plan: dict
    master_seed: int
    started: str = field(default_factory=now_utc)
    finished: str | None = None
    status: str = "running"
    outputs: list[str] = field(default_factory=list)
    notes: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "schema_version": MANIFEST_SCHEMA_VERSION,
            "tool": "chainstrength",
            "tool_version": tool_version(),
            "python": sys.version.split()[0],
            "platform": platform.platform(),
            "numpy": np.__version__,
            "command": self.command,
            "plan": _jsonable(self.plan),
            "master_seed": int(self.master_seed),
            "started": self.started,
            "finished": self.finished,
            "status": self.status,
            "outputs": list(self.outputs),
            "notes": _jsonable(self.notes),
        }

    def finish(self, status: str = "ok") -> None:
        self.finished = now_utc()
        self.status = status

    def write(self, path: str | Path) -> Path:
        doc = self.to_dict()
        validate_manifest(doc)
        return write_json(path, doc)
