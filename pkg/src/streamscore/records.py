"""Per-transfer flow records and their JSONL serialization.

One record per spawned client, whether the transfer was measured on a real
network or produced by the simulator; the analysis pipeline consumes both
through this schema. A log file is a single header line ``{"run": {...}}``
followed by one record object per line.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable


class LogFormatError(ValueError):
    """A JSONL transfer log that does not match the record schema."""


@dataclass(frozen=True)
class FlowRecord:
    """One client's transfer: spawn/completion on a shared monotonic clock."""

    client_id: int
    spawn_s: float
    complete_s: float
    fct_s: float
    bytes: int
    flows: int
    status: str = "ok"
    error: str | None = None

    def __post_init__(self) -> None:
        if self.complete_s < self.spawn_s:
            raise ValueError(
                f"complete_s {self.complete_s} precedes spawn_s {self.spawn_s}"
            )
        if self.status not in ("ok", "error"):
            raise ValueError(f"status must be 'ok' or 'error', got {self.status!r}")

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def to_json_obj(self) -> dict:
        obj = {
            "client_id": self.client_id,
            "spawn_s": self.spawn_s,
            "complete_s": self.complete_s,
            "fct_s": self.fct_s,
            "bytes": self.bytes,
            "flows": self.flows,
            "status": self.status,
        }
        if self.error is not None:
            obj["error"] = self.error
        return obj

    @classmethod
    def from_json_obj(cls, obj: dict) -> FlowRecord:
        try:
            return cls(
                client_id=int(obj["client_id"]),
                spawn_s=float(obj["spawn_s"]),
                complete_s=float(obj["complete_s"]),
                fct_s=float(obj["fct_s"]),
                bytes=int(obj["bytes"]),
                flows=int(obj["flows"]),
                status=str(obj.get("status", "ok")),
                error=obj.get("error"),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise LogFormatError(f"bad flow record {obj!r}: {exc}") from exc


def write_jsonl(
    target: Path | str | IO[str],
    records: Iterable[FlowRecord],
    run_meta: dict | None = None,
) -> None:
    """Write a header line followed by one record per line."""

    def _write(fh: IO[str]) -> None:
        fh.write(json.dumps({"run": run_meta or {}}) + "\n")
        for record in records:
            fh.write(json.dumps(record.to_json_obj()) + "\n")

    if isinstance(target, (str, Path)):
        with open(target, "w", encoding="utf-8") as fh:
            _write(fh)
    else:
        _write(target)


def read_jsonl(source: Path | str | IO[str]) -> tuple[dict, list[FlowRecord]]:
    """Parse a transfer log into its run metadata and records.

    The header is optional so that bare record streams still load; malformed
    lines raise LogFormatError rather than being skipped.
    """

    def _read(fh: IO[str]) -> tuple[dict, list[FlowRecord]]:
        meta: dict = {}
        records: list[FlowRecord] = []
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise LogFormatError(f"line {lineno}: invalid JSON: {exc}") from exc
            if not isinstance(obj, dict):
                raise LogFormatError(f"line {lineno}: expected an object")
            if "run" in obj and "client_id" not in obj:
                meta = obj["run"]
                continue
            records.append(FlowRecord.from_json_obj(obj))
        return meta, records

    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as fh:
            return _read(fh)
    return _read(source)
