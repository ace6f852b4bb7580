"""Append-only run logs and atomic checkpoints.

A run log is line-delimited JSON: one header line followed by one line per
committed individual (plus occasional ``void`` lines for failed
tournaments). Because every record is a single line, a log cut off at any
point still parses up to its last complete record.
"""

from __future__ import annotations

import json
import os
import tempfile
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from . import __version__
from .config import RUNTIME_FIELDS, RunConfig
from .population import Individual

LOG_FORMAT = 1
CHECKPOINT_FORMAT = 1


class LogError(ValueError):
    """A run log is unreadable or internally inconsistent."""


class CheckpointMismatch(RuntimeError):
    """A checkpoint was written by a run with a different configuration."""


def dumps(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def make_header(cfg: RunConfig) -> dict[str, Any]:
    core = {k: v for k, v in cfg.to_dict().items() if k not in RUNTIME_FIELDS}
    return {
        "type": "header",
        "format": LOG_FORMAT,
        "engine_version": __version__,
        "config_digest": cfg.digest(),
        "run_seed": cfg.run_seed,
        "env": cfg.env,
        "population_size": cfg.population_size,
        "config": core,
    }


@dataclass
class RunLog:
    header: dict[str, Any]
    individuals: list[Individual] = field(default_factory=list)
    voids: list[dict[str, Any]] = field(default_factory=list)
    truncated_tail: bool = False

    @property
    def population_size(self) -> int:
        return int(self.header["population_size"])

    @property
    def env(self) -> str:
        return self.header["env"]

    @property
    def config(self) -> RunConfig:
        return RunConfig.from_dict(self.header["config"])

    @property
    def run_id(self) -> str:
        return f"{self.env.lower()}-seed{self.header['run_seed']}-{self.header['config_digest'][:8]}"

    def __len__(self) -> int:
        return len(self.individuals)

    def by_id(self) -> dict[int, Individual]:
        return {ind.id: ind for ind in self.individuals}

    def founders(self) -> list[Individual]:
        return [ind for ind in self.individuals if ind.parent_id is None]

    def alive_at(self, n: int) -> list[Individual]:
        """Alive set right after the first ``n`` commits."""
        P = self.population_size
        return self.individuals[max(0, n - P):n]

    def final_alive(self) -> list[Individual]:
        return self.alive_at(len(self.individuals))


def read_log(path) -> RunLog:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise LogError(f"cannot read {path}: {exc.strerror}") from exc
    lines = raw.split(b"\n")
    # a crash can leave a partial final line without its newline
    truncated = bool(lines and lines[-1])
    complete = lines[:-1]
    if not complete:
        raise LogError(f"{path} has no complete header line")
    try:
        header = json.loads(complete[0])
    except json.JSONDecodeError as exc:
        raise LogError(f"{path}: header is not JSON ({exc.msg})") from exc
    if not isinstance(header, dict) or header.get("type") != "header":
        raise LogError(f"{path}: first line is not a header record")
    log = RunLog(header, truncated_tail=truncated)
    for lineno, line in enumerate(complete[1:], start=2):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise LogError(f"{path}:{lineno}: malformed record ({exc.msg})") from exc
        kind = rec.get("type")
        if kind == "individual":
            try:
                ind = Individual.from_record(rec)
            except (KeyError, TypeError, ValueError) as exc:
                raise LogError(f"{path}:{lineno}: bad individual record ({exc})") from exc
            if ind.birth_index != len(log.individuals):
                raise LogError(
                    f"{path}:{lineno}: birth_index {ind.birth_index} out of order "
                    f"(expected {len(log.individuals)})"
                )
            log.individuals.append(ind)
        elif kind == "void":
            log.voids.append(rec)
        else:
            raise LogError(f"{path}:{lineno}: unknown record type {kind!r}")
    return log


class RunLogWriter:
    """Serialized sink for log lines.

    ``flush`` is ``record`` (flush every line), ``fsync`` (flush and fsync
    every line) or ``buffered`` (flush only at ``sync``). Individuals must
    arrive in birth order.
    """

    def __init__(self, path, header: dict[str, Any], flush: str = "record", resume_offset: int | None = None):
        self.path = Path(path)
        self.flush_policy = flush
        self.lock = threading.RLock()
        self.path.parent.mkdir(parents=True, exist_ok=True)
        if resume_offset is None:
            self._fh = self.path.open("wb")
            self.next_birth = 0
            self._write_line(dumps(header))
        else:
            size = self.path.stat().st_size
            if size < resume_offset:
                raise LogError(f"{self.path} is shorter than the checkpoint expects")
            with self.path.open("rb") as fh:
                existing = fh.readline()
            if json.loads(existing).get("config_digest") != header["config_digest"]:
                raise CheckpointMismatch("run log header does not match the configuration")
            os.truncate(self.path, resume_offset)
            self._fh = self.path.open("ab")
            self.next_birth = None

    @property
    def offset(self) -> int:
        with self.lock:
            self._fh.flush()
            return self._fh.tell()

    def _write_line(self, text: str) -> None:
        self._fh.write(text.encode() + b"\n")
        if self.flush_policy in ("record", "fsync"):
            self._fh.flush()
        if self.flush_policy == "fsync":
            os.fsync(self._fh.fileno())

    def write_individual(self, ind: Individual) -> None:
        with self.lock:
            if self.next_birth is not None and ind.birth_index != self.next_birth:
                raise LogError(f"record {ind.birth_index} written out of order (expected {self.next_birth})")
            self._write_line(dumps(ind.to_record()))
            self.next_birth = ind.birth_index + 1

    def write_void(self, record: dict[str, Any]) -> None:
        with self.lock:
            self._write_line(dumps({"type": "void", **record}))

    def sync(self) -> None:
        with self.lock:
            self._fh.flush()
            os.fsync(self._fh.fileno())

    def close(self) -> None:
        with self.lock:
            if not self._fh.closed:
                self._fh.flush()
                self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


@dataclass
class Checkpoint:
    config_digest: str
    config: dict[str, Any]
    archive: list[Individual]
    next_ticket: int
    log_offset: int | None
    void_count: int = 0

    @property
    def alive_ids(self) -> list[int]:
        P = self.config["population_size"]
        return [ind.id for ind in self.archive[-P:]]


def save_checkpoint(path, ckpt: Checkpoint) -> Path:
    """Write-temp-then-rename so a reader never sees a partial checkpoint."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    body = {
        "type": "checkpoint",
        "format": CHECKPOINT_FORMAT,
        "config_digest": ckpt.config_digest,
        "config": ckpt.config,
        "next_ticket": ckpt.next_ticket,
        "log_offset": ckpt.log_offset,
        "void_count": ckpt.void_count,
        "alive_ids": ckpt.alive_ids,
        "archive": [ind.to_record() for ind in ckpt.archive],
    }
    fd, tmp = tempfile.mkstemp(prefix=path.name + ".", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(dumps(body))
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def load_checkpoint(path, cfg: RunConfig | None = None, force: bool = False) -> Checkpoint:
    try:
        body = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise LogError(f"unreadable checkpoint {path}: {exc}") from exc
    if body.get("type") != "checkpoint":
        raise LogError(f"{path} is not a checkpoint")
    if cfg is not None and body["config_digest"] != cfg.digest() and not force:
        raise CheckpointMismatch(
            f"checkpoint digest {body['config_digest'][:12]} does not match config digest {cfg.digest()[:12]}"
        )
    archive = [Individual.from_record(r) for r in body["archive"]]
    if [ind.birth_index for ind in archive] != list(range(len(archive))):
        raise LogError(f"{path}: archive birth indices are not contiguous")
    return Checkpoint(
        body["config_digest"],
        body["config"],
        archive,
        int(body["next_ticket"]),
        body["log_offset"],
        int(body.get("void_count", 0)),
    )
