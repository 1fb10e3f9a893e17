"""Prime-range sweeps: CSV rows, checkpointing and the worker pool.

The checkpoint is a JSON-lines file with one object per finished prime.
The main process is the only writer; workers just return records.  A torn
last line (from a crash mid-write) is ignored on reload.
"""

from __future__ import annotations

import csv
import io
import json
import os
import sys
from dataclasses import dataclass, field, fields
from multiprocessing import Pool
from pathlib import Path

from .arith import sieve_primes
from .lderiv import compute_record
from .precision import Precision

CSV_FIELDS = [
    "q",
    "m_q",
    "argmin_j",
    "argmin_parity",
    "M_q",
    "ek",
    "m_q_normalized",
    "precision_used",
    "escalated",
]
FSYNC_EVERY = 100


@dataclass(frozen=True)
class MqCsvRow:
    q: int
    m_q: float
    argmin_j: int
    argmin_parity: str
    M_q: float
    ek: float
    m_q_normalized: float
    precision_used: str
    escalated: bool

    @classmethod
    def from_record(cls, rec) -> "MqCsvRow":
        return cls(
            q=rec.q,
            m_q=rec.m_q,
            argmin_j=rec.argmin_j,
            argmin_parity=rec.argmin_parity,
            M_q=rec.M_q,
            ek=rec.ek,
            m_q_normalized=rec.m_q_normalized,
            precision_used=rec.precision_used.value,
            escalated=rec.escalated,
        )

    def to_fields(self) -> list[str]:
        return [
            str(self.q),
            repr(self.m_q),
            str(self.argmin_j),
            self.argmin_parity,
            repr(self.M_q),
            repr(self.ek),
            repr(self.m_q_normalized),
            self.precision_used,
            "1" if self.escalated else "0",
        ]

    @classmethod
    def from_fields(cls, row: list[str]) -> "MqCsvRow":
        if len(row) != len(CSV_FIELDS):
            raise ValueError(f"expected {len(CSV_FIELDS)} fields, got {len(row)}")
        parity = row[3]
        if parity not in ("odd", "even"):
            raise ValueError(f"bad parity {parity!r}")
        if row[8] not in ("0", "1"):
            raise ValueError(f"bad escalated flag {row[8]!r}")
        Precision.parse(row[7])
        return cls(
            q=int(row[0]),
            m_q=float(row[1]),
            argmin_j=int(row[2]),
            argmin_parity=parity,
            M_q=float(row[4]),
            ek=float(row[5]),
            m_q_normalized=float(row[6]),
            precision_used=row[7],
            escalated=row[8] == "1",
        )

    def to_json(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


class CsvFormatError(ValueError):
    def __init__(self, problems: list[tuple[int, str]]):
        self.problems = problems
        super().__init__("; ".join(f"line {n}: {msg}" for n, msg in problems))


def emit_rows(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for r in rows:
        w.writerow(r.to_fields())
    return buf.getvalue()


def parse_rows(text: str) -> list[MqCsvRow]:
    """Rows of an emitted CSV; all malformed lines are collected before raising."""
    rows, problems = [], []
    reader = csv.reader(io.StringIO(text))
    for lineno, raw in enumerate(reader, start=1):
        if not raw:
            continue
        if lineno == 1 and raw[0] == "q":
            if raw != CSV_FIELDS:
                problems.append((lineno, "unexpected header"))
            continue
        try:
            rows.append(MqCsvRow.from_fields(raw))
        except ValueError as exc:
            problems.append((lineno, str(exc)))
    if problems:
        raise CsvFormatError(problems)
    return rows


def read_csv(path) -> list[MqCsvRow]:
    return parse_rows(Path(path).read_text())


def write_text_atomic(path, text: str) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w") as fh:
        fh.write(text)
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)


# ---------------------------------------------------------------------------
# Checkpoint


def load_checkpoint(path) -> dict[int, dict]:
    """``q -> entry`` from a JSON-lines checkpoint (later lines win)."""
    out: dict[int, dict] = {}
    path = Path(path)
    if not path.exists():
        return out
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            try:
                entry = json.loads(line)
                out[int(entry["q"])] = entry
            except (ValueError, KeyError, TypeError):
                continue  # torn trailing write
    return out


class CheckpointWriter:
    """Append-only writer; fsyncs every ``FSYNC_EVERY`` entries and on close."""

    def __init__(self, path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = open(self.path, "a")
        self._pending = 0
        # a torn last line would otherwise be glued to the next entry
        if self.path.stat().st_size:
            with open(self.path, "rb") as fh:
                fh.seek(-1, os.SEEK_END)
                if fh.read(1) != b"\n":
                    self._fh.write("\n")

    def write(self, entry: dict) -> None:
        self._fh.write(json.dumps(entry, sort_keys=True) + "\n")
        self._pending += 1
        if self._pending >= FSYNC_EVERY:
            self.sync()

    def sync(self) -> None:
        self._fh.flush()
        os.fsync(self._fh.fileno())
        self._pending = 0

    def close(self) -> None:
        self.sync()
        self._fh.close()


# ---------------------------------------------------------------------------
# Sweep


@dataclass
class SweepManifest:
    q_min: int
    q_max: int
    precision: Precision
    threads: int
    checkpoint: Path
    out: Path
    status: dict[int, str] = field(default_factory=dict)

    def counts(self) -> dict[str, int]:
        c: dict[str, int] = {}
        for s in self.status.values():
            c[s] = c.get(s, 0) + 1
        return c


def _work(args):
    q, precision = args
    try:
        rec = compute_record(q, precision)
    except Exception as exc:  # recorded, never aborts the sweep
        return {"q": q, "status": "failed", "error": f"{type(exc).__name__}: {exc}"}
    entry = {
        "q": q,
        "status": "escalated" if rec.escalated else "done",
        "row": MqCsvRow.from_record(rec).to_json(),
    }
    if rec.warnings:
        entry["warnings"] = rec.warnings
    return entry


def odd_primes_between(q_min: int, q_max: int) -> list[int]:
    ps = sieve_primes(q_max)
    return [int(p) for p in ps if p >= max(3, q_min)]


def failures_path(out) -> Path:
    out = Path(out)
    return out.with_name(out.name + ".failures.csv")


def run_sweep(
    q_min: int,
    q_max: int,
    out,
    checkpoint=None,
    threads: int = 1,
    precision: Precision | str = Precision.EXTENDED64,
    progress=None,
) -> SweepManifest:
    """Compute every odd prime in ``[q_min, q_max]`` and write the CSV.

    Primes already ``done``/``escalated`` in the checkpoint are skipped;
    ``failed`` ones are retried.  Rows that still fail go to
    ``<out>.failures.csv``.  Output is sorted by ``q`` and independent of
    ``threads``.
    """
    if q_min < 3 or q_min > q_max:
        raise ValueError("need 3 <= q_min <= q_max")
    precision = Precision.parse(precision)
    out = Path(out)
    checkpoint = Path(checkpoint) if checkpoint else out.with_name(out.name + ".ckpt")
    manifest = SweepManifest(q_min, q_max, precision, threads, checkpoint, out)
    primes = odd_primes_between(q_min, q_max)
    entries = load_checkpoint(checkpoint)
    for q in primes:
        e = entries.get(q)
        manifest.status[q] = e["status"] if e and e["status"] in ("done", "escalated") else "pending"
    todo = [(q, precision.value) for q in primes if manifest.status[q] == "pending"]

    writer = CheckpointWriter(checkpoint)
    try:
        if threads > 1 and len(todo) > 1:
            with Pool(threads) as pool:
                results = pool.imap_unordered(_work, todo, chunksize=4)
                for i, entry in enumerate(results, 1):
                    _record(entry, entries, manifest, writer, progress, i, len(todo))
        else:
            for i, job in enumerate(todo, 1):
                _record(_work(job), entries, manifest, writer, progress, i, len(todo))
    finally:
        writer.close()

    rows = [MqCsvRow(**entries[q]["row"]) for q in primes if manifest.status[q] in ("done", "escalated")]
    out.parent.mkdir(parents=True, exist_ok=True)
    write_text_atomic(out, emit_rows(rows))
    failed = [(q, entries[q].get("error", "")) for q in primes if manifest.status[q] == "failed"]
    fpath = failures_path(out)
    if failed:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["q", "error"])
        w.writerows(failed)
        write_text_atomic(fpath, buf.getvalue())
    elif fpath.exists():
        fpath.unlink()
    return manifest


def _record(entry, entries, manifest, writer, progress, i, total):
    q = entry["q"]
    entries[q] = entry
    manifest.status[q] = entry["status"]
    writer.write(entry)
    for w in entry.get("warnings", []):
        print(f"warning: q={q}: {w}", file=sys.stderr)
    if progress:
        progress(i, total, q)
