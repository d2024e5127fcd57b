from __future__ import annotations
import csv, hashlib, json, platform, time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import MalformedInput
from .grid import Grid2D

PARQUET_SUFFIXES = (".parquet", ".pq")


def write_parquet(rows: list[dict], out_path: str) -> None:
    import pyarrow as pa, pyarrow.parquet as pq
    if not rows:
        pq.write_table(pa.table({}), out_path); return
    cols = sorted({k for r in rows for k in r.keys()})
    arrays = {c: [r.get(c, None) for r in rows] for c in cols}
    table = pa.table(arrays)
    pq.write_table(table, out_path, compression="zstd")


def write_rows(rows: list[dict], columns: Sequence[str], out_path: str) -> None:
    """CSV with a fixed column order, or Parquet when the suffix asks for it."""
    if out_path.lower().endswith(PARQUET_SUFFIXES):
        write_parquet(rows, out_path)
        return
    with open(out_path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(list(columns))
        for r in rows:
            w.writerow([r.get(c) for c in columns])


def _read_csv(path: str, required: Sequence[str]) -> list[dict]:
    try:
        with open(path, "r", newline="") as f:
            reader = csv.DictReader(f)
            missing = [c for c in required if c not in (reader.fieldnames or [])]
            if missing:
                raise MalformedInput(f"{path}: missing columns {missing}")
            return list(reader)
    except OSError as e:
        raise MalformedInput(f"cannot read {path}: {e}")


# --- intervals: lo_num,lo_den,hi_num,hi_den ---

INTERVAL_COLUMNS = ("lo_num", "lo_den", "hi_num", "hi_den")


def write_intervals_csv(pairs: Iterable[tuple[Fraction, Fraction]], out_path: str) -> int:
    n = 0
    with open(out_path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(INTERVAL_COLUMNS)
        for lo, hi in pairs:
            w.writerow([lo.numerator, lo.denominator, hi.numerator, hi.denominator])
            n += 1
    return n


def read_intervals_csv(path: str) -> list[tuple[Fraction, Fraction]]:
    out = []
    for row in _read_csv(path, INTERVAL_COLUMNS):
        try:
            out.append((Fraction(int(row["lo_num"]), int(row["lo_den"])),
                        Fraction(int(row["hi_num"]), int(row["hi_den"]))))
        except (ValueError, ZeroDivisionError) as e:
            raise MalformedInput(f"{path}: bad interval row {row}: {e}")
    return out


# --- points: x,y ---

def write_points_csv(points: np.ndarray, out_path: str) -> None:
    with open(out_path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["x", "y"])
        for x, y in np.asarray(points, dtype=float):
            w.writerow([repr(float(x)), repr(float(y))])


def read_points_csv(path: str) -> np.ndarray:
    rows = _read_csv(path, ("x", "y"))
    try:
        return np.array([[float(r["x"]), float(r["y"])] for r in rows], dtype=float).reshape(-1, 2)
    except ValueError as e:
        raise MalformedInput(f"{path}: bad point row: {e}")


# --- histograms: bin,count ---

def write_histogram_csv(counts: Sequence[float], out_path: str) -> None:
    with open(out_path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["bin", "count"])
        for i, c in enumerate(counts):
            w.writerow([i, c])


def read_histogram_csv(path: str, bins: int = 256) -> np.ndarray:
    counts = np.zeros(bins, dtype=float)
    for row in _read_csv(path, ("bin", "count")):
        try:
            i, c = int(row["bin"]), float(row["count"])
        except ValueError as e:
            raise MalformedInput(f"{path}: bad histogram row {row}: {e}")
        if not 0 <= i < bins or c < 0:
            raise MalformedInput(f"{path}: bin {i} / count {c} out of range")
        counts[i] += c
    return counts


# --- binary PGM (P5), 255 = occupied ---

def write_pgm(grid: Grid2D, out_path: str) -> None:
    data = np.where(grid.cells, 255, 0).astype(np.uint8)
    h, w = data.shape
    with open(out_path, "wb") as f:
        f.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        f.write(data.tobytes())


def _pgm_header(blob: bytes) -> tuple[list[bytes], int]:
    tokens: list[bytes] = []
    i = 0
    while len(tokens) < 4:
        if i >= len(blob):
            raise MalformedInput("truncated PGM header")
        c = blob[i:i + 1]
        if c == b"#":
            while i < len(blob) and blob[i:i + 1] not in (b"\n", b"\r"):
                i += 1
        elif c.isspace():
            i += 1
        else:
            j = i
            while j < len(blob) and not blob[j:j + 1].isspace() and blob[j:j + 1] != b"#":
                j += 1
            tokens.append(blob[i:j])
            i = j
    # exactly one whitespace byte separates maxval from the raster
    return tokens, i + 1


def read_pgm(path: str, base: int = 2) -> Grid2D:
    try:
        blob = open(path, "rb").read()
    except OSError as e:
        raise MalformedInput(f"cannot read {path}: {e}")
    tokens, start = _pgm_header(blob)
    if tokens[0] != b"P5":
        raise MalformedInput(f"{path}: format {tokens[0]!r} not supported (need P5)")
    try:
        w, h, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    except ValueError:
        raise MalformedInput(f"{path}: bad PGM header {tokens}")
    if not 0 < maxval < 256:
        raise MalformedInput(f"{path}: maxval {maxval} not supported")
    if w != h:
        raise MalformedInput(f"{path}: grid must be square, got {w}x{h}")
    raw = blob[start:start + w * h]
    if len(raw) != w * h:
        raise MalformedInput(f"{path}: expected {w * h} raster bytes, got {len(raw)}")
    data = np.frombuffer(raw, dtype=np.uint8).reshape(h, w)
    return Grid2D(data > maxval // 2, base)


class RunLog:
    """Newline-delimited JSON trace. Records carry ts, role, op and data.

    A RunLog with no file is a no-op, so callers can pass it unconditionally.
    """

    def __init__(self, log_file=None, role: str = "fractalbench"):
        self.log_file = log_file
        self.role = role

    @classmethod
    def open(cls, path: Optional[str], role: str = "fractalbench") -> "RunLog":
        return cls(open(path, "a") if path else None, role)

    def child(self, role: str) -> "RunLog":
        return RunLog(self.log_file, role)

    def log(self, op: str, data=None, **extra) -> None:
        if self.log_file is None:
            return
        try:
            rec = {"ts": time.time(), "role": self.role, "op": op, "data": data}
            if extra:
                rec.update(extra)
            self.log_file.write(json.dumps(rec, separators=(",", ":"), default=str) + "\n")
            try:
                self.log_file.flush()
            except Exception:
                pass
        except Exception:
            # Never let logging break a computation
            pass

    def close(self) -> None:
        if self.log_file is None:
            return
        self.log("close")
        try:
            self.log_file.close()
        except Exception:
            pass
        self.log_file = None


def sha256_file(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _versions() -> dict:
    out = {"python": platform.python_version()}
    for mod in ("numpy", "scipy", "yaml", "pyarrow"):
        try:
            out[mod] = getattr(__import__(mod), "__version__", "unknown")
        except Exception:
            out[mod] = None
    return out


@dataclass
class RunManifest:
    argv: list[str]
    seed: int
    versions: dict = field(default_factory=_versions)
    outputs: dict = field(default_factory=dict)

    def add_output(self, path: str) -> None:
        self.outputs[path] = sha256_file(path)

    def to_dict(self) -> dict:
        return {"format": "fractalbench/manifest", "version": 1, "argv": self.argv,
                "seed": self.seed, "versions": self.versions, "outputs": self.outputs}

    def write(self, out_path: str) -> None:
        with open(out_path, "w", encoding="utf-8") as f:
            json.dump(self.to_dict(), f, indent=2, sort_keys=True)
            f.write("\n")


def manifest_path(out_path: str) -> str:
    return out_path + ".manifest.json"
