"""On-disk artifacts: CSV tables, grid snapshots, the output lock and the checksum manifest."""
import csv
import hashlib
import os
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from .errors import ArtifactError, ConfigurationError
from .holonomic.grid import FieldGrid

MANIFEST = "manifest.sha256"
LOCK = ".h2corr.lock"
FAILED = "FAILED"


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v
                             for v in row])


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


@contextmanager
def output_lock(outdir):
    """Exclusive lock on an output directory for the lifetime of one command."""
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    lock = out / LOCK
    try:
        fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise ConfigurationError(f"{out} is locked by another run (remove {lock} if stale)") from None
    try:
        os.write(fd, str(os.getpid()).encode())
        os.close(fd)
        yield out
    finally:
        lock.unlink(missing_ok=True)


def mark_failed(outdir, message):
    Path(outdir, FAILED).write_text(message.rstrip() + "\n")


def clear_failed(outdir):
    Path(outdir, FAILED).unlink(missing_ok=True)


def save_grid(path, grid):
    np.savez(path, nodes=grid.nodes, rho_axis=grid.rho_axis, phi_count=grid.phi_count,
             symmetry=grid.symmetry, layer=np.array(grid.layer),
             history=np.array(grid.history, dtype=np.int64).reshape(-1, 3))


def load_grid(path):
    with np.load(path) as data:
        history = tuple(tuple(int(v) for v in row) for row in data["history"])
        return FieldGrid(data["nodes"], data["rho_axis"], int(data["phi_count"]),
                         int(data["symmetry"]), tuple(int(v) for v in data["layer"]), history)


def _digest(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def write_manifest(outdir):
    """sha256 of every regular file in outdir (recursively), lock and manifest excluded."""
    out = Path(outdir)
    files = sorted(p for p in out.rglob("*")
                   if p.is_file() and p.name not in (MANIFEST, LOCK))
    lines = [f"{_digest(p)}  {p.relative_to(out).as_posix()}" for p in files]
    (out / MANIFEST).write_text("\n".join(lines) + ("\n" if lines else ""))
    return len(lines)


def check_manifest(outdir):
    """Raise ArtifactError on any missing or modified file listed in the manifest."""
    out = Path(outdir)
    manifest = out / MANIFEST
    if not manifest.exists():
        raise ArtifactError(f"no {MANIFEST} in {out}; run `h2corr build` first")
    bad = []
    for line in manifest.read_text().splitlines():
        digest, name = line.split("  ", 1)
        target = out / name
        if not target.exists():
            bad.append(f"{name} (missing)")
        elif _digest(target) != digest:
            bad.append(f"{name} (checksum mismatch)")
    if bad:
        raise ArtifactError("artifact check failed: " + ", ".join(bad))
    return True
