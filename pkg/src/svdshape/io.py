"""Dataset ingestion and report serialization.

Landmark CSV schema (one value cell per row):

    specimen_id,group,landmark_index,dim_index,value

with landmark_index 1..N and dim_index 1..K; every (landmark, dim) cell
must be present exactly once per specimen and all specimens must share
(N, K).  The whitening matrix is supplied as a plain K x K numeric CSV.
Reports are JSON with sorted keys so identical runs are byte-identical;
volatile metadata (timestamps) lives in a separate ``meta`` block.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from datetime import datetime, timezone

import numpy as np

from .errors import ParseError
from .shape import LandmarkMatrix

__all__ = [
    "DatasetFile",
    "parse_dataset",
    "parse_theta",
    "write_report",
    "report_bytes",
    "write_synthetic_dataset",
]

SCHEMA_VERSION = 1

_HEADER = ["specimen_id", "group", "landmark_index", "dim_index", "value"]


@dataclass(frozen=True)
class DatasetFile:
    """Parsed landmark dataset: specimen order preserved from first
    appearance; all figures share (N, K)."""

    path: str
    specimens: dict  # id -> LandmarkMatrix
    groups: dict  # id -> group label
    dims: tuple

    def __len__(self) -> int:
        return len(self.specimens)

    @property
    def group_names(self) -> list:
        seen = []
        for g in self.groups.values():
            if g not in seen:
                seen.append(g)
        return seen


def parse_dataset(path) -> DatasetFile:
    """Parse and validate a landmark CSV; raises ParseError carrying the
    offending line number."""
    path = str(path)
    cells: dict = {}
    groups: dict = {}
    order: list = []
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise ParseError(f"cannot read dataset: {exc}", path=path) from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty dataset file", path=path, line=1) from None
        if [h.strip() for h in header] != _HEADER:
            raise ParseError(
                f"bad header {header!r}, expected {','.join(_HEADER)}", path=path, line=1
            )
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 5:
                raise ParseError(f"expected 5 columns, got {len(row)}", path=path, line=lineno)
            sid, group, li, di, val = (c.strip() for c in row)
            try:
                li = int(li)
                di = int(di)
            except ValueError:
                raise ParseError(
                    f"landmark_index/dim_index must be integers, got {row[2]!r}, {row[3]!r}",
                    path=path,
                    line=lineno,
                ) from None
            try:
                val = float(val)
            except ValueError:
                raise ParseError(f"non-numeric value {row[4]!r}", path=path, line=lineno) from None
            if not math.isfinite(val):
                raise ParseError(f"non-finite value {row[4]!r}", path=path, line=lineno)
            if li < 1 or di < 1:
                raise ParseError(
                    f"indices are 1-based, got landmark {li}, dim {di}", path=path, line=lineno
                )
            if sid not in cells:
                cells[sid] = {}
                order.append(sid)
                groups[sid] = group
            elif groups[sid] != group:
                raise ParseError(
                    f"specimen {sid!r} listed under two groups "
                    f"({groups[sid]!r} and {group!r})",
                    path=path,
                    line=lineno,
                )
            if (li, di) in cells[sid]:
                raise ParseError(
                    f"duplicate cell (landmark {li}, dim {di}) for specimen {sid!r}",
                    path=path,
                    line=lineno,
                )
            cells[sid][(li, di)] = val
    if not cells:
        raise ParseError("dataset has no data rows", path=path)
    dims = None
    specimens = {}
    for sid in order:
        grid = cells[sid]
        N = max(li for li, _ in grid)
        K = max(di for _, di in grid)
        missing = [
            (li, di) for li in range(1, N + 1) for di in range(1, K + 1) if (li, di) not in grid
        ]
        if missing:
            raise ParseError(
                f"specimen {sid!r} is missing cell (landmark {missing[0][0]}, dim {missing[0][1]})",
                path=path,
            )
        if dims is None:
            dims = (N, K)
        elif dims != (N, K):
            raise ParseError(
                f"specimen {sid!r} has dims {(N, K)} but earlier specimens have {dims}",
                path=path,
            )
        data = np.empty((N, K))
        for (li, di), v in grid.items():
            data[li - 1, di - 1] = v
        try:
            specimens[sid] = LandmarkMatrix(data)
        except Exception as exc:
            raise ParseError(f"specimen {sid!r}: {exc}", path=path) from exc
    return DatasetFile(path=path, specimens=specimens, groups=groups, dims=dims)


def parse_theta(path, K: int) -> np.ndarray:
    """Read a K x K whitening matrix from a numeric CSV."""
    path = str(path)
    rows = []
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise ParseError(f"cannot read theta file: {exc}", path=path) from exc
    with fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                rows.append([float(c) for c in row])
            except ValueError:
                raise ParseError("non-numeric entry in theta matrix", path=path, line=lineno) from None
    theta = np.array(rows)
    if theta.shape != (K, K):
        raise ParseError(f"theta must be {K}x{K}, got {theta.shape}", path=path)
    return theta


# ---------------------------------------------------------------------------
# reports


def report_bytes(payload: dict, meta: dict | None = None) -> bytes:
    """Serialize a report deterministically; volatile fields go under
    ``meta`` and everything else is sorted and stable."""
    doc = dict(payload)
    doc["schema_version"] = SCHEMA_VERSION
    if meta:
        doc["meta"] = meta
    return (json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n").encode()


def write_report(payload: dict, path, timestamp: bool = True) -> None:
    meta = {"created": datetime.now(timezone.utc).isoformat()} if timestamp else None
    with open(path, "wb") as fh:
        fh.write(report_bytes(payload, meta))


def write_synthetic_dataset(
    path,
    mu,
    sigma2: float,
    N: int,
    K: int,
    sizes: dict,
    seed: int = 0,
    generator=None,
) -> None:
    """Write a synthetic landmark CSV with the given per-group sizes.

    Figures are mean landmarks (pseudo-inverse lift of mu through the
    Helmert reduction) plus elliptical noise; handy as a stand-in for
    classical datasets that cannot be redistributed.
    """
    from .densities import IsotropicModel, sample_isotropic_figure
    from .generators import KotzParams
    from .shape import helmert_submatrix

    gen = generator or KotzParams.gaussian(K * (N - 1))
    model = IsotropicModel(mu=np.asarray(mu, dtype=float), sigma2=sigma2, gen=gen, N=N, K=K)
    L = helmert_submatrix(N)
    rng = np.random.default_rng(seed)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_HEADER)
        for group, size in sizes.items():
            Y = sample_isotropic_figure(model, size=size, rng=rng)
            for i in range(size):
                X = L.T @ Y[i]  # lift back to N landmarks (centered representative)
                sid = f"{group}-{i + 1:03d}"
                for li in range(N):
                    for di in range(K):
                        writer.writerow([sid, group, li + 1, di + 1, repr(float(X[li, di]))])
