"""Readers for solver run directories: the records CSV and field snapshots.

Pure file consumers; nothing here recomputes physics.  The expected layout is
the solver CLI's output directory:

    records.csv            per-level scalar diagnostics
    snapshot_t<time>.dat   plain-text field dumps
    mesh.csv               optional time-mesh dump
"""

from __future__ import annotations

import csv
import math
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

RECORDS_HEADER = "n,t,tau,E,E_alpha,mu_norm_sq,max_abs_phi,l6_norm,fp_iters,fp_residual"

_SNAP_RE = re.compile(r"snapshot_t(.+)\.dat$")


class ArtifactError(ValueError):
    """Missing or malformed run artifacts."""


@dataclass(frozen=True)
class RunArtifacts:
    """One run directory; validates the records schema on construction."""

    path: Path

    def __post_init__(self):
        object.__setattr__(self, "path", Path(self.path))
        if not self.path.is_dir():
            raise ArtifactError(f"not a run directory: {self.path}")

    @property
    def records_path(self) -> Path:
        return self.path / "records.csv"

    def records(self) -> dict[str, np.ndarray]:
        """Column arrays from records.csv; header must match the solver schema."""
        path = self.records_path
        if not path.exists():
            raise ArtifactError(f"missing records CSV: {path}")
        with open(path, newline="") as f:
            reader = csv.reader(f)
            try:
                header = next(reader)
            except StopIteration:
                raise ArtifactError(f"records CSV is empty: {path}") from None
            if ",".join(header) != RECORDS_HEADER:
                raise ArtifactError(
                    f"records CSV header {','.join(header)!r} does not match "
                    f"the solver schema {RECORDS_HEADER!r}"
                )
            rows = [[float(x) for x in row] for row in reader if row]
        if not rows:
            raise ArtifactError(f"records CSV has no data rows: {path}")
        data = np.asarray(rows, dtype=np.float64)
        return {name: data[:, i] for i, name in enumerate(header)}

    def snapshot_times(self) -> list[float]:
        out = []
        for p in self.path.iterdir():
            m = _SNAP_RE.match(p.name)
            if m:
                try:
                    out.append(float(m.group(1)))
                except ValueError:
                    continue
        return sorted(out)

    def snapshot_path(self, t: float) -> Path:
        for p in self.path.iterdir():
            m = _SNAP_RE.match(p.name)
            if m:
                try:
                    if math.isclose(float(m.group(1)), t, rel_tol=1e-9, abs_tol=1e-12):
                        return p
                except ValueError:
                    continue
        available = ", ".join(f"{x:g}" for x in self.snapshot_times()) or "none"
        raise ArtifactError(
            f"no snapshot for t = {t:g} in {self.path} (available: {available})"
        )

    def snapshot(self, t: float) -> tuple[float, float, np.ndarray]:
        """(actual time, domain edge L, field array indexed [x, y])."""
        return read_snapshot(self.snapshot_path(t))


def read_snapshot(path) -> tuple[float, float, np.ndarray]:
    with open(path) as f:
        header = f.readline()
        m = re.match(r"# t=(\S+) M=(\d+) L=(\S+)\s*$", header)
        if m is None:
            raise ArtifactError(f"malformed snapshot header in {path}: {header!r}")
        t, M, L = float(m.group(1)), int(m.group(2)), float(m.group(3))
        data = np.loadtxt(f, ndmin=2)
    if data.shape != (M, M):
        raise ArtifactError(f"snapshot body {data.shape} does not match M = {M} in {path}")
    return t, L, data.T  # file rows are fixed-y slices
