"""Dataset CSV + metadata sidecar, state files and result JSON."""

from __future__ import annotations

import datetime
import json
from pathlib import Path

import numpy as np

from .gaussian import TwoModeGaussianState
from .measurement import Dataset, HomodyneConfig, QuadratureRecord
from .optics import parse_token

CSV_HEADER = "setting,value"
META_KEYS = {"samples_per_quadrature", "efficiency", "seed", "schedule", "provenance"}


def dataset_paths(stem) -> tuple[Path, Path]:
    stem = Path(stem)
    if stem.suffix == ".csv":
        stem = stem.with_suffix("")
    return stem.with_name(stem.name + ".csv"), stem.with_name(stem.name + ".meta.json")


def write_dataset(dataset: Dataset, stem) -> tuple[Path, Path]:
    """Write ``<stem>.csv`` and ``<stem>.meta.json``.

    Sample values are written with ``repr`` so they read back bit-exactly.
    """
    csv_path, meta_path = dataset_paths(stem)
    with open(csv_path, "w", newline="\n") as fh:
        fh.write(CSV_HEADER + "\n")
        for rec in dataset.records:
            tok = rec.token
            fh.write("".join(f"{tok},{x!r}\n" for x in rec.samples.tolist()))
    provenance = dict(dataset.provenance)
    provenance["created_utc"] = datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")
    meta = {
        "samples_per_quadrature": dataset.config.samples_per_quadrature,
        "efficiency": dataset.config.efficiency,
        "seed": dataset.config.seed,
        "schedule": dataset.tokens,
        "provenance": provenance,
    }
    meta_path.write_text(json.dumps(meta, indent=2) + "\n")
    return csv_path, meta_path


def read_csv_records(csv_path) -> list[QuadratureRecord]:
    """Parse a ``setting,value`` CSV into records, in first-appearance order."""
    groups: dict[str, list[float]] = {}
    with open(csv_path) as fh:
        header = fh.readline().strip()
        if header != CSV_HEADER:
            raise ValueError(f"{csv_path}: expected header {CSV_HEADER!r}, got {header!r}")
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            try:
                tok, val = line.split(",")
                groups.setdefault(tok.strip(), []).append(float(val))
            except ValueError:
                raise ValueError(f"{csv_path}:{lineno}: malformed row {line!r}") from None
    records = []
    for tok, values in groups.items():
        mode, phase = parse_token(tok)
        records.append(QuadratureRecord(mode, phase, np.array(values)))
    return records


def read_dataset(csv_path, meta_path=None, efficiency: float | None = None) -> Dataset:
    """Load a dataset; the sidecar is optional.

    Without a sidecar the data is treated as external: efficiency defaults to
    1 (or ``efficiency``) and the sample count is taken from the file.
    """
    csv_path = Path(csv_path)
    records = read_csv_records(csv_path)
    if not records:
        raise ValueError(f"{csv_path}: no samples")
    if meta_path is None:
        candidate = dataset_paths(csv_path)[1]
        meta_path = candidate if candidate.exists() else None
    counts = [r.samples.size for r in records]
    if meta_path is None:
        config = HomodyneConfig(min(counts), 1.0 if efficiency is None else efficiency, 0)
        return Dataset(tuple(records), config, {"kind": "external", "source": csv_path.name})

    meta = json.loads(Path(meta_path).read_text())
    unknown = set(meta) - META_KEYS
    if unknown:
        raise ValueError(f"{meta_path}: unknown metadata keys {sorted(unknown)}")
    config = HomodyneConfig(
        int(meta["samples_per_quadrature"]),
        float(meta["efficiency"] if efficiency is None else efficiency),
        int(meta.get("seed", 0)),
    )
    tokens = [r.token for r in records]
    if "schedule" in meta and list(meta["schedule"]) != tokens:
        raise ValueError(f"{csv_path}: settings {tokens} do not match the metadata schedule {meta['schedule']}")
    provenance = {k: v for k, v in meta.get("provenance", {}).items() if k != "created_utc"}
    return Dataset(tuple(records), config, provenance or {"kind": "external"})


def read_state(path) -> TwoModeGaussianState:
    return TwoModeGaussianState.from_dict(json.loads(Path(path).read_text()))


def read_covariance(path) -> np.ndarray:
    """Covariance matrix from a state file (``cov``) or a result file (``sigma``)."""
    data = json.loads(Path(path).read_text())
    for key in ("cov", "sigma"):
        if key in data:
            cov = np.asarray(data[key], dtype=float)
            if cov.shape != (4, 4):
                raise ValueError(f"{path}: {key!r} must be a 4x4 matrix")
            return cov
    raise ValueError(f"{path}: expected a 'cov' or 'sigma' entry")


def write_json(obj: dict, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(obj, indent=2) + "\n")
    return path
