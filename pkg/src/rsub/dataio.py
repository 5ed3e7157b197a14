"""CSV point ingestion, model documents and distance tables."""

import csv
import json
import math
from dataclasses import asdict, dataclass, fields

import numpy as np

from .subspace import SubspaceModel

FORMAT = "rsub-model/1"


class DataError(ValueError):
    """Input data could not be read or is unusable."""


@dataclass
class RunConfig:
    subcommand: str = "fit"
    k: int = 1
    offset_kind: str = "geometric_median"
    offset_value: list | None = None
    tol: float = 1e-12
    max_iters: int = 10_000
    restarts: int = 1
    seed: int = 0
    anchor_eps: float = 1e-9
    input_path: str | None = None
    output_path: str | None = None
    bins: int = 50
    method: str = "robust"
    threshold: float | None = None

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in known})


def _parse_float(text):
    try:
        return float(text)
    except ValueError:
        return None


def read_points(path):
    """Read an ``(N, d)`` point array from a CSV file.

    A first row that does not parse as numbers is taken as a header. Blank
    lines are ignored. Errors cite 1-based file row and column.
    """
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise DataError(f"{path}: {exc.strerror or exc}") from exc

    numbered = [(r + 1, row) for r, row in enumerate(rows) if any(f.strip() for f in row)]
    if not numbered:
        raise DataError(f"{path}: file is empty")
    if any(_parse_float(f) is None for f in numbered[0][1]):
        numbered = numbered[1:]
        if not numbered:
            raise DataError(f"{path}: header row but no data rows")

    width = len(numbered[0][1])
    data = np.empty((len(numbered), width))
    for n, (r, row) in enumerate(numbered):
        if len(row) != width:
            raise DataError(f"{path}: row {r}: expected {width} fields, got {len(row)} (ragged row)")
        for c, field in enumerate(row):
            v = _parse_float(field)
            if v is None:
                raise DataError(f"{path}: row {r}, column {c + 1}: cannot parse {field.strip()!r}")
            if not math.isfinite(v):
                raise DataError(f"{path}: row {r}, column {c + 1}: non-finite value {field.strip()!r}")
            data[n, c] = v
    return data


def write_points(points, path):
    X = np.asarray(points, dtype=float)
    lines = [",".join(repr(float(v)) for v in row) for row in X]
    _write_text(path, "\n".join(lines) + "\n")


def _write_text(path, text):
    try:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise DataError(f"{path}: {exc.strerror or exc}") from exc


def _floats(v):
    return [float(x) for x in np.ravel(v)]


def model_document(model, trace_summary=None, config=None, extra=None):
    """Plain-data form of a fitted model, its run summary and its config."""
    stages = [t.summary() for t in model.traces]
    summary = {
        "final_energy": float(model.energies[-1]),
        "iterations": int(sum(s["iterations"] for s in stages)),
        "status": model.status,
        "stage_energies": _floats(model.energies),
        "stages": stages,
    }
    if trace_summary:
        summary.update(trace_summary)
    doc = {
        "format": FORMAT,
        "model": {
            "method": model.method,
            "dim": int(model.basis.shape[0]),
            "k": int(model.k),
            "offset": _floats(model.offset),
            "directions": [_floats(model.basis[:, j]) for j in range(model.k)],
            "energies": _floats(model.energies),
        },
        "trace": summary,
        "config": asdict(config) if config is not None else None,
    }
    if extra:
        doc.update(extra)
    return doc


def dumps_document(doc):
    # json writes floats with the shortest repr that round-trips exactly
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


def write_model(model, path, trace_summary=None, config=None, extra=None):
    _write_text(path, dumps_document(model_document(model, trace_summary, config, extra)))


def parse_document(doc):
    """Return ``(model, trace_summary, config)`` from a loaded document."""
    if doc.get("format") != FORMAT:
        raise DataError(f"not a model document (format {doc.get('format')!r})")
    m = doc["model"]
    dim = int(m["dim"])
    dirs = [np.array(v, dtype=float) for v in m["directions"]]
    basis = np.column_stack(dirs) if dirs else np.zeros((dim, 0))
    model = SubspaceModel(
        offset=np.array(m["offset"], dtype=float),
        basis=basis,
        energies=[float(e) for e in m["energies"]],
        method=m["method"],
        status=doc["trace"]["status"],
    )
    cfg = doc.get("config")
    return model, doc["trace"], RunConfig.from_dict(cfg) if cfg is not None else None


def read_model(path):
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise DataError(f"{path}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON ({exc})") from exc
    return parse_document(doc)


def format_distances(distances):
    return "".join(f"{i}\t{float(d)!r}\n" for i, d in enumerate(np.ravel(distances), start=1))


def write_distances(distances, path):
    """Two-column TSV of 1-based point index and distance."""
    _write_text(path, format_distances(distances))
