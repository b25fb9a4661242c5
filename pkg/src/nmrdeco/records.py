"""CSV/JSON encodings of sweeps and fits, written atomically."""

import csv
import io
import json
import os
import tempfile
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .experiments import SweepResult
from .fitting import SinusoidFit

CSV_HEADER = ["param", "value_re", "value_im"]
FIT_FIELDS = ["amplitude", "period", "phase", "offset", "rms_residual"]


class RecordFormatError(ValueError):
    pass


def _g12(x: float) -> str:
    text = f"{x:.12g}"
    return "0" if text == "-0" else text


def atomic_write(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def sweep_to_csv(result: SweepResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for p, v in zip(result.params, result.values):
        w.writerow([_g12(p), _g12(v.real), _g12(v.imag)])
    return buf.getvalue()


def sweep_to_dict(result: SweepResult) -> dict:
    return {
        "scenario": result.scenario,
        "param_name": result.param_name,
        "samples": [
            {"param": float(p), "value_re": float(v.real), "value_im": float(v.imag)}
            for p, v in zip(result.params, result.values)
        ],
        "metadata": result.metadata,
    }


def sweep_to_json(result: SweepResult) -> str:
    return json.dumps(sweep_to_dict(result), indent=2, sort_keys=True) + "\n"


def sweep_from_csv(text: str) -> SweepResult:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or [c.strip() for c in rows[0]] != CSV_HEADER:
        raise RecordFormatError(f"sweep CSV must start with header {','.join(CSV_HEADER)}")
    params, values = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 3:
            raise RecordFormatError(f"line {lineno}: expected 3 columns, got {len(row)}")
        try:
            p, re_, im = (float(c) for c in row)
        except ValueError:
            raise RecordFormatError(f"line {lineno}: non-numeric field") from None
        params.append(p)
        values.append(complex(re_, im))
    return SweepResult("csv", "param", np.array(params), np.array(values, dtype=complex))


def sweep_from_json(text: str) -> SweepResult:
    try:
        d = json.loads(text)
        samples = d["samples"]
        params = [float(s["param"]) for s in samples]
        values = [complex(float(s["value_re"]), float(s["value_im"])) for s in samples]
        return SweepResult(
            d["scenario"], d["param_name"], np.array(params), np.array(values, dtype=complex), d.get("metadata", {})
        )
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise RecordFormatError(f"malformed sweep JSON: {exc}") from None


def read_sweep(path) -> SweepResult:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"sweep file not found: {path}")
    text = path.read_text(encoding="utf-8")
    if text.lstrip().startswith("{"):
        return sweep_from_json(text)
    return sweep_from_csv(text)


def write_sweep(result: SweepResult, path, fmt: str = "csv") -> None:
    atomic_write(path, sweep_to_csv(result) if fmt == "csv" else sweep_to_json(result))


def fit_to_json(fit: SinusoidFit) -> str:
    return json.dumps(asdict(fit), indent=2, sort_keys=True) + "\n"


def fit_to_csv(fit: SinusoidFit) -> str:
    return ",".join(FIT_FIELDS) + "\n" + ",".join(_g12(getattr(fit, f)) for f in FIT_FIELDS) + "\n"
