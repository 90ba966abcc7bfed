"""CSV and JSON artifacts.

Floats are written with 17 significant digits so files round-trip exactly
and identical runs produce identical bytes.
"""

from __future__ import annotations

import enum
import json
import math
from pathlib import Path
from typing import Any, Iterable, Sequence

from . import __version__

RISK_HEADER = ("n", "mean_risk", "risk_se", "kept_mean")
COEFF_HEADER = ("l", "theta_hat", "kept", "lambda")
VARIANCE_HEADER = ("n", "variance", "variance_se", "mean_estimate")
SAMPLE_HEADER = ("i", "t", "y")
AUTOCOV_HEADER = ("alpha", "lag", "sample_autocov", "se", "fgn_autocov")
SWEEP_HEADER = ("gamma", "n", "mean_risk", "risk_se", "kept_mean")


class OutputExistsError(FileExistsError):
    pass


def fmt(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if hasattr(value, "item"):
        return fmt(value.item())
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"cannot serialize non-finite value {value}")
        text = "%.17g" % value
        # keep floats recognizable as floats: 1.0 -> "1.0", not "1"
        return text if any(c in text for c in ".e") else text + ".0"
    raise TypeError(f"unsupported value {value!r}")


def csv_text(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    lines = [",".join(header)]
    lines.extend(",".join(fmt(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


def _json(value: Any, indent: int) -> str:
    pad = "  " * (indent + 1)
    if value is None:
        return "null"
    if isinstance(value, str):
        return _quote(value)
    if isinstance(value, enum.Enum):
        return _json(value.value, indent)
    if isinstance(value, dict):
        if not value:
            return "{}"
        items = [f"{pad}{_quote(str(k))}: {_json(v, indent + 1)}" for k, v in value.items()]
        return "{\n" + ",\n".join(items) + "\n" + "  " * indent + "}"
    if isinstance(value, (list, tuple)):
        if not value:
            return "[]"
        return "[" + ", ".join(_json(v, indent + 1) for v in value) + "]"
    return fmt(value)


def _quote(s: str) -> str:
    return json.dumps(s)


def json_text(obj: dict) -> str:
    return _json(obj, 0) + "\n"


def summary(command: str, config: dict, **fields) -> dict:
    return {"command": command, "version": __version__, **fields, "config": config}


class OutputDir:
    """Target directory that refuses to clobber files unless told to."""

    def __init__(self, path, overwrite: bool = False):
        self.path = Path(path)
        self.overwrite = overwrite

    def check(self, names: Iterable[str]) -> None:
        if self.overwrite:
            return
        existing = [n for n in names if (self.path / n).exists()]
        if existing:
            raise OutputExistsError(
                f"{self.path / existing[0]} exists; pass --overwrite to replace it"
            )

    def write(self, name: str, text: str) -> Path:
        self.check([name])
        self.path.mkdir(parents=True, exist_ok=True)
        target = self.path / name
        target.write_text(text)
        return target


def risk_rows(result) -> list[tuple]:
    return [(r.n, r.mean_risk, r.risk_se, r.kept_mean) for r in result.per_n]


def coeff_rows(estimate) -> list[tuple]:
    return [
        (l, float(theta), int(bool(kept)), float(estimate.lam))
        for l, (theta, kept) in enumerate(zip(estimate.raw.theta, estimate.kept))
    ]


def emit_results(result, out_dir, config: dict, overwrite: bool = False, command: str = "risk-study",
                 **extra) -> list[Path]:
    """Write ``risk.csv`` and ``summary.json`` for a risk study.

    ``extra`` fields are added to the summary after the fit statistics.
    """
    out = OutputDir(out_dir, overwrite)
    out.check(["risk.csv", "summary.json"])
    doc = summary(
        command, config,
        slope=result.slope if result.per_n else None,
        slope_se=result.slope_se if result.per_n else None,
        theoretical_exponent=result.theoretical_exponent,
        **extra,
    )
    return [
        out.write("risk.csv", csv_text(RISK_HEADER, risk_rows(result))),
        out.write("summary.json", json_text(doc)),
    ]
