"""
Result file emission: CSV tables with comment-line metadata and JSON mirrors.

CSV layout:

    # command: sweep-ratio
    # config.n: 1000
    # ...
    ratio,alloc_mode,mse_mean,mse_stderr,mse_theory,trials
    1.0,uniform,...

The body (header and rows) depends only on the configuration and seed; the
comment block also records the code version and wall time.
"""
import json
import logging
import math
import os
import tempfile
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd

from app import __version__
from app.core.exceptions import OutputWriteError
from app.models.profiles import ContourGrid
from app.models.run_config import RunConfig
from app.models.types import DIVERGENT_TOKEN, OutputFormat

logger = logging.getLogger(__name__)

CSV_COLUMNS = {
    "contour": ["rho", "delta", "mse_uniform", "mse_optimal", "phase_transition", "inadmissible"],
    "sweep-ratio": ["ratio", "alloc_mode", "mse_mean", "mse_stderr", "mse_theory", "trials"],
    "sweep-noise": ["noise_var", "alloc_mode", "mse_mean", "mse_stderr", "mse_theory"],
    "theory": ["block", "epsilon", "m_sharp", "alpha_star", "mu_a", "sigma2_opt"],
    "run": ["trial", "alloc_mode", "mse", "iterations", "converged"],
}

# Columns where a missing value means "no finite prediction".
_PREDICTION_COLUMNS = ("mse_theory",)


def _cell_mse(cell) -> Any:
    if cell.inadmissible or cell.prediction is None:
        return None
    return DIVERGENT_TOKEN if cell.prediction.is_divergent else cell.prediction.mse


def contour_frame(uniform: ContourGrid, optimal: ContourGrid) -> pd.DataFrame:
    """Join the uniform and optimal grids into one row per (rho, delta) cell."""
    if uniform.rho_values != optimal.rho_values or uniform.delta_values != optimal.delta_values:
        raise ValueError("contour grids must share the same axes")
    transition = dict(zip(uniform.delta_values, uniform.phase_transition))
    rows = []
    for u, o in zip(uniform.cells, optimal.cells):
        rows.append({
            "rho": u.rho,
            "delta": u.delta,
            "mse_uniform": _cell_mse(u),
            "mse_optimal": _cell_mse(o),
            "phase_transition": transition[u.delta],
            "inadmissible": "true" if u.inadmissible else "false",
        })
    return pd.DataFrame(rows, columns=CSV_COLUMNS["contour"])


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if hasattr(value, "model_dump"):
        return _jsonable(value.model_dump())
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def _prepare(table: pd.DataFrame, command: str) -> pd.DataFrame:
    columns = CSV_COLUMNS[command]
    missing = [c for c in columns if c not in table.columns]
    if missing:
        raise ValueError(f"{command} table lacks columns {missing}")
    out = table[columns].astype(object)
    out = out.where(out.notna(), None)
    for column in _PREDICTION_COLUMNS:
        if column in out.columns:
            out[column] = [DIVERGENT_TOKEN if v is None else v for v in out[column]]
    return out


def build_metadata(config: RunConfig, wall_time: float, extra: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    """Everything needed to rerun the computation, plus provenance."""
    seed = config.spec.seed if config.spec is not None else None
    metadata = {
        "command": config.command,
        "config": config.to_key_values(),
        "seed": seed,
        "version": __version__,
        "wall_time_seconds": round(wall_time, 3),
        "generated_at": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }
    metadata.update(extra or {})
    return _jsonable(metadata)


def _comment_block(metadata: Dict[str, Any]) -> str:
    lines = []
    for key, value in metadata.items():
        if key == "config":
            lines.extend(f"# config.{k}: {v}" for k, v in value.items())
        else:
            text = value if isinstance(value, str) else json.dumps(value, sort_keys=True)
            lines.append(f"# {key}: {text}")
    return "\n".join(lines) + "\n"


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.remove(tmp_name)
        raise


def csv_body(table: pd.DataFrame, command: str) -> str:
    """Header and rows of the CSV file (no metadata)."""
    return _prepare(table, command).to_csv(index=False, na_rep="", lineterminator="\n")


def emit_results(
        table: pd.DataFrame,
        config: RunConfig,
        wall_time: float,
        extra_metadata: Optional[Dict[str, Any]] = None,
) -> List[Path]:
    """
    Write the result table for `config.command`.

    csv format writes the CSV and a JSON mirror next to it; json format writes
    JSON only. Files appear atomically; on failure nothing written by this call
    is left behind.

    Raises:
        OutputWriteError: any I/O failure.
    """
    command = str(config.command)
    metadata = build_metadata(config, wall_time, extra_metadata)
    prepared = _prepare(table, command)
    document = {
        "metadata": metadata,
        "rows": _jsonable(prepared.to_dict(orient="records")),
    }

    targets = []
    if config.format == OutputFormat.CSV.value:
        targets.append((config.path, _comment_block(metadata) + csv_body(table, command)))
        targets.append((config.path.with_suffix(".json"), json.dumps(document, indent=2, sort_keys=False) + "\n"))
    else:
        targets.append((config.path, json.dumps(document, indent=2, sort_keys=False) + "\n"))

    written: List[Path] = []
    try:
        for path, text in targets:
            _atomic_write(path, text)
            written.append(path)
            logger.info("Wrote %s (%d rows)", path, len(prepared))
    except OSError as exc:
        for path in written:
            path.unlink(missing_ok=True)
        raise OutputWriteError(str(path), str(exc)) from exc
    return written
