"""Utilities for eup-spectra: output paths, config digests, JSON-safe number formatting."""

import hashlib
import json
import math
from pathlib import Path
from typing import Any, Optional

import numpy as np

# Reports carry 12 significant digits
REPORT_DIGITS = 12


def round_sig(value: float, digits: int = REPORT_DIGITS) -> Optional[float]:
    """Round to `digits` significant digits; NaN and infinities become None (JSON null)."""
    if not math.isfinite(value):
        return None
    return float(f"{value:.{digits}g}")


def to_jsonable(obj: Any, digits: int = REPORT_DIGITS) -> Any:
    """
    Convert nested results to plain JSON types.

    Complex numbers become [re, im] pairs, floats are rounded to `digits`
    significant digits, non-finite floats become None, numpy scalars/arrays and tuples
    become lists.
    """
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v, digits) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v, digits) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v, digits) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [round_sig(float(obj.real), digits), round_sig(float(obj.imag), digits)]
    if isinstance(obj, (float, np.floating)):
        return round_sig(float(obj), digits)
    if isinstance(obj, Path):
        return str(obj)
    return obj


def config_digest(config_echo: dict[str, Any]) -> str:
    """Short sha256 of the canonical config; identical configs give identical digests."""
    canonical = json.dumps(to_jsonable(config_echo), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def ensure_output_dir(base_dir: Path) -> Path:
    """Create the output directory; OSError messages carry the path."""
    try:
        base_dir.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise OSError(f"cannot create output directory {base_dir}: {e.strerror or e}") from e
    return base_dir
