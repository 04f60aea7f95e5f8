"""
Artifact store: JSON reports, CSV data files and plot-script templates
"""

import csv
import json
from pathlib import Path
from threading import Lock
from typing import Any, Dict, Iterable, List, Mapping, Sequence, Union

import numpy as np

from ..config import settings
from ..utils.logger import setup_logger

logger = setup_logger(__name__)


def format_value(value: Any) -> str:
    """Round-trip text for floats, plain str for everything else"""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if value is None:
        return ""
    return str(value)


def flatten(mapping: Mapping[str, Any], prefix: str = "") -> Dict[str, Any]:
    """{'params': {'omega': 1.0}} -> {'params.omega': 1.0}"""
    flat: Dict[str, Any] = {}
    for key, value in mapping.items():
        name = f"{prefix}{key}"
        if isinstance(value, Mapping):
            flat.update(flatten(value, f"{name}."))
        else:
            flat[name] = value
    return flat


def _jsonable(value: Any) -> Any:
    if isinstance(value, Mapping):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (np.floating, float)):
        return float(value)
    if isinstance(value, complex):
        return {"re": value.real, "im": value.imag}
    return value


class ArtifactStore:
    """Writes every output of one run into a single directory"""

    def __init__(self, out_dir: Union[str, Path, None] = None):
        self.out_dir = Path(out_dir or settings.output_dir)
        self._lock = Lock()  # ordered, single-writer output
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.written: List[str] = []

    def _path(self, name: str) -> Path:
        return self.out_dir / name

    def write_json(self, name: str, payload: Mapping[str, Any]) -> Path:
        """Key order of payload is preserved"""
        path = self._path(name)
        with self._lock:
            try:
                with open(path, "w", encoding="utf-8", newline="\n") as f:
                    json.dump(_jsonable(payload), f, indent=2)
                    f.write("\n")
            except Exception as e:
                logger.error(f"Error writing {path}: {e}")
                raise
            self.written.append(name)
        logger.info(f"Wrote {path}")
        return path

    def write_csv(
        self,
        name: str,
        header: Mapping[str, Any],
        columns: Sequence[str],
        rows: Iterable[Sequence[Any]],
    ) -> Path:
        """
        CSV with a '# key = value' header block echoing resolved inputs

        Rows use RFC-4180 quoting and CRLF line endings; floats use repr.
        """
        path = self._path(name)
        with self._lock:
            try:
                with open(path, "w", encoding="utf-8", newline="") as f:
                    for key, value in flatten(header).items():
                        f.write(f"# {key} = {format_value(value)}\r\n")
                    writer = csv.writer(f, lineterminator="\r\n", quoting=csv.QUOTE_MINIMAL)
                    writer.writerow(columns)
                    for row in rows:
                        writer.writerow([format_value(v) for v in row])
            except Exception as e:
                logger.error(f"Error writing {path}: {e}")
                raise
            self.written.append(name)
        logger.info(f"Wrote {path}")
        return path

    def write_text(self, name: str, text: str) -> Path:
        path = self._path(name)
        with self._lock:
            path.write_text(text, encoding="utf-8")
            self.written.append(name)
        return path
