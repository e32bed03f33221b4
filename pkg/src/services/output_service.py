import json
import logging
import os
import threading
from typing import Any, Dict, List

import pandas as pd

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"


class OutputService:
    """Writes result files into one output directory.

    Files carry no timestamps and use a fixed key order, so identical runs give
    identical bytes. Writes are serialised through a lock.
    """

    def __init__(self, output_dir: str):
        self.output_dir = output_dir
        self.files_written: List[str] = []
        self._lock = threading.Lock()
        os.makedirs(output_dir, exist_ok=True)

    def _path(self, name: str) -> str:
        return os.path.join(self.output_dir, name)

    def _record(self, path: str):
        if path not in self.files_written:
            self.files_written.append(path)

    def write_json(self, name: str, payload: Dict[str, Any]) -> str:
        path = self._path(name)
        text = json.dumps(payload, sort_keys=True, indent=2, ensure_ascii=False, allow_nan=True)
        with self._lock:
            with open(path, "w", encoding="utf-8", newline="\n") as f:
                f.write(text + "\n")
            self._record(path)
        logger.debug(f"Wrote {path}")
        return path

    def write_csv(self, name: str, frame: pd.DataFrame) -> str:
        path = self._path(name)
        with self._lock:
            frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
            self._record(path)
        logger.debug(f"Wrote {path} ({len(frame)} rows)")
        return path

    def write_table(self, name: str, frame: pd.DataFrame, fmt: str) -> str:
        """CSV by default; `json` writes the same rows as a list of records"""
        if fmt == "json":
            return self.write_json(f"{name}.json", {"rows": frame.to_dict(orient="records")})
        return self.write_csv(f"{name}.csv", frame)
