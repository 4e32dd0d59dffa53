"""Run manifest: everything needed to repeat a fit."""

from __future__ import annotations

import hashlib
import logging
from pathlib import Path
from typing import Any, Iterable

from pydantic import BaseModel, ConfigDict

from app.formatter.run_files import write_json_atomic

logger = logging.getLogger(__name__)

MANIFEST_FILE = "manifest.json"

# Acceptance rates outside this band are flagged in the manifest
ACCEPTANCE_BAND = (0.1, 0.7)


class RunManifest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    command: str
    config: dict[str, Any]
    seed: int
    model: str
    input_hash: str
    chains: int
    wall_clock_seconds: float
    ess: dict[str, dict[str, float]]
    acceptance: dict[str, dict[str, float]]
    acceptance_flags: dict[str, list[str]]
    approximate_conditionals: bool = False
    periods: list[str] = []

    def write(self, out_dir: str | Path) -> Path:
        path = write_json_atomic(Path(out_dir) / MANIFEST_FILE, self.model_dump(mode="json"))
        logger.info("manifest written to %s", path)
        return path


def blob_hash(data: bytes) -> str:
    """Git blob id of ``data``."""
    return hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()


def content_hash(paths: Iterable[str | Path]) -> str:
    """Hash over the names and git blob ids of the given files, order-independent."""
    digest = hashlib.sha1()
    for path in sorted(Path(p) for p in paths):
        digest.update(f"{path.name} {blob_hash(path.read_bytes())}\n".encode())
    return digest.hexdigest()


def acceptance_flags(rates: dict[str, float], band: tuple[float, float] = ACCEPTANCE_BAND) -> list[str]:
    """Parameters whose MH acceptance rate falls outside ``band``."""
    low, high = band
    return sorted(name for name, rate in rates.items() if not low <= rate <= high)
