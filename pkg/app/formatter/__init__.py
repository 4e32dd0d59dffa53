from app.formatter.manifest import RunManifest, acceptance_flags, content_hash
from app.formatter.run_files import (
    ChainFiles,
    ExperimentWriter,
    FitWriter,
    SimulationWriter,
    read_fit_dir,
    read_json,
    write_json_atomic,
)

__all__ = [
    "ChainFiles",
    "ExperimentWriter",
    "FitWriter",
    "RunManifest",
    "SimulationWriter",
    "acceptance_flags",
    "content_hash",
    "read_fit_dir",
    "read_json",
    "write_json_atomic",
]
