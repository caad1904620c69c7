"""Run manifests: enough provenance to reproduce an output byte for byte.

Every CLI command records its name, the full parameter map, a sha256 digest
of each input file, and the tool version. Outputs are pure functions of
this manifest, so re-running a command with inputs matching the digests
yields identical bytes.
"""

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping


@dataclass(frozen=True)
class RunManifest:
    command: str
    parameters: dict
    input_digests: dict[str, str]
    tool_version: str


def file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def build_manifest(command: str, parameters: Mapping, inputs: Mapping[str, object], tool_version: str) -> RunManifest:
    return RunManifest(
        command=command,
        parameters=dict(parameters),
        input_digests={name: file_digest(path) for name, path in inputs.items()},
        tool_version=tool_version,
    )


def write_manifest(manifest: RunManifest, path) -> None:
    payload = {
        "command": manifest.command,
        "parameters": {key: manifest.parameters[key] for key in sorted(manifest.parameters)},
        "input_digests": {key: manifest.input_digests[key] for key in sorted(manifest.input_digests)},
        "tool_version": manifest.tool_version,
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
