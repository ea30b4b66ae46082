"""Provenance-stamped output files.

Every file the pipeline writes embeds a hash of the semantic run
configuration plus the tool version, and a write refuses to replace a file
carrying a different hash so runs with different configs never silently
overwrite each other.  The output directory itself is excluded from the
hash so identical runs into different directories stay byte-identical.
"""

from __future__ import annotations

import hashlib
import json
import re
from pathlib import Path

from . import __version__
from .errors import ConfigError

_HASH_RE = re.compile(r'config_hash["=:\s]+([0-9a-f]{12})')


def config_digest(payload: dict) -> str:
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:12]


def meta_line(digest: str) -> str:
    return f"config_hash={digest} tool_version={__version__}"


def meta_dict(digest: str) -> dict:
    return {"config_hash": digest, "tool_version": __version__}


def embedded_digest(path: Path) -> str | None:
    try:
        with open(path, "r", encoding="utf-8", errors="replace") as fh:
            head = fh.read(4096)
    except OSError:
        return None
    match = _HASH_RE.search(head)
    return match.group(1) if match else None


def check_overwrite(path: Path, digest: str) -> None:
    if not path.exists():
        return
    existing = embedded_digest(path)
    if existing is not None and existing != digest:
        raise ConfigError(
            f"refusing to overwrite {path}: it was written with config_hash="
            f"{existing}, current run has config_hash={digest}; use a fresh "
            "output directory"
        )


def write_text(path: Path, content: str, digest: str) -> None:
    check_overwrite(path, digest)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(content)


def write_json(path: Path, payload: dict, digest: str) -> None:
    """Write JSON with the meta block as the first key."""
    ordered = {"meta": meta_dict(digest)}
    ordered.update(payload)
    write_text(path, json.dumps(ordered, indent=2, default=str) + "\n", digest)
