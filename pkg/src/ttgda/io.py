"""Atomic artifact writers: delimited tables, JSON documents, run manifests.

Every writer lands the payload in a temporary file in the destination
directory and promotes it with os.replace, so readers never observe a
partially written artifact. Floats are serialized with %.17g (round-trip
exact for IEEE doubles); CSV output is UTF-8 with comma separators and a
single header row carrying units in brackets, e.g. ``mu_t[1/t]``.
"""

from __future__ import annotations

import json
import os
import tempfile
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ConfigError

__all__ = [
    "format_value",
    "write_csv",
    "write_json",
    "read_config",
    "build_manifest",
]


def format_value(v) -> str:
    """%.17g for real floats; ints and strings pass through."""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % float(v)
    return str(v)


def _atomic_write_text(path: str, text: str):
    directory = os.path.dirname(os.path.abspath(path)) or "."
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path: str, header: Sequence[str], rows: Iterable[Sequence]):
    """Write a delimited table atomically; every row must match the header."""
    width = len(header)
    lines = [",".join(header)]
    for i, row in enumerate(rows):
        row = list(row)
        if len(row) != width:
            raise ValueError(
                f"row {i} has {len(row)} fields, header has {width}"
            )
        lines.append(",".join(format_value(v) for v in row))
    _atomic_write_text(path, "\n".join(lines) + "\n")


class _ArtifactEncoder(json.JSONEncoder):
    def default(self, o):
        if isinstance(o, np.ndarray):
            return o.tolist()
        if isinstance(o, (np.floating,)):
            return float(o)
        if isinstance(o, (np.integer,)):
            return int(o)
        if isinstance(o, (np.bool_,)):
            return bool(o)
        return super().default(o)


def write_json(path: str, obj):
    """Write a JSON document atomically (numpy scalars/arrays handled)."""
    _atomic_write_text(
        path, json.dumps(obj, indent=2, cls=_ArtifactEncoder) + "\n"
    )


def read_config(path: str) -> dict:
    """Load a JSON config file; malformed input raises ConfigError."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    if not isinstance(cfg, Mapping):
        raise ConfigError("config root must be a JSON object")
    return dict(cfg)


def build_manifest(
    experiment: str,
    config: Mapping,
    seed: int | None,
    outputs: Sequence[str],
    *,
    threads: int | None = None,
    results: Mapping | None = None,
) -> dict:
    """Reproducibility manifest for one run (content-only: no timestamps)."""
    from . import __version__
    from .meanfield import RNG_IDENTIFIER

    manifest = {
        "experiment": experiment,
        "config": dict(config),
        "seed": seed,
        "threads": threads,
        "library_version": __version__,
        "rng": RNG_IDENTIFIER,
        "outputs": list(outputs),
    }
    if results is not None:
        manifest["results"] = dict(results)
    return manifest
