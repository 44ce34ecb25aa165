"""Calibrated constants (C', C'', C and fitted envelope constants).

The shipped file lives at ``heatflow/data/constants.json``; the
``HEATFLOW_CONSTANTS`` environment variable or an explicit path overrides
it.  ``heatflow calibrate`` regenerates the file.
"""
from __future__ import annotations

import hashlib
import json
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .errors import ConfigError

PACKAGED = Path(__file__).with_name("data") / "constants.json"
FORMAT_VERSION = 1


@dataclass(frozen=True)
class Constants:
    C_prime: float = 10.0
    C_double_prime: float = 100.0
    C: float = 20.0
    envelopes: dict = field(default_factory=dict)
    version: int = FORMAT_VERSION
    source: str = "defaults"

    def to_json(self) -> str:
        d = asdict(self)
        d.pop("source")
        return json.dumps(d, sort_keys=True, indent=2) + "\n"

    @property
    def sha256(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()

    def envelope(self, name: str, default: float | None = None) -> float:
        if name in self.envelopes:
            return float(self.envelopes[name])
        if default is None:
            raise ConfigError(f"constants file has no envelope {name!r}")
        return default


def from_dict(d: dict, source: str = "dict") -> Constants:
    try:
        cp = float(d["C_prime"])
        out = Constants(
            C_prime=cp,
            C_double_prime=float(d.get("C_double_prime", 100.0)),
            C=float(d.get("C", 2.0 * cp)),
            envelopes={k: float(v) for k, v in d.get("envelopes", {}).items()},
            version=int(d.get("version", FORMAT_VERSION)),
            source=source,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed constants ({exc})", source=source) from exc
    if out.version != FORMAT_VERSION:
        raise ConfigError(f"unsupported constants version {out.version}", source=source)
    if not 0 < out.C_prime <= out.C:
        raise ConfigError("constants must satisfy 0 < C' <= C", source=source)
    return out


def load(path=None) -> Constants:
    """Load constants from ``path``, $HEATFLOW_CONSTANTS, or the packaged file.

    Falls back to built-in defaults (C' = 10) when no file exists.
    """
    if path is None:
        path = os.environ.get("HEATFLOW_CONSTANTS") or None
    if path is None:
        if not PACKAGED.exists():
            return Constants()
        path = PACKAGED
    p = Path(path)
    try:
        d = json.loads(p.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read constants file {p}: {exc}") from exc
    return from_dict(d, source=str(p))


def save(c: Constants, path) -> str:
    Path(path).write_text(c.to_json())
    return c.sha256
