"""Runtime configuration: defaults, then config file, then environment.

File format is INI/TOML-style ``key = value`` sections; every key can be
overridden with ``FUSIONKIT_<SECTION>_<KEY>`` environment variables.
Invalid values are rejected at startup with the offending field named.
"""

from __future__ import annotations

import configparser
import os
import re
from dataclasses import dataclass, fields
from pathlib import Path
from urllib.parse import urlsplit, urlunsplit

from .errors import ConfigError

DEFAULT_ALPHA = 0.7
DEFAULT_K = 100
DEFAULT_POOL_FACTOR = 10
DEFAULT_PER_VIDEO_CAP = 3

_LISTEN_RE = re.compile(r"^(?P<host>[^:]+):(?P<port>\d+)$")


@dataclass
class ServiceConfig:
    listen: str = "127.0.0.1:8080"
    static_dir: str = ""
    corpus: str = ""
    alpha: float = DEFAULT_ALPHA
    k: int = DEFAULT_K
    pool_factor: int = DEFAULT_POOL_FACTOR
    per_video_cap: int = DEFAULT_PER_VIDEO_CAP
    embed_provider: str = "mock"
    qgen_provider: str = "mock"
    vqa_provider: str = "mock"
    qa_provider: str = "mock"
    provider_timeout_ms: int = 10_000
    qa_deadline_ms: int = 5_000
    qa_max_frames: int = 5
    embed_concurrency: int = 4
    vqa_concurrency: int = 4

    @property
    def host(self) -> str:
        return _LISTEN_RE.match(self.listen)["host"]

    @property
    def port(self) -> int:
        return int(_LISTEN_RE.match(self.listen)["port"])

    def public_dict(self) -> dict:
        """Effective settings with credentials stripped from provider URLs."""
        out = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if f.name.endswith("_provider") and isinstance(value, str):
                value = _redact_url(value)
            out[f.name] = value
        return out


def _redact_url(value: str) -> str:
    if "://" not in value:
        return value
    parts = urlsplit(value)
    if "@" in parts.netloc:
        host = parts.netloc.rsplit("@", 1)[1]
        parts = parts._replace(netloc=f"***@{host}")
    return urlunsplit(parts)


# (section, key) -> (field name, parser)
def _provider(value: str, field_name: str) -> str:
    if value == "mock" or value.startswith(("http://", "https://")):
        return value
    raise ConfigError(field_name, f"must be 'mock' or an http(s) URL, got {value!r}")


def _positive_int(value: str, field_name: str) -> int:
    try:
        parsed = int(value)
    except ValueError:
        raise ConfigError(field_name, f"must be an integer, got {value!r}") from None
    if parsed < 1:
        raise ConfigError(field_name, f"must be >= 1, got {parsed}")
    return parsed


def _alpha(value: str, field_name: str) -> float:
    try:
        parsed = float(value)
    except ValueError:
        raise ConfigError(field_name, f"must be a number, got {value!r}") from None
    if not 0.0 <= parsed <= 1.0:
        raise ConfigError(field_name, f"must be within [0, 1], got {parsed}")
    return parsed


def _listen(value: str, field_name: str) -> str:
    m = _LISTEN_RE.match(value)
    if not m or not 1 <= int(m["port"]) <= 65535:
        raise ConfigError(field_name, f"must be host:port, got {value!r}")
    return value


def _path(value: str, field_name: str) -> str:
    return value


_SCHEMA: dict[tuple[str, str], tuple[str, object]] = {
    ("server", "listen"): ("listen", _listen),
    ("server", "static_dir"): ("static_dir", _path),
    ("data", "corpus"): ("corpus", _path),
    ("search", "alpha"): ("alpha", _alpha),
    ("search", "k"): ("k", _positive_int),
    ("search", "pool_factor"): ("pool_factor", _positive_int),
    ("search", "per_video_cap"): ("per_video_cap", _positive_int),
    ("providers", "embed"): ("embed_provider", _provider),
    ("providers", "qgen"): ("qgen_provider", _provider),
    ("providers", "vqa"): ("vqa_provider", _provider),
    ("providers", "qa"): ("qa_provider", _provider),
    ("limits", "provider_timeout_ms"): ("provider_timeout_ms", _positive_int),
    ("limits", "qa_deadline_ms"): ("qa_deadline_ms", _positive_int),
    ("limits", "qa_max_frames"): ("qa_max_frames", _positive_int),
    ("limits", "embed_concurrency"): ("embed_concurrency", _positive_int),
    ("limits", "vqa_concurrency"): ("vqa_concurrency", _positive_int),
}


def _strip_quotes(value: str) -> str:
    value = value.strip()
    if len(value) >= 2 and value[0] == value[-1] and value[0] in "\"'":
        return value[1:-1]
    return value


def load_config(path: str | Path | None = None, env: dict[str, str] | None = None) -> ServiceConfig:
    """Build a ServiceConfig from defaults, an optional file, then environment."""
    env = os.environ if env is None else env
    config = ServiceConfig()

    if path is not None:
        parser = configparser.ConfigParser(interpolation=None)
        try:
            with open(path, encoding="utf-8") as f:
                parser.read_file(f)
        except OSError as exc:
            raise ConfigError(str(path), f"cannot read config file: {exc}") from None
        except configparser.Error as exc:
            raise ConfigError(str(path), f"cannot parse config file: {exc}") from None
        for section in parser.sections():
            for key, raw in parser.items(section):
                entry = _SCHEMA.get((section.lower(), key.lower()))
                if entry is None:
                    raise ConfigError(f"{section}.{key}", "unknown configuration key")
                name, parse = entry
                setattr(config, name, parse(_strip_quotes(raw), f"{section}.{key}"))

    for (section, key), (name, parse) in _SCHEMA.items():
        raw = env.get(f"FUSIONKIT_{section.upper()}_{key.upper()}")
        if raw is not None:
            setattr(config, name, parse(_strip_quotes(raw), f"{section}.{key}"))

    return config
