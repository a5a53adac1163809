"""Service configuration: one file, environment-variable overrides on top.

Precedence: environment > file > defaults. The file is YAML or JSON by
extension. Policy settings live in their own file referenced by
``policy_path`` so CI and the service share one policy source.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .errors import ConfigError
from .gate import PolicyConfig

ENV_PREFIX = "DEPGATE_"

#: env var -> config field
ENV_OVERRIDES = {
    "DEPGATE_DB": "db_path",
    "DEPGATE_HOST": "host",
    "DEPGATE_PORT": "port",
    "DEPGATE_POLICY": "policy_path",
    "DEPGATE_TOKEN": "api_token",
    "DEPGATE_FEEDS": "feeds_dir",
    "DEPGATE_REGISTRIES": "fixture_registries_dir",
    "DEPGATE_ALIASES": "aliases_path",
    "DEPGATE_UI": "ui_dir",
}


@dataclass(frozen=True)
class WebhookTarget:
    url: str
    secret: str
    enabled: bool = True


@dataclass
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8436
    db_path: str = "depgate.sqlite"
    policy_path: str | None = None
    api_token: str | None = None
    feeds_dir: str | None = None
    fixture_registries_dir: str | None = None
    live_registries: bool = False
    aliases_path: str | None = None
    ui_dir: str | None = None
    webhooks: list = field(default_factory=list)
    internal_group_prefixes: list = field(default_factory=list)
    policy: PolicyConfig = field(default_factory=PolicyConfig)


def _read_config_file(path: str) -> dict:
    text = Path(path).read_text("utf-8")
    try:
        if path.endswith((".yaml", ".yml")):
            payload = yaml.safe_load(text) or {}
        else:
            payload = json.loads(text)
    except (yaml.YAMLError, ValueError) as exc:
        raise ConfigError(f"cannot parse config file {path}: {exc}") from exc
    if not isinstance(payload, dict):
        raise ConfigError(f"config file {path} must hold a mapping")
    return payload


def load_policy(path: str | None) -> PolicyConfig:
    if path is None:
        return PolicyConfig()
    payload = _read_config_file(path)
    return PolicyConfig.from_dict(payload)


def load_service_config(path: str | None = None, env: dict | None = None) -> ServiceConfig:
    env = os.environ if env is None else env
    payload = _read_config_file(path) if path else {}

    known = {
        "host", "port", "db_path", "policy_path", "api_token", "feeds_dir",
        "fixture_registries_dir", "live_registries", "aliases_path", "ui_dir",
        "webhooks", "internal_group_prefixes",
    }
    unknown = set(payload) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")

    config = ServiceConfig()
    for key in known - {"webhooks"}:
        if key in payload:
            setattr(config, key, payload[key])
    for entry in payload.get("webhooks", []):
        config.webhooks.append(
            WebhookTarget(
                url=entry["url"],
                secret=entry.get("secret", ""),
                enabled=bool(entry.get("enabled", True)),
            )
        )

    # Environment wins over the file.
    for env_key, attr in ENV_OVERRIDES.items():
        if env_key in env and env[env_key] != "":
            setattr(config, attr, env[env_key])
    config.port = int(config.port)

    config.policy = load_policy(config.policy_path)
    return config
