"""Application settings: a JSON file plus environment overrides."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Union

from ..claims import DomainError, Strategy
from ..provider import MODEL_ENDPOINT_ENV, ProviderConfig

BOT_TOKEN_ENV = "VERITY_BOT_TOKEN"
DEFAULT_BOT_API = "https://api.telegram.org"


@dataclass
class AppConfig:
    provider: ProviderConfig = field(default_factory=ProviderConfig)
    model_id: str = "gpt-4"
    strategy: Strategy = Strategy.FEW_SHOT
    max_steps: int = 5
    bot_token_env: str = BOT_TOKEN_ENV
    bot_api_base: str = DEFAULT_BOT_API
    poll_interval: float = 1.0
    poll_timeout: int = 30
    output_dir: str = "reports"

    def validate(self) -> None:
        self.provider.validate()
        if not self.model_id:
            raise DomainError("model_id must be set")
        if self.max_steps < 1:
            raise DomainError("max_steps must be >= 1")
        if self.poll_interval < 0 or self.poll_timeout < 0:
            raise DomainError("polling settings must be non-negative")
        if not self.bot_api_base.startswith(("http://", "https://")):
            raise DomainError("bot_api_base must be an http(s) URL")


def load_config(path: Optional[Union[str, Path]] = None, env: Optional[Mapping[str, str]] = None) -> AppConfig:
    """Read settings from ``path`` (JSON) and apply VERITY_* environment overrides."""
    env = os.environ if env is None else env
    data: dict = {}
    if path is not None:
        data = json.loads(Path(path).read_text("utf-8"))
        if not isinstance(data, dict):
            raise DomainError(f"{path}: config must be a JSON object")
    data = dict(data)
    provider = ProviderConfig.from_dict(data.pop("provider", {}))
    if "strategy" in data:
        data["strategy"] = Strategy(data["strategy"])
    known = set(AppConfig.__dataclass_fields__) - {"provider"}
    unknown = set(data) - known
    if unknown:
        raise DomainError(f"unknown settings: {sorted(unknown)}")
    config = AppConfig(provider=provider, **data)

    if env.get(MODEL_ENDPOINT_ENV):
        config.provider.endpoint = env[MODEL_ENDPOINT_ENV]
    if env.get("VERITY_MODEL_ID"):
        config.model_id = env["VERITY_MODEL_ID"]
    if env.get("VERITY_BOT_API_BASE"):
        config.bot_api_base = env["VERITY_BOT_API_BASE"]
    config.validate()
    return config
