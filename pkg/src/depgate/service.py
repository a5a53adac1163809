"""Shared flows behind the HTTP service and the CLI.

The gate flow is the documented composition: observe the SBOM, read the
per-coordinate view back, evaluate the policy, persist snapshot and
decision. Calling the module functions in that order with the same inputs
yields the same decision the HTTP endpoint returns.
"""

from __future__ import annotations

import hashlib
import hmac
import json
import time
from datetime import datetime

from .config import ServiceConfig
from .gate import GateDecision, PolicyConfig, evaluate
from .manifests import SbomSnapshot
from .store import DrdStore
from .vulnsync import (
    FixtureRegistryAdapter,
    MavenCentralAdapter,
    NpmRegistryAdapter,
)


def run_gate_flow(
    store: DrdStore,
    sbom: SbomSnapshot,
    policy: PolicyConfig,
    now: datetime,
    persist: bool = True,
) -> GateDecision:
    store.upsert_observation(sbom, now)
    view = store.get_drd_view(sbom.application, sbom.dependencies)
    waivers = store.waivers_for(sbom.application)
    decision = evaluate(sbom, view, waivers, policy, now)
    if persist:
        store.save_snapshot(sbom)
        store.save_decision(
            sbom.application, sbom.commit, now, decision.verdict.value, decision.to_dict()
        )
    return decision


def build_registries(config: ServiceConfig) -> list:
    registries = []
    if config.fixture_registries_dir:
        registries.append(FixtureRegistryAdapter(config.fixture_registries_dir))
    if config.live_registries:
        registries.extend([MavenCentralAdapter(), NpmRegistryAdapter()])
    return registries


def sign_payload(secret: str, body: bytes) -> str:
    return "sha256=" + hmac.new(secret.encode("utf-8"), body, hashlib.sha256).hexdigest()


def deliver_webhooks(targets, events, record_failure=None, max_attempts: int = 3):
    """POST an event batch to every enabled target, HMAC-signed.

    Retries with capped exponential backoff; a target that stays down is
    recorded as a failed delivery and skipped.
    """
    import requests

    if not events:
        return
    body = json.dumps({"events": [e.to_dict() for e in events]}, sort_keys=True).encode("utf-8")
    for target in targets:
        if not target.enabled:
            continue
        delay = 0.1
        delivered = False
        last_error = ""
        for attempt in range(max_attempts):
            try:
                response = requests.post(
                    target.url,
                    data=body,
                    headers={
                        "Content-Type": "application/json",
                        "X-Depgate-Signature": sign_payload(target.secret, body),
                    },
                    timeout=5,
                )
                if response.status_code < 300:
                    delivered = True
                    break
                last_error = f"HTTP {response.status_code}"
            except requests.RequestException as exc:
                last_error = str(exc)
            if attempt < max_attempts - 1:
                time.sleep(min(delay, 1.0))
                delay *= 2
        if not delivered and record_failure is not None:
            record_failure(target, last_error)
