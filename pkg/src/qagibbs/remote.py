"""Client for a remote annealing service, with record/replay fixtures.

Wire format, JSON both ways::

    request  {"model": {...}, "num_reads": int, "anneal_time_us": label, "seed": int}
    response {"samples": [[+-1, ...], ...], "timing": {...}}

Fixtures live in one directory as ``<sha256 of the canonical request>.json``
holding ``{"request": ..., "response": ...}``. Modes: ``replay`` (fixtures
only, the default), ``record`` (live call, then store) and ``live``.
"""
import hashlib
import json
import os
import urllib.error
import urllib.request
from pathlib import Path

import numpy as np

from . import kernels
from .backends import Backend, SampleSet, normalize_label
from .errors import DecodeError, FixtureMiss, TransportError

ENDPOINT_ENV = "QAGIBBS_ENDPOINT"
TOKEN_ENV = "QAGIBBS_TOKEN"
MODES = ("replay", "record", "live")


def encode_request(request):
    label = normalize_label(request.anneal_label)
    try:
        label = int(label)
    except ValueError:
        pass
    return {
        "model": request.model.to_dict(),
        "num_reads": int(request.num_samples),
        "anneal_time_us": label,
        "seed": int(request.seed),
    }


def canonical(payload):
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def request_hash(request):
    return hashlib.sha256(canonical(encode_request(request)).encode()).hexdigest()


def decode_response(payload, request):
    """SampleSet from a response payload; malformed payloads raise DecodeError."""
    if not isinstance(payload, dict) or "samples" not in payload:
        raise DecodeError("response has no 'samples'")
    samples = payload["samples"]
    n = request.model.n
    if not isinstance(samples, list) or not samples:
        raise DecodeError("'samples' must be a non-empty list")
    try:
        arr = np.array(samples, dtype=np.int64)
    except (TypeError, ValueError) as exc:
        raise DecodeError(f"'samples' is not a numeric array: {exc}") from None
    if arr.ndim != 2 or arr.shape[1] != n:
        raise DecodeError(f"expected rows of {n} spins, got shape {arr.shape}")
    if not np.isin(arr, (-1, 1)).all():
        raise DecodeError("spins must be -1 or +1")
    timing = payload.get("timing", {})
    if not isinstance(timing, dict):
        raise DecodeError("'timing' must be an object")
    m = arr.shape[0]
    return SampleSet(request.model.sites, kernels.pack_spins(arr), m, [np.ones(n, dtype=np.int8)],
                     RemoteBackend.backend_id, request.echo(), {"timing": timing})


class RemoteBackend(Backend):
    backend_id = "remote"

    def __init__(self, mode="replay", fixture_dir="fixtures", endpoint=None, token=None, timeout=30.0):
        super().__init__()
        if mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        self.mode = mode
        self.fixture_dir = Path(fixture_dir)
        self.endpoint = endpoint or os.environ.get(ENDPOINT_ENV)
        self.token = token or os.environ.get(TOKEN_ENV)
        self.timeout = timeout

    def fixture_path(self, request):
        return self.fixture_dir / f"{request_hash(request)}.json"

    def _post(self, body):
        if not self.endpoint:
            raise TransportError(f"no endpoint configured (set {ENDPOINT_ENV})")
        headers = {"Content-Type": "application/json"}
        if self.token:
            headers["Authorization"] = f"Bearer {self.token}"
        req = urllib.request.Request(self.endpoint, data=canonical(body).encode(), headers=headers, method="POST")
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                raw = resp.read()
        except (urllib.error.URLError, OSError) as exc:
            raise TransportError(f"request to {self.endpoint} failed: {exc}") from exc
        try:
            return json.loads(raw)
        except ValueError as exc:
            raise DecodeError(f"response is not JSON: {exc}") from None

    def sample(self, request):
        self.check(request)
        body = encode_request(request)
        path = self.fixture_path(request)
        if self.mode == "replay":
            if not path.exists():
                raise FixtureMiss(f"no fixture {path.name} in {self.fixture_dir}")
            try:
                stored = json.loads(path.read_text())
            except ValueError as exc:
                raise DecodeError(f"fixture {path.name} is not JSON: {exc}") from None
            return decode_response(stored.get("response"), request)
        payload = self._post(body)
        result = decode_response(payload, request)
        if self.mode == "record":
            self.fixture_dir.mkdir(parents=True, exist_ok=True)
            path.write_text(json.dumps({"request": body, "response": payload}, sort_keys=True, indent=1))
        return result
