"""HTTP bindings for the embedding/attribute service protocol.

Endpoints: GET /info, POST /embed, POST /attributes; JSON bodies. Images
travel as base64-encoded PNG. Vectors come back unit-norm, one per payload
item, in payload order.
"""

from __future__ import annotations

import base64
import io
import uuid

import numpy as np
import requests

from .attributes import AttributeGenError
from .scoring import ProviderFailure


class RemoteUnavailable(AttributeGenError):
    pass


def _png_b64(image: np.ndarray) -> str:
    from PIL import Image

    buf = io.BytesIO()
    Image.fromarray(np.asarray(image, dtype=np.uint8)).save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


class RemoteEmbeddingProvider:
    """EmbeddingProvider backed by a running embed service."""

    def __init__(self, base_url: str, timeout: float = 60.0, session=None):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self._http = session or requests.Session()
        try:
            info = self._http.get(self.base_url + "/info", timeout=self.timeout)
            info.raise_for_status()
        except requests.RequestException as exc:
            raise RemoteUnavailable(f"embed service unreachable: {exc}") from exc
        payload = info.json()
        self.dim = int(payload["dim"])
        self.input_size = payload.get("input_size")
        self.model = payload.get("model", "unknown")

    def _embed(self, kind: str, payload: list) -> np.ndarray:
        request_id = str(uuid.uuid4())
        try:
            resp = self._http.post(
                self.base_url + "/embed",
                json={"id": request_id, "kind": kind, "payload": payload},
                timeout=self.timeout)
        except requests.RequestException as exc:
            raise ProviderFailure(f"embed request failed: {exc}") from exc
        body = resp.json()
        if resp.status_code != 200 or "error" in body:
            err = body.get("error", {})
            raise ProviderFailure(
                f"{err.get('code', resp.status_code)}: {err.get('message', 'embed error')}")
        if body.get("id") != request_id:
            raise ProviderFailure("response id does not match request id")
        vectors = np.asarray(body["vectors"], dtype=np.float64)
        if vectors.shape[0] != len(payload):
            raise ProviderFailure("response vector count does not match payload")
        return vectors

    def embed_images(self, images) -> np.ndarray:
        return self._embed("images", [_png_b64(img) for img in images])

    def embed_texts(self, texts) -> np.ndarray:
        return self._embed("texts", list(texts))


class RemoteAttributeSource:
    """Attribute source that queries the service's LLM-backed /attributes endpoint."""

    def __init__(self, base_url: str, timeout: float = 120.0, session=None):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self._http = session or requests.Session()

    def fetch(self, target: str, n_g: int, n_a: int):
        try:
            resp = self._http.post(
                self.base_url + "/attributes",
                json={"target": target, "n_g": n_g, "n_a": n_a},
                timeout=self.timeout)
        except requests.RequestException as exc:
            raise RemoteUnavailable(f"attribute service unreachable: {exc}") from exc
        body = resp.json()
        if resp.status_code != 200 or "error" in body:
            err = body.get("error", {})
            raise RemoteUnavailable(
                f"{err.get('code', resp.status_code)}: {err.get('message', 'attribute error')}")
        return list(body["geometric"]), list(body["affordance"])
