"""HTTP clients for remote captioning / generation services.

Wire protocol (JSON bodies)::

    POST {base}/caption   {"image_b64": str}                         -> {"caption": str}
    POST {base}/generate  {"prompt": str, "seed": int, "steps": int} -> {"image_b64": str}

Any non-2xx status, timeout or malformed body is retried up to ``retries``
extra times, then surfaces as :class:`~semcomm.errors.TransportError`.
"""

from __future__ import annotations

import base64
import logging
import threading
import time

import httpx

from ..errors import TransportError
from .records import CaptionRecord, ImageRecord, mock_payload_fields

logger = logging.getLogger(__name__)


class _RemoteBackend:
    def __init__(
        self,
        base_url: str,
        *,
        timeout: float = 10.0,
        retries: int = 2,
        backoff: float = 0.2,
        token: str | None = None,
        max_in_flight: int = 4,
        client: httpx.Client | None = None,
    ):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self.retries = retries
        self.backoff = backoff
        self._headers = {"Content-Type": "application/json"}
        if token:
            self._headers["Authorization"] = f"Bearer {token}"
        self._client = client
        self._slots = threading.BoundedSemaphore(max_in_flight)

    def _post(self, path: str, body: dict) -> dict:
        url = f"{self.base_url}{path}"
        last: Exception | None = None
        status = None
        for attempt in range(self.retries + 1):
            if attempt:
                time.sleep(self.backoff * 2 ** (attempt - 1))
            try:
                with self._slots:
                    if self._client is not None:
                        resp = self._client.post(url, json=body, headers=self._headers, timeout=self.timeout)
                    else:
                        resp = httpx.post(url, json=body, headers=self._headers, timeout=self.timeout)
                status = resp.status_code
                if not 200 <= status < 300:
                    last = TransportError(f"{url} returned HTTP {status}", status, attempt + 1)
                    logger.warning("attempt %d: %s", attempt + 1, last)
                    continue
                return resp.json()
            except (httpx.HTTPError, ValueError) as exc:
                last = exc
                logger.warning("attempt %d to %s failed: %s", attempt + 1, url, exc)
        raise TransportError(f"POST {url} failed after {self.retries + 1} attempts: {last}", status, self.retries + 1)


class RemoteCaptioner(_RemoteBackend):
    def caption(self, img: ImageRecord) -> CaptionRecord:
        doc = self._post("/caption", {"image_b64": base64.b64encode(img.payload).decode("ascii")})
        text = doc.get("caption") if isinstance(doc, dict) else None
        if not isinstance(text, str) or not text.strip():
            raise TransportError(f"malformed caption response: {doc!r}")
        return CaptionRecord(img.id, text, "remote")


class RemoteReconstructor(_RemoteBackend):
    def __init__(self, base_url: str, *, seed: int = 0, steps: int = 20, **kw):
        super().__init__(base_url, **kw)
        self.seed = seed
        self.steps = steps

    def reconstruct(self, cap: CaptionRecord) -> ImageRecord:
        doc = self._post("/generate", {"prompt": cap.text, "seed": self.seed, "steps": self.steps})
        encoded = doc.get("image_b64") if isinstance(doc, dict) else None
        if not isinstance(encoded, str):
            raise TransportError(f"malformed generate response: {doc!r}")
        try:
            payload = base64.b64decode(encoded, validate=True)
        except ValueError as exc:
            raise TransportError(f"generate response is not base64: {exc}") from exc
        tag = mock_payload_fields(payload)
        label = tag["label"] if tag else "unknown"
        return ImageRecord(f"{cap.image_id}:rec", label, payload, "remote")

