"""HTTP service exposing the knowledge-base wire protocol over the mock backends.

Useful as a local stand-in for real captioning / generation services and as
the stub the remote clients are tested against::

    uvicorn semcomm.server:app --port 8080
"""

from __future__ import annotations

import base64
import binascii

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from .kb_bridge import MockCaptioner, MockReconstructor
from .kb_bridge.records import CaptionRecord, ImageRecord, mock_payload_fields


class CaptionRequest(BaseModel):
    image_b64: str


class CaptionResponse(BaseModel):
    caption: str


class GenerateRequest(BaseModel):
    prompt: str = Field(min_length=1)
    seed: int = 0
    steps: int = Field(default=20, ge=1)


class GenerateResponse(BaseModel):
    image_b64: str


def create_app(captioner=None, reconstructor=None) -> FastAPI:
    captioner = captioner or MockCaptioner()
    reconstructor = reconstructor or MockReconstructor()
    app = FastAPI(title="semcomm knowledge-base stub")

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.post("/caption", response_model=CaptionResponse)
    def caption(req: CaptionRequest):
        try:
            payload = base64.b64decode(req.image_b64, validate=True)
        except (binascii.Error, ValueError):
            raise HTTPException(status_code=422, detail="image_b64 is not valid base64")
        tag = mock_payload_fields(payload)
        if tag is None:
            raise HTTPException(status_code=422, detail="payload is not a recognized image")
        img = ImageRecord(tag["id"], tag["label"], payload, "remote", int(tag.get("caption_seed", 0)))
        return CaptionResponse(caption=captioner.caption(img).text)

    @app.post("/generate", response_model=GenerateResponse)
    def generate(req: GenerateRequest):
        out = reconstructor.reconstruct(CaptionRecord("remote", req.prompt, "remote"))
        return GenerateResponse(image_b64=base64.b64encode(out.payload).decode("ascii"))

    return app


app = create_app()
