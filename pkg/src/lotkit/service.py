"""Local HTTP service backing the annotation UI.

Filesystem is the store: GET/PUT round-trip the canonical annotation JSON,
writes are atomic (temp file + rename) and guarded by an optimistic per-image
revision counter. Image ids are URL-safe hashes of the relative annotation
entry path, so clients never send raw paths.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
from pathlib import Path

from fastapi import FastAPI, HTTPException, Request, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.staticfiles import StaticFiles

from .annotations import (
    AnnotationError,
    DatasetManifest,
    parse_image_annotation,
    write_image_annotation,
)
from .decisions import (
    DecisionError,
    DecisionParams,
    decide_image,
    parse_detections,
)

_IMAGE_TYPES = {".jpg": "image/jpeg", ".jpeg": "image/jpeg", ".png": "image/png",
                ".bmp": "image/bmp", ".webp": "image/webp"}


def entry_id(entry: str) -> str:
    """URL-safe id for a manifest entry path."""
    return hashlib.sha256(entry.encode("utf-8")).hexdigest()[:16]


class SessionState:
    """Mutable service state: manifest binding plus per-image revisions/locks."""

    def __init__(self, manifest: DatasetManifest, images_root: Path | None = None):
        self.manifest = manifest
        self.images_root = images_root or manifest.root
        self.entries = {entry_id(e): e for e in manifest.entries}
        self.revisions = {eid: 1 for eid in self.entries}
        self.locks = {eid: threading.Lock() for eid in self.entries}

    def entry_for(self, image_id: str) -> str:
        entry = self.entries.get(image_id)
        if entry is None:
            raise HTTPException(status_code=404, detail=f"unknown image id {image_id!r}")
        return entry


def create_app(manifest: DatasetManifest, images_root: Path | None = None,
               ui_dir: Path | None = None) -> FastAPI:
    state = SessionState(manifest, images_root)
    app = FastAPI(title="lotkit annotation service")
    app.state.session = state
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["http://localhost:5173", "http://127.0.0.1:5173"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    def read_annotation(entry: str):
        try:
            return state.manifest.read_entry(entry)
        except AnnotationError as exc:
            raise HTTPException(status_code=500, detail=f"{entry}: {exc}") from None

    @app.get("/api/images")
    def list_images():
        out = []
        for eid, entry in sorted(state.entries.items(), key=lambda kv: kv[1]):
            ann = read_annotation(entry)
            out.append({
                "id": eid,
                "path": ann.image,
                "lot_count": len(ann.lots),
                "labeled_count": sum(1 for lot in ann.lots if lot.occupied is not None),
                "tags": sorted(t.value for t in ann.tags),
                "revision": state.revisions[eid],
            })
        return out

    @app.get("/api/images/{image_id}/annotations")
    def get_annotations(image_id: str):
        entry = state.entry_for(image_id)
        ann = read_annotation(entry)
        return Response(
            content=json.dumps({
                "revision": state.revisions[image_id],
                "annotation": json.loads(write_image_annotation(ann)),
            }),
            media_type="application/json",
        )

    @app.put("/api/images/{image_id}/annotations")
    async def put_annotations(image_id: str, request: Request):
        entry = state.entry_for(image_id)
        try:
            body = json.loads(await request.body())
        except json.JSONDecodeError as exc:
            raise HTTPException(status_code=400, detail=f"malformed JSON: {exc}") from None
        if not isinstance(body, dict) or set(body) != {"revision", "annotation"}:
            raise HTTPException(status_code=400,
                                detail="body must have exactly the keys revision, annotation")
        if not isinstance(body["revision"], int):
            raise HTTPException(status_code=400, detail="revision must be an integer")
        try:
            ann = parse_image_annotation(json.dumps(body["annotation"]))
        except AnnotationError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from None
        with state.locks[image_id]:
            current = state.revisions[image_id]
            if body["revision"] != current:
                raise HTTPException(
                    status_code=409,
                    detail=f"stale revision {body['revision']} (current is {current})")
            target = state.manifest.root / entry
            tmp = target.with_name(target.name + ".tmp")
            tmp.write_bytes(write_image_annotation(ann))
            os.replace(tmp, target)
            state.revisions[image_id] = current + 1
            return {"revision": state.revisions[image_id]}

    @app.get("/api/images/{image_id}/file")
    def get_image_file(image_id: str):
        entry = state.entry_for(image_id)
        ann = read_annotation(entry)
        path = state.images_root / ann.image
        if not path.is_file():
            raise HTTPException(status_code=404, detail=f"image file {ann.image!r} not found")
        media = _IMAGE_TYPES.get(path.suffix.lower(), "application/octet-stream")
        return Response(content=path.read_bytes(), media_type=media)

    @app.post("/api/decide-preview")
    async def decide_preview(request: Request):
        try:
            body = json.loads(await request.body())
        except json.JSONDecodeError as exc:
            raise HTTPException(status_code=400, detail=f"malformed JSON: {exc}") from None
        required = {"image_id", "detections", "heuristic", "tau"}
        if not isinstance(body, dict) or set(body) != required:
            raise HTTPException(status_code=400,
                                detail=f"body must have exactly the keys {sorted(required)}")
        entry = state.entry_for(body["image_id"])
        ann = read_annotation(entry)
        try:
            params = DecisionParams(heuristic=body["heuristic"], tau=float(body["tau"]))
            _, detections = parse_detections(json.dumps(
                {"image": ann.image, "detections": body["detections"]}))
            results, _ = decide_image(ann, detections, params)
        except (AnnotationError, DecisionError, TypeError, ValueError) as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from None
        return {
            "image": ann.image,
            "results": [
                {"lot_id": r.lot_id, "ratio": r.ratio, "decided": r.decided,
                 "supporting_detection": r.supporting_detection}
                for r in results
            ],
        }

    if ui_dir is None:
        ui_dir = Path(__file__).resolve().parents[2] / "frontend" / "dist"
    if ui_dir.is_dir():
        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
