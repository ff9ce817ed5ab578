"""Local HTTP service behind the scribble studio.

Sessions live in memory under LRU eviction. Within a session, edits and
renders serialize on one lock; distinct sessions proceed in parallel.
Render results and intermediate statistics are cached per session and
dropped exactly when an edit could change them: parameter updates drop
everything, scribble updates drop only the stroke-dependent half.
"""

from __future__ import annotations

import base64
import io
import threading
import time
import uuid
from collections import OrderedDict
from dataclasses import dataclass, field

import numpy as np
from fastapi import Body, FastAPI, File, HTTPException, UploadFile
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, Response
from PIL import Image, UnidentifiedImageError

from cofkit.appshell.config import ConfigError, PipelineConfig
from cofkit.appshell.pipeline import StageError, build_matrix, bundle_doc, quantize_image
from cofkit.filters import (
    SCRIBBLE_BG,
    SCRIBBLE_FG,
    fb_cof,
    iterate,
    propagate_scribbles,
    selective_gray,
)
from cofkit.imagecore import DecodeError, encode_png, load_image

RENDER_MODES = ("filter", "fb", "recolor", "mask")

# keys a client may set; server-side path options stay out of the API
PARAM_KEYS = (
    "k", "grid_spacing", "window", "sigma_s", "sigma_r", "epsilon",
    "iterations", "mode", "seed",
)
EXTRA_KEYS = ("threshold", "rounds")

DEFAULT_MAX_SESSIONS = 8
DEFAULT_MAX_PIXELS = 16_000_000


def encode_rle(raster: np.ndarray) -> dict:
    """Row-major run-length encoding of a tri-state stroke raster."""
    raster = np.asarray(raster)
    h, w = raster.shape
    flat = raster.ravel()
    changes = np.flatnonzero(np.diff(flat)) + 1
    starts = np.concatenate([[0], changes])
    lengths = np.diff(np.concatenate([starts, [flat.size]]))
    return {
        "width": int(w),
        "height": int(h),
        "runs": [[int(flat[s]), int(n)] for s, n in zip(starts, lengths)],
    }


def decode_rle(doc: dict, shape: tuple) -> np.ndarray:
    """Inverse of encode_rle; validates geometry and run contents."""
    if not isinstance(doc, dict):
        raise ValueError("scribble payload must be a JSON object")
    try:
        w, h, runs = int(doc["width"]), int(doc["height"]), doc["runs"]
    except (KeyError, TypeError, ValueError):
        raise ValueError("scribble payload needs width, height, and runs")
    if (h, w) != tuple(shape):
        raise ValueError(f"scribble raster {h}x{w} does not match image {shape[0]}x{shape[1]}")
    if not isinstance(runs, list):
        raise ValueError("runs must be a list of [value, length] pairs")
    values, lengths = [], []
    for run in runs:
        if not isinstance(run, (list, tuple)) or len(run) != 2:
            raise ValueError("runs must be a list of [value, length] pairs")
        v, n = run
        if not isinstance(v, int) or v not in (0, SCRIBBLE_FG, SCRIBBLE_BG):
            raise ValueError(f"run value must be 0, {SCRIBBLE_FG}, or {SCRIBBLE_BG}")
        if not isinstance(n, int) or n < 1:
            raise ValueError("run length must be a positive integer")
        values.append(v)
        lengths.append(n)
    total = sum(lengths)
    if total != w * h:
        raise ValueError(f"runs cover {total} pixels, raster has {w * h}")
    flat = np.repeat(np.array(values, dtype=np.int8), lengths)
    return flat.reshape(shape)


@dataclass
class Session:
    image: np.ndarray
    cfg: PipelineConfig = field(default_factory=PipelineConfig)
    threshold: float = 0.5
    rounds: int = 5
    scribbles: np.ndarray | None = None
    lock: threading.Lock = field(default_factory=threading.Lock)
    stats: dict = field(default_factory=dict)  # palette/guide/m_t/m_f/m_b
    renders: dict = field(default_factory=dict)  # mode -> (png bytes, seconds)

    def drop_all(self):
        self.stats.clear()
        self.renders.clear()

    def drop_stroke_dependent(self):
        self.stats.pop("m_f", None)
        self.stats.pop("m_b", None)
        for mode in ("fb", "recolor", "mask"):
            self.renders.pop(mode, None)

    def params_doc(self) -> dict:
        doc = {key: getattr(self.cfg, key) for key in PARAM_KEYS}
        doc["threshold"] = self.threshold
        doc["rounds"] = self.rounds
        return doc


class SessionStore:
    """LRU map of session id -> Session, safe for concurrent requests."""

    def __init__(self, max_sessions: int):
        self.max_sessions = max_sessions
        self._lock = threading.Lock()
        self._sessions: OrderedDict[str, Session] = OrderedDict()

    def create(self, session: Session) -> str:
        sid = uuid.uuid4().hex[:12]
        with self._lock:
            while len(self._sessions) >= self.max_sessions:
                self._sessions.popitem(last=False)
            self._sessions[sid] = session
        return sid

    def get(self, sid: str) -> Session:
        with self._lock:
            session = self._sessions.get(sid)
            if session is None:
                raise HTTPException(404, f"no session {sid!r}")
            self._sessions.move_to_end(sid)
            return session

    def delete(self, sid: str) -> None:
        with self._lock:
            if self._sessions.pop(sid, None) is None:
                raise HTTPException(404, f"no session {sid!r}")


def _guide(session: Session):
    if "guide" not in session.stats:
        palette, guide = quantize_image(session.image, session.cfg)
        session.stats["palette"] = palette
        session.stats["guide"] = guide
    return session.stats["palette"], session.stats["guide"]


def _matrix_t(session: Session) -> np.ndarray:
    if "m_t" not in session.stats:
        palette, guide = _guide(session)
        session.stats["m_t"] = build_matrix(guide, palette, session.cfg)
    return session.stats["m_t"]


def _matrices_fb(session: Session):
    if "m_f" not in session.stats:
        palette, guide = _guide(session)
        fg = session.scribbles == SCRIBBLE_FG
        bg = session.scribbles == SCRIBBLE_BG
        session.stats["m_f"] = build_matrix(guide, palette, session.cfg, mask=fg)
        session.stats["m_b"] = build_matrix(guide, palette, session.cfg, mask=bg)
    return session.stats["m_f"], session.stats["m_b"]


def _require_strokes(session: Session, need_bg: bool):
    s = session.scribbles
    if s is None or not (s == SCRIBBLE_FG).any():
        raise HTTPException(409, "draw foreground strokes first")
    if need_bg and not (s == SCRIBBLE_BG).any():
        raise HTTPException(409, "draw background strokes first")


def _render(session: Session, mode: str) -> bytes:
    cfg = session.cfg
    params = cfg.filter_params()
    if mode == "filter":
        palette, guide = _guide(session)
        m_t = _matrix_t(session)
        rebuild = None
        if cfg.mode == "rolling":

            def rebuild(current):
                pal2, guide2 = quantize_image(current, cfg)
                return guide2, build_matrix(guide2, pal2, cfg)

        out, _ = iterate(session.image, m_t, params, guide=guide, rebuild=rebuild)
        return encode_png(out)
    if mode == "fb":
        _require_strokes(session, need_bg=True)
        _, guide = _guide(session)
        m_f, m_b = _matrices_fb(session)
        return encode_png(fb_cof(session.image, guide, m_f, m_b, params))
    if mode == "recolor":
        _require_strokes(session, need_bg=True)
        _, guide = _guide(session)
        m_f, m_b = _matrices_fb(session)
        return encode_png(selective_gray(session.image, guide, m_f, m_b, params))
    if mode == "mask":
        _require_strokes(session, need_bg=False)
        _, guide = _guide(session)
        m_t = _matrix_t(session)
        mask = propagate_scribbles(
            session.scribbles, guide, m_t, params,
            threshold=session.threshold, rounds=session.rounds,
        )
        return encode_png(mask.astype(np.float64))
    raise HTTPException(400, f"mode must be one of {RENDER_MODES}")


def create_app(
    max_sessions: int = DEFAULT_MAX_SESSIONS,
    max_pixels: int = DEFAULT_MAX_PIXELS,
) -> FastAPI:
    app = FastAPI(title="cofkit", docs_url=None, redoc_url=None)
    # the studio may be served as static files from another port
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
        expose_headers=["X-Render-Seconds", "X-Render-Cached"],
    )
    store = SessionStore(max_sessions)
    app.state.store = store

    @app.exception_handler(RequestValidationError)
    def _bad_body(request, exc):
        return JSONResponse({"detail": "malformed request body"}, status_code=400)

    @app.post("/session")
    def create_session(image: UploadFile = File(...)):
        data = image.file.read()
        try:
            with Image.open(io.BytesIO(data)) as im:
                w, h = im.size
        except UnidentifiedImageError:
            raise HTTPException(400, "upload is not a decodable image")
        if w * h > max_pixels:
            raise HTTPException(413, f"image has {w * h} pixels, limit is {max_pixels}")
        try:
            raster = load_image(io.BytesIO(data))
        except DecodeError as exc:
            raise HTTPException(400, str(exc))
        sid = store.create(Session(image=raster))
        preview = base64.b64encode(encode_png(raster)).decode("ascii")
        return {"session_id": sid, "width": w, "height": h, "preview": preview}

    @app.put("/session/{sid}/params")
    def set_params(sid: str, payload: dict = Body(...)):
        session = store.get(sid)
        with session.lock:
            cfg_updates, threshold, rounds = {}, session.threshold, session.rounds
            for key, value in payload.items():
                if key == "threshold":
                    if not isinstance(value, (int, float)) or not 0 < value <= 1:
                        raise HTTPException(400, "threshold must be in (0, 1]")
                    threshold = float(value)
                elif key == "rounds":
                    if not isinstance(value, int) or not 1 <= value <= 64:
                        raise HTTPException(400, "rounds must be an integer in [1, 64]")
                    rounds = value
                elif key in PARAM_KEYS:
                    cfg_updates[key] = value
                else:
                    raise HTTPException(400, f"unknown parameter {key!r}")
            try:
                cfg = session.cfg.updated(cfg_updates)
            except ConfigError as exc:
                raise HTTPException(400, str(exc))
            changed = (
                cfg != session.cfg
                or threshold != session.threshold
                or rounds != session.rounds
            )
            session.cfg, session.threshold, session.rounds = cfg, threshold, rounds
            if changed:
                session.drop_all()
            return session.params_doc()

    @app.put("/session/{sid}/scribbles")
    def set_scribbles(sid: str, payload: dict = Body(...)):
        session = store.get(sid)
        with session.lock:
            try:
                raster = decode_rle(payload, session.image.shape[:2])
            except ValueError as exc:
                raise HTTPException(400, str(exc))
            session.scribbles = raster
            session.drop_stroke_dependent()
            return {
                "foreground_pixels": int((raster == SCRIBBLE_FG).sum()),
                "background_pixels": int((raster == SCRIBBLE_BG).sum()),
            }

    @app.post("/session/{sid}/render")
    def render(sid: str, payload: dict = Body(...)):
        mode = payload.get("mode")
        if mode not in RENDER_MODES:
            raise HTTPException(400, f"mode must be one of {RENDER_MODES}")
        session = store.get(sid)
        with session.lock:
            cached = session.renders.get(mode)
            if cached is not None:
                png, seconds = cached
                headers = {"X-Render-Seconds": seconds, "X-Render-Cached": "1"}
                return Response(png, media_type="image/png", headers=headers)
            start = time.perf_counter()
            try:
                png = _render(session, mode)
            except StageError as exc:
                raise HTTPException(500, str(exc))
            seconds = f"{time.perf_counter() - start:.3f}"
            session.renders[mode] = (png, seconds)
            headers = {"X-Render-Seconds": seconds, "X-Render-Cached": "0"}
            return Response(png, media_type="image/png", headers=headers)

    @app.get("/session/{sid}/matrix")
    def get_matrix(sid: str):
        session = store.get(sid)
        with session.lock:
            palette, _ = _guide(session)
            m_t = _matrix_t(session)
            return JSONResponse(bundle_doc(m_t, palette, session.cfg))

    @app.delete("/session/{sid}")
    def delete_session(sid: str):
        store.delete(sid)
        return {"deleted": True}

    return app
