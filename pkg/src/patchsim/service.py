"""HTTP service wrapping upload, feature indexing, and neighbor queries.

Sessions are kept in memory with least-recently-used eviction. An upload
answers immediately; feature extraction runs inline for small grids and on
a worker thread otherwise, moving the session from `pending` to `ready`
or `failed`. Every error body has the shape {"error": ..., "detail": ...}.
"""

from __future__ import annotations

import logging
import threading
import uuid
from collections import OrderedDict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from fastapi import FastAPI, Request, Response
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from . import __version__
from .errors import (
    DecodeError,
    IndexFormatError,
    InvalidParamsError,
    InvalidPatchSizeError,
    OutOfBoundsError,
    PatchSimError,
)
from .features import FeatureMatrix, normalize_minmax, params_from_mapping
from .grid_features import build_feature_matrix
from .image import GridMeta, PatchGrid, encode_png, decode_image, extract_patches, to_grayscale
from .kdtree import KdTree, kd_build, kd_knn
from .nnsearch import METHOD_KDTREE, query as run_query

log = logging.getLogger("patchsim.service")

STATUS_PENDING = "pending"
STATUS_READY = "ready"
STATUS_FAILED = "failed"

DEFAULT_MAX_SESSIONS = 8
DEFAULT_MAX_UPLOAD_BYTES = 16 << 20
# Grids up to this many patches build inside the upload request.
DEFAULT_SYNC_BUILD_LIMIT = 4096

_ERROR_MAP = {
    DecodeError: ("decode_error", 400),
    IndexFormatError: ("index_format", 400),
    InvalidPatchSizeError: ("invalid_patch_size", 422),
    OutOfBoundsError: ("out_of_bounds", 422),
    InvalidParamsError: ("invalid_params", 422),
}


class ApiError(Exception):
    def __init__(self, status_code: int, error: str, detail: str):
        super().__init__(detail)
        self.status_code = status_code
        self.error = error
        self.detail = detail


@dataclass
class Session:
    image_id: str
    raster: np.ndarray
    grid: PatchGrid
    status: str = STATUS_PENDING
    detail: str = ""
    matrix: FeatureMatrix | None = None
    tree: KdTree | None = None

    def meta_dict(self) -> dict:
        meta: GridMeta = self.grid.meta
        out = {
            "image_id": self.image_id,
            "status": self.status,
            "height": meta.height,
            "width": meta.width,
            "patch_size": meta.patch_size,
            "grid_height": meta.grid_height,
            "grid_width": meta.grid_width,
            "n_patches": meta.n_patches,
        }
        if self.status == STATUS_FAILED:
            out["detail"] = self.detail
        return out


class SessionStore:
    """Thread-safe LRU map of image_id to Session."""

    def __init__(self, max_sessions: int):
        self.max_sessions = max_sessions
        self._lock = threading.Lock()
        self._items: OrderedDict[str, Session] = OrderedDict()

    def put(self, session: Session) -> None:
        with self._lock:
            self._items[session.image_id] = session
            self._items.move_to_end(session.image_id)
            while len(self._items) > self.max_sessions:
                evicted_id, _ = self._items.popitem(last=False)
                log.info("evicted session %s", evicted_id)

    def get(self, image_id: str) -> Session:
        with self._lock:
            session = self._items.get(image_id)
            if session is None:
                raise ApiError(404, "not_found", f"unknown image id {image_id!r}")
            self._items.move_to_end(image_id)
            return session

    def __len__(self) -> int:
        with self._lock:
            return len(self._items)


def _build_session(session: Session, params) -> None:
    try:
        matrix = normalize_minmax(build_feature_matrix(session.grid, params))
        tree = kd_build(matrix)
        kd_knn(tree, matrix.values[0], 1)  # warm the query kernel
        session.matrix = matrix
        session.tree = tree
        session.status = STATUS_READY
    except Exception as exc:  # surfaced through the session state
        log.exception("feature build failed for %s", session.image_id)
        session.detail = str(exc)
        session.status = STATUS_FAILED


_FEATURE_QUERY_KEYS = (
    "lbp_points",
    "lbp_radius",
    "glcm_offset",
    "glcm_levels",
    "gabor_lambda",
    "gabor_theta",
    "gabor_psi",
    "gabor_sigma",
    "gabor_gamma",
)


def create_app(
    max_sessions: int = DEFAULT_MAX_SESSIONS,
    max_upload_bytes: int = DEFAULT_MAX_UPLOAD_BYTES,
    sync_build_limit: int = DEFAULT_SYNC_BUILD_LIMIT,
    cors_origins: tuple[str, ...] = ("*",),
) -> FastAPI:
    app = FastAPI(title="patchsim", version=__version__)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=list(cors_origins),
        allow_methods=["*"],
        allow_headers=["*"],
    )
    store = SessionStore(max_sessions)
    executor = ThreadPoolExecutor(max_workers=2, thread_name_prefix="patchsim-build")
    app.state.sessions = store

    @app.exception_handler(ApiError)
    async def _on_api_error(request: Request, exc: ApiError):
        return JSONResponse(
            {"error": exc.error, "detail": exc.detail}, status_code=exc.status_code
        )

    @app.exception_handler(PatchSimError)
    async def _on_domain_error(request: Request, exc: PatchSimError):
        error, status = _ERROR_MAP.get(type(exc), ("internal_error", 500))
        return JSONResponse({"error": error, "detail": str(exc)}, status_code=status)

    @app.exception_handler(RequestValidationError)
    async def _on_validation_error(request: Request, exc: RequestValidationError):
        return JSONResponse(
            {"error": "invalid_params", "detail": str(exc.errors())}, status_code=422
        )

    @app.get("/")
    def root() -> dict:
        return {"service": "patchsim", "version": __version__}

    @app.post("/images", status_code=202)
    async def upload(request: Request, patch_size: int = 32):
        body = await request.body()
        if len(body) > max_upload_bytes:
            raise ApiError(
                413,
                "payload_too_large",
                f"upload of {len(body)} bytes exceeds the {max_upload_bytes} limit",
            )
        if not body:
            raise ApiError(400, "decode_error", "empty request body")
        raw_params = {
            key: request.query_params[key]
            for key in _FEATURE_QUERY_KEYS
            if key in request.query_params
        }
        params = params_from_mapping(raw_params)
        raster = decode_image(body)
        gray = to_grayscale(raster)
        grid = extract_patches(gray, patch_size)
        session = Session(image_id=uuid.uuid4().hex[:16], raster=raster, grid=grid)
        store.put(session)
        if grid.n_patches <= sync_build_limit:
            _build_session(session, params)
        else:
            executor.submit(_build_session, session, params)
        return session.meta_dict()

    @app.get("/images/{image_id}")
    def image_meta(image_id: str) -> dict:
        return store.get(image_id).meta_dict()

    def _ready_session(image_id: str) -> Session:
        session = store.get(image_id)
        if session.status == STATUS_PENDING:
            raise ApiError(409, "not_ready", "feature extraction is still running")
        if session.status == STATUS_FAILED:
            raise ApiError(409, "build_failed", session.detail)
        return session

    @app.get("/images/{image_id}/neighbors")
    def neighbors(
        image_id: str,
        x: int,
        y: int,
        k: int = 5,
        method: str = "brute",
        metric: str | None = None,
        exclude_self: bool = False,
    ) -> dict:
        session = _ready_session(image_id)
        assert session.matrix is not None
        patch_id = session.grid.patch_id(x, y)
        tree = session.tree if method == METHOD_KDTREE else None
        result = run_query(
            session.matrix,
            patch_id,
            k,
            method=method,
            metric=metric,
            tree=tree,
            exclude_self=exclude_self,
        )
        payload = result.to_dict()
        payload["image_id"] = image_id
        payload["clicked"] = {"x": x, "y": y}
        return payload

    @app.get("/images/{image_id}/patches/{patch_id}.png")
    def patch_png(image_id: str, patch_id: int) -> Response:
        session = _ready_session(image_id)
        view = session.grid.view(patch_id)
        return Response(content=encode_png(view.pixels), media_type="image/png")

    return app


__all__ = ["create_app", "ApiError", "Session", "SessionStore"]
