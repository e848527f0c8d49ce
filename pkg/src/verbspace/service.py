"""Read-only retrieval service over an immutable index snapshot.

Every endpoint is a thin wrapper over the retrieval library; responses are
content-equivalent to the corresponding library call and carry the active
vocabulary fingerprint. The index is loaded once at startup; a fingerprint
mismatch between index and vocabulary refuses to serve (the HTTP-facing
409 condition). Snapshot reloads require a restart.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel, Field

from . import retrieval
from .annotations import bundle_to_dict
from .vocab import VerbVocabulary, VocabularyError, load_vocabulary

DEFAULT_PAGE_SIZE = 50


@dataclass(frozen=True)
class ServiceConfig:
    index_path: Path
    vocab_path: Path
    host: str = "127.0.0.1"
    port: int = 8000
    cors_origins: tuple[str, ...] = ()


class TextQuery(BaseModel):
    verbs: list[str] = Field(min_length=1)
    mode: str = "min"
    limit: int = DEFAULT_PAGE_SIZE  # 0 = everything
    offset: int = 0


class VideoQuery(BaseModel):
    video_id: str
    cross_dataset: bool = False
    limit: int = DEFAULT_PAGE_SIZE
    offset: int = 0


def _page(items, limit: int, offset: int):
    if limit < 0 or offset < 0:
        raise HTTPException(status_code=400, detail="limit and offset must be >= 0")
    window = items[offset:] if limit == 0 else items[offset : offset + limit]
    return window


def _result_payload(result: retrieval.RetrievalResult, fingerprint: str,
                    limit: int, offset: int) -> dict:
    window = _page(result.items, limit, offset)
    return {
        "fingerprint": fingerprint,
        "query": result.query,
        "total": len(result.items),
        "offset": offset,
        "results": [{"video_id": vid, "score": score} for vid, score in window],
    }


def create_app(
    cfg: ServiceConfig,
    vocab: VerbVocabulary | None = None,
    index: retrieval.VerbSpaceIndex | None = None,
) -> FastAPI:
    """Build the service over a loaded snapshot (paths, or objects in tests)."""
    if vocab is None:
        vocab = load_vocabulary(cfg.vocab_path)
    fingerprint = vocab.fingerprint()
    if index is None:
        # raises FingerprintMismatch when the index was built elsewhere
        index = retrieval.load_index(cfg.index_path, expected_fingerprint=fingerprint)
    elif index.fingerprint != fingerprint:
        from .model import FingerprintMismatch

        raise FingerprintMismatch(
            "index fingerprint does not match the vocabulary; refusing to serve"
        )

    app = FastAPI(title="verbspace", version="1.0")
    if cfg.cors_origins:
        app.add_middleware(
            CORSMiddleware,
            allow_origins=list(cfg.cors_origins),
            allow_methods=["GET", "POST"],
            allow_headers=["*"],
        )

    @app.get("/v1/vocab")
    def get_vocab():
        return {
            "fingerprint": fingerprint,
            "verbs": [
                {"lemma": lemma, "type": vocab.verb_type[lemma], "index": j}
                for j, lemma in enumerate(vocab.verbs)
            ],
        }

    @app.get("/v1/datasets")
    def get_datasets():
        counts: dict[str, int] = {}
        for item in index.items:
            counts[item.dataset_id] = counts.get(item.dataset_id, 0) + 1
        return {
            "fingerprint": fingerprint,
            "datasets": [{"id": k, "videos": v} for k, v in counts.items()],
        }

    @app.get("/v1/videos/{video_id}")
    def get_video(video_id: str):
        try:
            item = index.get(video_id)
        except retrieval.UnknownVideo:
            raise HTTPException(status_code=404, detail=f"unknown video id {video_id!r}")
        return {
            "fingerprint": fingerprint,
            "video_id": item.video_id,
            "dataset_id": item.dataset_id,
            "scores": item.scores.tolist(),
            "gt": bundle_to_dict(item.gt) if item.gt is not None else None,
        }

    @app.post("/v1/retrieve/text")
    def retrieve_text(query: TextQuery):
        try:
            result = retrieval.text_to_video(set(query.verbs), index, vocab, query.mode)
        except VocabularyError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        except retrieval.RetrievalError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return _result_payload(result, fingerprint, query.limit, query.offset)

    @app.post("/v1/retrieve/video")
    def retrieve_video(query: VideoQuery):
        try:
            result = retrieval.video_to_video(query.video_id, index, query.cross_dataset)
        except retrieval.UnknownVideo:
            raise HTTPException(
                status_code=404, detail=f"unknown video id {query.video_id!r}"
            )
        except retrieval.RetrievalError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return _result_payload(result, fingerprint, query.limit, query.offset)

    return app
