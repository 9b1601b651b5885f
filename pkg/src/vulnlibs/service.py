"""Local triage service: walks a chronological queue of reports, serves
adjusted predictions with cache/version provenance, and folds human label
confirmations back into the recency cache."""

from __future__ import annotations

import json
import logging
import threading
from datetime import datetime, timezone
from pathlib import Path

from fastapi import FastAPI, HTTPException, Response
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel

from .corpus import Dataset
from .evaluation import aggregate, precision_recall_at_k
from .pipeline import TrainedPipeline, extend_universe
from .temporal import LruCache, VersionStore, insert_ground_truth

log = logging.getLogger(__name__)


class ConfirmBody(BaseModel):
    labels: list[str]
    create: bool = False


class TriageSession:
    """Single-analyst session; confirmations are strictly sequential so the
    cache state is always the fold of the audit log."""

    def __init__(
        self,
        pipeline: TrainedPipeline,
        queue: Dataset,
        k: int | None = None,
        session_path: str | Path | None = None,
        cache: LruCache | None = None,
    ):
        self.pipeline = pipeline
        self.queue = sorted(queue.reports, key=lambda r: (r.published, r.id))
        self.k = k or pipeline.config.top_k
        self.session_path = Path(session_path) if session_path else None
        self.cache = cache if cache is not None else pipeline.new_cache()
        self.store: VersionStore = pipeline.version_store()
        self.position = 0
        self.audit: list[dict] = []
        self.lock = threading.Lock()
        extend_universe(pipeline, [lid for r in self.queue for lid in r.labels])

    # -- queue ------------------------------------------------------------

    def current_report(self):
        if self.position >= len(self.queue):
            return None
        return self.queue[self.position]

    def _predictions(self, report) -> tuple[list[dict], float]:
        ranked, result = self.pipeline.adjusted_predictions(report, self.store, self.cache, self.k)
        rows = []
        for item in ranked:
            recency = self.cache.recency_index(item.label)
            rows.append(
                {
                    "label": item.label,
                    "score": item.score,
                    "in_cache": recency is not None,
                    "recency_index": recency,
                    "version_transferred": item.label in result.transferred,
                }
            )
        return rows, result.boost_base

    def next_payload(self) -> dict | None:
        report = self.current_report()
        if report is None:
            return None
        predictions, boost_base = self._predictions(report)
        params = self.pipeline.config.adjustment_params()
        return {
            "report": {
                "id": report.id,
                "published": report.published.isoformat(),
                "description": report.description,
                "references": [
                    {"url": ref.url, "title": ref.title, "text": ref.text}
                    for ref in report.references
                ],
                "cpe": report.cpe_entries,
            },
            "predictions": predictions,
            "adjustment": {
                "boost_base": boost_base,
                "magnitude": params.magnitude,
                "window": params.top_window,
            },
            "position": self.position,
            "remaining": len(self.queue) - self.position,
            "total": len(self.queue),
        }

    # -- confirmation -----------------------------------------------------

    def confirm(self, report_id: str, labels: list[str], create: bool = False) -> dict:
        with self.lock:
            known = {r.id for r in self.queue}
            if report_id not in known:
                raise KeyError(report_id)
            current = self.current_report()
            if current is None or current.id != report_id:
                raise PermissionError(
                    f"report {report_id} is not the head of the queue; confirmations are sequential"
                )
            canonical = sorted(set(labels))
            unknown = [lid for lid in canonical if lid not in self.pipeline.labels]
            if unknown and not create:
                raise ValueError(f"unknown labels {unknown}; pass create=true to add them")
            if unknown:
                extend_universe(self.pipeline, unknown)
                self.store = VersionStore.build(self.pipeline.label_ids)
            predicted, _ = self._predictions(current)
            insert_ground_truth(self.cache, canonical)
            self.audit.append(
                {
                    "report_id": report_id,
                    "labels": canonical,
                    "predicted": [row["label"] for row in predicted],
                    "timestamp": datetime.now(timezone.utc).isoformat(),
                }
            )
            self.position += 1
            self.persist()
            nxt = self.current_report()
            return {
                "confirmed": canonical,
                "cache": {"size": len(self.cache), "front": list(self.cache.labels[:10])},
                "next_id": nxt.id if nxt else None,
            }

    # -- stats ------------------------------------------------------------

    def stats(self) -> dict:
        scored = [entry for entry in self.audit if entry["labels"]]
        metrics = None
        if scored:
            per_report = {
                k: [
                    precision_recall_at_k(entry["predicted"], set(entry["labels"]), k)
                    for entry in scored
                ]
                for k in (1, 2, 3)
            }
            metrics = aggregate(per_report).to_json_dict()
        train_seen = set(self.pipeline.train_label_ids)
        unseen_hits = 0
        for entry in scored:
            top = set(entry["predicted"][: self.k])
            unseen_hits += len((set(entry["labels"]) & top) - train_seen)
        return {
            "confirmed": len(self.audit),
            "remaining": len(self.queue) - self.position,
            "cache": {"size": len(self.cache), "capacity": self.cache.capacity},
            "metrics": metrics,
            "unseen_label_hits": unseen_hits,
        }

    def search_labels(self, query: str, limit: int = 20) -> list[str]:
        query = query.strip().lower()
        if not query:
            return []
        prefix = [lid for lid in self.pipeline.label_ids if lid.startswith(query)]
        inner = [lid for lid in self.pipeline.label_ids if query in lid and not lid.startswith(query)]
        return (prefix + inner)[:limit]

    # -- persistence ------------------------------------------------------

    def persist(self) -> None:
        if self.session_path is None:
            return
        payload = {
            "position": self.position,
            "k": self.k,
            "cache": self.cache.to_dict(),
            "audit": self.audit,
        }
        self.session_path.write_text(json.dumps(payload, sort_keys=True) + "\n", encoding="utf-8")

    def restore(self) -> None:
        if self.session_path is None or not self.session_path.exists():
            return
        payload = json.loads(self.session_path.read_text(encoding="utf-8"))
        self.position = payload["position"]
        self.k = payload["k"]
        self.cache = LruCache.from_dict(payload["cache"])
        self.audit = list(payload["audit"])
        created = [lid for entry in self.audit for lid in entry["labels"]]
        extend_universe(self.pipeline, created)
        self.store = VersionStore.build(self.pipeline.label_ids)


def create_app(session: TriageSession) -> FastAPI:
    app = FastAPI(title="vulnlibs triage", docs_url=None, redoc_url=None)
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    @app.get("/session/next")
    def session_next():
        payload = session.next_payload()
        if payload is None:
            return Response(status_code=204)
        return payload

    @app.post("/reports/{report_id}/labels")
    def confirm(report_id: str, body: ConfirmBody):
        try:
            return session.confirm(report_id, body.labels, body.create)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown report {report_id}")
        except PermissionError as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc))

    @app.get("/stats")
    def stats():
        return session.stats()

    @app.get("/labels/search")
    def labels_search(q: str = ""):
        return {"labels": session.search_labels(q)}

    return app


def serve(session: TriageSession, host: str = "127.0.0.1", port: int = 8764) -> None:
    import uvicorn

    uvicorn.run(create_app(session), host=host, port=port, log_level="warning")
