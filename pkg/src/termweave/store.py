"""Versioned on-disk project store.

Artifacts are content addressed: the id is the SHA-256 of the payload
bytes, so re-saving identical content is a no-op and resolution sweeps
share corpus, ranking, and graph artifacts across runs.  All writes go
through write-temp-then-rename, so readers never observe partial files
and the manifest stays parseable after a crash mid-write.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from pathlib import Path
from typing import Any

from .errors import ArtifactError

_KIND_DIRS = {
    "corpus": "corpus",
    "vocabulary": "corpus",
    "rankings": "rankings",
    "corpus-ranking": "rankings",
    "graph": "graphs",
    "reduced": "graphs",
    "topics": "runs",
    "sheet": "sheets",
    "coherence": "sheets",
    "eval": "eval",
    "compare": "eval",
}

_SUBDIRS = ("corpus", "rankings", "graphs", "runs", "sheets", "eval")

DEFAULT_CONFIG: dict[str, Any] = {
    "annotation": {"stopwords": None, "lexicon": None, "gazetteer": None},
    "ranking": {
        "alpha": 0.85,
        "beta": -0.9,
        "window": 5,
        "idf_floor": 1e-6,
        "tol": 1e-10,
        "max_iter": 500,
        "parts": 20,
        "cutoff": 3,
    },
    "graph": {"reduction": 50.0},
    "detect": {
        "gamma": 1.0,
        "n_rep": 20,
        "n_con": 15,
        "min_size_fraction": 0.10,
        "seed": 0,
    },
    "presentation": {"vectors": None, "delta": 1.0, "tau": 0.25},
    "serve": {"host": "127.0.0.1", "port": 8532},
}


def content_id(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()[:16]


def params_hash(params: dict[str, Any]) -> str:
    canon = json.dumps(params, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(canon).hexdigest()[:16]


def _atomic_write(path: Path, data: bytes) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class Project:
    """A project directory with a manifest of content-addressed artifacts."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self._manifest: dict[str, Any] | None = None

    @property
    def manifest_path(self) -> Path:
        return self.root / "manifest.json"

    @property
    def config_path(self) -> Path:
        return self.root / "config.json"

    def initialized(self) -> bool:
        return self.manifest_path.exists()

    @classmethod
    def init(cls, root: str | Path, config: dict[str, Any] | None = None) -> "Project":
        project = cls(root)
        project.root.mkdir(parents=True, exist_ok=True)
        for sub in _SUBDIRS:
            (project.root / sub).mkdir(exist_ok=True)
        merged = json.loads(json.dumps(DEFAULT_CONFIG))
        for section, values in (config or {}).items():
            merged.setdefault(section, {}).update(values)
        _atomic_write(project.config_path, json.dumps(merged, indent=2).encode())
        if not project.initialized():
            project._write_manifest({"artifacts": {}, "runs": {}, "stages": {}})
        return project

    def config(self) -> dict[str, Any]:
        if not self.config_path.exists():
            return json.loads(json.dumps(DEFAULT_CONFIG))
        return json.loads(self.config_path.read_text())

    def manifest(self) -> dict[str, Any]:
        if self._manifest is None:
            if not self.initialized():
                raise ArtifactError(f"project not initialized: {self.root}")
            try:
                self._manifest = json.loads(self.manifest_path.read_text())
            except json.JSONDecodeError as exc:
                raise ArtifactError(f"corrupt manifest: {exc}") from exc
        return self._manifest

    def _write_manifest(self, manifest: dict[str, Any]) -> None:
        _atomic_write(
            self.manifest_path, json.dumps(manifest, indent=1, sort_keys=True).encode()
        )
        self._manifest = manifest

    # -- artifacts ---------------------------------------------------------

    def save_artifact(
        self,
        kind: str,
        data: bytes,
        name: str,
        meta: dict[str, Any] | None = None,
    ) -> str:
        if kind not in _KIND_DIRS:
            raise ArtifactError(f"unknown artifact kind: {kind!r}")
        if not self.initialized():
            raise ArtifactError(f"project not initialized: {self.root}")
        manifest = self.manifest()
        art_id = content_id(data)
        if art_id in manifest["artifacts"]:
            return art_id
        if "." in name:
            stem, ext = name.rsplit(".", 1)
            fname = f"{stem}-{art_id}.{ext}"
        else:
            fname = f"{name}-{art_id}"
        rel = Path(_KIND_DIRS[kind]) / fname
        path = self.root / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        _atomic_write(path, data)
        manifest["artifacts"][art_id] = {
            "kind": kind,
            "path": str(rel),
            "meta": meta or {},
        }
        self._write_manifest(manifest)
        return art_id

    def load_artifact(self, art_id: str) -> bytes:
        entry = self.manifest()["artifacts"].get(art_id)
        if entry is None:
            raise ArtifactError(f"unknown artifact id: {art_id}")
        path = self.root / entry["path"]
        if not path.exists():
            raise ArtifactError(f"artifact file missing: {path}")
        data = path.read_bytes()
        if content_id(data) != art_id:
            raise ArtifactError(f"artifact checksum mismatch: {path}")
        return data

    def artifact_meta(self, art_id: str) -> dict[str, Any]:
        entry = self.manifest()["artifacts"].get(art_id)
        if entry is None:
            raise ArtifactError(f"unknown artifact id: {art_id}")
        return entry

    def latest(self, kind: str, **match: Any) -> str | None:
        """Most recently registered artifact of a kind whose meta matches."""
        found = None
        for art_id, entry in self.manifest()["artifacts"].items():
            if entry["kind"] != kind:
                continue
            if all(entry["meta"].get(k) == v for k, v in match.items()):
                found = art_id
        return found

    # -- stages and runs ----------------------------------------------------

    def set_stage(self, stage: str, refs: dict[str, Any]) -> None:
        manifest = self.manifest()
        manifest.setdefault("stages", {})[stage] = refs
        self._write_manifest(manifest)

    def stage(self, stage: str) -> dict[str, Any] | None:
        return self.manifest().get("stages", {}).get(stage)

    def register_run(self, run_key: str, record: dict[str, Any]) -> None:
        manifest = self.manifest()
        manifest["runs"][run_key] = record
        self._write_manifest(manifest)

    def run(self, run_key: str) -> dict[str, Any] | None:
        return self.manifest()["runs"].get(run_key)

    def runs(self) -> dict[str, Any]:
        return dict(self.manifest()["runs"])

    def save_run_topics(self, run_key: str, data: bytes, record: dict[str, Any]) -> str:
        """Write runs/<hash>/topics.json and register the run."""
        if not self.initialized():
            raise ArtifactError(f"project not initialized: {self.root}")
        run_dir = self.root / "runs" / run_key
        run_dir.mkdir(parents=True, exist_ok=True)
        _atomic_write(run_dir / "topics.json", data)
        art_id = content_id(data)
        record = dict(record)
        record["topics_artifact"] = art_id
        record["path"] = str(Path("runs") / run_key / "topics.json")
        manifest = self.manifest()
        manifest["artifacts"][art_id] = {
            "kind": "topics",
            "path": record["path"],
            "meta": {"run": run_key},
        }
        manifest["runs"][run_key] = record
        self._write_manifest(manifest)
        return art_id
