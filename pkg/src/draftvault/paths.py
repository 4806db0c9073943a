"""Naming conventions for the files that accompany a document."""
from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

AUTOSAVE_DIR_ENV = "DRAFTVAULT_AUTOSAVE_DIR"


@dataclass(frozen=True)
class DocPaths:
    doc: Path

    @property
    def name(self) -> str:
        return self.doc.name

    @property
    def journal(self) -> Path:
        return self.doc.with_name(self.doc.name + ".journal")

    @property
    def pp_log(self) -> Path:
        return self.doc.with_name(self.doc.name + ".pp")

    @property
    def sidecar(self) -> Path:
        return self.doc.with_name(self.doc.name + ".session")

    @property
    def siglog(self) -> Path:
        return self.doc.with_name(self.doc.name + ".siglog")

    def autosave_dir(self, configured: Path | None = None) -> Path:
        env = os.environ.get(AUTOSAVE_DIR_ENV)
        if env:
            return Path(env)
        if configured is not None:
            return Path(configured)
        return self.doc.parent


def for_doc(doc: str | Path) -> DocPaths:
    return DocPaths(Path(doc))
