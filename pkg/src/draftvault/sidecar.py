"""Session-state sidecar (``<doc>.session``).

The journal file format carries no cursor and no positions: both are
session memory.  The CLI, however, spreads one logical editing session
over several process invocations (edit, then undo, then redo ...), so it
parks that session memory in a small text sidecar between commands.  A
missing or damaged sidecar only costs precision, never correctness: the
cursor falls back to the full step count and undo falls back to
content-matched (multiset) restore.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .fileio import FileIO, crc32_of

BANNER = "draftvault-session v1"


@dataclass
class SidecarState:
    journal_cursor: int | None = None
    pp_cursor: int | None = None
    positions: dict[int, list[int]] = field(default_factory=dict)


def write_sidecar(path: Path, state: SidecarState, io: FileIO | None = None) -> None:
    io = io or FileIO()
    lines = [BANNER]
    if state.journal_cursor is not None:
        lines.append(f"journal_cursor={state.journal_cursor}")
    if state.pp_cursor is not None:
        lines.append(f"pp_cursor={state.pp_cursor}")
    for step_no in sorted(state.positions):
        joined = ",".join(str(p) for p in state.positions[step_no])
        lines.append(f"step={step_no}:{joined}")
    body = ("\n".join(lines) + "\n").encode()
    io.write_atomic(path, body + f"crc={crc32_of(body):08x}\n".encode())


def read_sidecar(path: Path, io: FileIO | None = None) -> SidecarState:
    io = io or FileIO()
    state = SidecarState()
    try:
        text = io.read_bytes(path).decode("utf-8", errors="replace")
    except OSError:
        return state
    head, _, tail = text.rpartition("crc=")
    try:
        if not head or crc32_of(head.encode()) != int(tail.strip(), 16):
            return SidecarState()
        lines = head.splitlines()
        if not lines or lines[0] != BANNER:
            return SidecarState()
        for line in lines[1:]:
            key, _, value = line.partition("=")
            if key == "journal_cursor":
                state.journal_cursor = int(value)
            elif key == "pp_cursor":
                state.pp_cursor = int(value)
            elif key == "step":
                step_no, _, rest = value.partition(":")
                state.positions[int(step_no)] = [int(p) for p in rest.split(",") if p]
    except ValueError:
        return SidecarState()
    return state
