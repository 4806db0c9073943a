"""Session-scoped, step-grouped undo/redo over an append-only work file.

Every user-visible change is one *step*: an ordered run of atomic
add/delete records applied to the drawing as a unit, like a transaction.
An attribute modification is modelled as delete-old + add-new.  The work
file holds the records of the current session only; a fresh session
truncates it.

Work file layout (little-endian):

    magic "TCGJ" | u16 version
    per record: u32 step_no | u8 flag | u16 kind | u32 payload_len |
                payload | u32 crc32(preceding record bytes)

Flags: 0x00 element deleted, 0x01 element added, 0x02 step commit (kind
and payload_len forced to zero).  A step is durable once its commit record
is on disk; crash recovery keeps the longest prefix of committed steps and
drops everything after it.

Undo replays a step's records in strictly reverse order, inverting each:
an added element is removed again, a deleted element is reinserted at the
position it was removed from.  Record order within a step matters whenever
the same payload appears twice (delete x then add x), which is why the
reverse discipline is unconditional.  Positions are session memory: they
are captured while applying forward and are not part of the file format.
The cursor (count of applied steps) is session memory as well.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

from . import _kernels
from .errors import IoFailure, Locked, NotFound, NothingToRedo, NothingToUndo, BadHeader
from .fileio import FileIO, crc32_of
from .locks import SessionLock
from .model import Drawing, ElementPayload

MAGIC = b"TCGJ"
FORMAT_VERSION = 1
HEADER = MAGIC + struct.pack("<H", FORMAT_VERSION)
HEADER_LEN = len(HEADER)

FLAG_DELETED = 0x00
FLAG_ADDED = 0x01
FLAG_COMMIT = 0x02

RECORD_OVERHEAD = 15  # fixed header (11) + crc (4)

_REC_HEAD = struct.Struct("<IBHI")
_U32 = struct.Struct("<I")

Change = tuple[int, ElementPayload]


@dataclass
class ChangeStep:
    """One committed step: its records plus (when known) the list index each
    record touched, parallel to ``changes``.  Positions exist only in session
    memory; a step parsed back from disk has ``positions = None``."""

    step_no: int
    changes: list[Change]
    positions: list[int] | None = field(default=None, repr=False)

    def added_count(self) -> int:
        return sum(1 for flag, _ in self.changes if flag == FLAG_ADDED)

    def deleted_count(self) -> int:
        return sum(1 for flag, _ in self.changes if flag == FLAG_DELETED)


def make_modify(old: ElementPayload, new: ElementPayload) -> list[Change]:
    """A modification is delete-the-old then add-the-new, in that order."""
    return [(FLAG_DELETED, old), (FLAG_ADDED, new)]


def encode_record(step_no: int, flag: int, kind: int, payload: bytes) -> bytes:
    body = _REC_HEAD.pack(step_no, flag, kind, len(payload)) + payload
    return body + _U32.pack(crc32_of(body))


def encode_step(step_no: int, changes: list[Change]) -> bytes:
    parts = [encode_record(step_no, flag, p.kind, p.data) for flag, p in changes]
    parts.append(encode_record(step_no, FLAG_COMMIT, 0, b""))
    return b"".join(parts)


def _apply_forward(
    elements: list[ElementPayload], changes: list[Change]
) -> tuple[list[ElementPayload], list[int]]:
    """Apply changes to a copy of the element list; NotFound leaves the
    original untouched.  Returns the new list and the touched positions."""
    work = list(elements)
    positions = []
    for flag, payload in changes:
        if flag == FLAG_ADDED:
            work.append(payload)
            positions.append(len(work) - 1)
        elif flag == FLAG_DELETED:
            for i in range(len(work) - 1, -1, -1):
                if work[i] == payload:
                    break
            else:
                raise NotFound(f"delete of kind={payload.kind} found no matching element")
            work.pop(i)
            positions.append(i)
        else:
            raise ValueError(f"invalid change flag {flag}")
    return work, positions


def _apply_reverse(
    elements: list[ElementPayload],
    changes: list[Change],
    positions: list[int] | None,
) -> list[ElementPayload]:
    """Invert a step on a copy of the element list, strictly last record
    first.  With recorded positions the pre-step list is reproduced exactly;
    without them (journal reloaded from disk) deleted elements are appended,
    which restores the same multiset but not necessarily the same order."""
    work = list(elements)
    if positions is None:
        for flag, payload in reversed(changes):
            if flag == FLAG_ADDED:
                for i in range(len(work) - 1, -1, -1):
                    if work[i] == payload:
                        break
                else:
                    raise NotFound("undo diverged: added element is missing")
                work.pop(i)
            else:
                work.append(payload)
        return work
    for (flag, payload), pos in zip(reversed(changes), reversed(positions)):
        if flag == FLAG_ADDED:
            if pos >= len(work) or work[pos] != payload:
                raise NotFound("undo diverged: recorded position does not match")
            work.pop(pos)
        else:
            if pos > len(work):
                raise NotFound("undo diverged: recorded position out of range")
            work.insert(pos, payload)
    return work


class Journal:
    """The undo/redo machine for one editing session.

    steps[0:cursor] are applied to the drawing; steps[cursor:] is the redo
    tail.  All mutating calls assume the single-session ownership enforced
    by the lock file at ``<path>.lock``.
    """

    def __init__(self, path: Path, io: FileIO, lock: SessionLock | None):
        self.path = Path(path)
        self._io = io
        self._lock = lock
        self.steps: list[ChangeStep] = []
        self.cursor = 0
        self._step_ends: list[int] = []  # file offset just past each step

    # -- session lifecycle ------------------------------------------------

    @classmethod
    def begin_session(cls, drawing: Drawing, path: Path, io: FileIO | None = None) -> "Journal":
        """Start a fresh session: truncate any previous work file and take
        the session lock.  Raises Locked if a live session owns the file."""
        io = io or FileIO()
        path = Path(path)
        lock = SessionLock(path).acquire()
        try:
            io.write_file(path, HEADER)
        except OSError as exc:
            lock.release()
            raise IoFailure(f"cannot initialize journal {path}: {exc}") from exc
        except BaseException:
            lock.release()
            raise
        return cls(path, io, lock)

    @classmethod
    def resume(
        cls,
        path: Path,
        io: FileIO | None = None,
        cursor: int | None = None,
        positions: dict[int, list[int]] | None = None,
    ) -> "Journal":
        """Reopen an existing work file as a continuation of its session.

        Parses the valid prefix (repairing a torn tail), re-applies session
        memory (cursor, per-step positions) captured by the previous
        process, and takes the session lock."""
        io = io or FileIO()
        path = Path(path)
        lock = SessionLock(path).acquire()
        try:
            journal, _ = _load(path, io, repair=True)
        except BaseException:
            lock.release()
            raise
        journal._lock = lock
        journal.cursor = len(journal.steps) if cursor is None else min(cursor, len(journal.steps))
        if positions:
            for step in journal.steps:
                pos = positions.get(step.step_no)
                if pos is not None and len(pos) == len(step.changes):
                    step.positions = pos
        return journal

    def close(self) -> None:
        if self._lock is not None:
            self._lock.release()
            self._lock = None

    def _require_session(self) -> None:
        if self._lock is None or not self._lock.held:
            raise Locked("journal is not owned by a live session")

    # -- queries -----------------------------------------------------------

    @property
    def step_count(self) -> int:
        return len(self.steps)

    def _prefix_end(self, step_count: int) -> int:
        return self._step_ends[step_count - 1] if step_count else HEADER_LEN

    # -- mutations -----------------------------------------------------------

    def commit_step(self, drawing: Drawing, changes: list[Change]) -> int:
        """Apply one step to the drawing and journal it durably.

        Any redo tail beyond the cursor is truncated from the file first
        (history is linear).  On NotFound the drawing, the file and the
        cursor are all unchanged.  On an append failure the file is repaired
        back to the last commit record and IoFailure is raised."""
        self._require_session()
        if not changes:
            raise ValueError("a change step must contain at least one change")
        new_elements, positions = _apply_forward(drawing.elements, changes)

        if self.cursor < len(self.steps):
            keep_end = self._prefix_end(self.cursor)
            try:
                self._io.truncate(self.path, keep_end)
            except OSError as exc:
                raise IoFailure(f"cannot drop redo tail: {exc}") from exc
            del self.steps[self.cursor :]
            del self._step_ends[self.cursor :]

        step_no = self.cursor + 1
        buf = encode_step(step_no, changes)
        file_end = self._prefix_end(len(self.steps))
        try:
            self._io.append(self.path, buf)
        except OSError as exc:
            try:
                self._io.truncate(self.path, file_end)
            except OSError:
                pass
            raise IoFailure(f"journal append failed: {exc}") from exc

        self.steps.append(ChangeStep(step_no, list(changes), positions))
        self._step_ends.append(file_end + len(buf))
        self.cursor = step_no
        drawing.replace_elements(new_elements)
        return step_no

    def undo_step(self, drawing: Drawing) -> None:
        """Take back the latest applied step; the file is not touched."""
        if self.cursor < 1:
            raise NothingToUndo("cursor is at the session start")
        step = self.steps[self.cursor - 1]
        new_elements = _apply_reverse(drawing.elements, step.changes, step.positions)
        self.cursor -= 1
        drawing.replace_elements(new_elements)

    def redo_step(self, drawing: Drawing) -> None:
        """Re-apply the first step of the redo tail."""
        if self.cursor >= len(self.steps):
            raise NothingToRedo("no steps beyond the cursor")
        step = self.steps[self.cursor]
        new_elements, positions = _apply_forward(drawing.elements, step.changes)
        step.positions = positions
        self.cursor += 1
        drawing.replace_elements(new_elements)


def parse_journal_bytes(data: bytes) -> tuple[list[ChangeStep], int]:
    """The recovery brain: longest prefix of complete steps in ``data`` and
    the offset where it ends.  Raises BadHeader when the magic or version
    is wrong (including a header torn mid-write)."""
    try:
        raw_steps, valid_end = _kernels.scan_journal(data)
    except ValueError as exc:
        raise BadHeader(str(exc)) from exc
    steps = [
        ChangeStep(step_no, [(flag, ElementPayload(kind, payload)) for flag, kind, payload in records])
        for step_no, records in raw_steps
    ]
    return steps, valid_end


def _load(path: Path, io: FileIO, repair: bool) -> tuple[Journal, bool]:
    data = io.read_bytes(path)
    try:
        steps, valid_end = parse_journal_bytes(data)
    except BadHeader as exc:
        raise BadHeader(f"{path}: {exc}") from exc
    truncated = valid_end < len(data)
    if truncated and repair:
        io.truncate(path, valid_end)
    journal = Journal(path, io, lock=None)
    journal.steps = steps
    pos = HEADER_LEN
    for step in journal.steps:
        pos += sum(RECORD_OVERHEAD + len(p.data) for _, p in step.changes) + RECORD_OVERHEAD
        journal._step_ends.append(pos)
    return journal, truncated


def recover_journal(path: Path, io: FileIO | None = None) -> tuple[Journal, bool]:
    """Parse the longest prefix of complete steps and physically truncate
    the file to it.

    Returns the recovered journal (cursor at 0: nothing is applied to any
    in-memory drawing yet; redo from a copy of the session-start drawing
    replays the recovered work) and whether trailing bytes were dropped.
    Must not run while a session owns the file.
    """
    io = io or FileIO()
    return _load(Path(path), io, repair=True)


def inspect_journal(path: Path, io: FileIO | None = None) -> tuple[Journal, bool]:
    """Read-only variant of recover_journal: a torn tail is skipped but the
    file is left untouched."""
    io = io or FileIO()
    return _load(Path(path), io, repair=False)
