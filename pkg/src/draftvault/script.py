"""Edit scripts and the session runner.

A script is the headless stand-in for interactive editing: one command
per line, ``#`` comments allowed.

    STEP                                  commit accumulated changes as one step
    ADD <kind> <hex>                      stage an element addition
    DEL <kind> <hex>                      stage an element deletion
    MOD <kind> <hex> -> <kind> <hex>      stage delete-old + add-new
    UNDO / REDO                           move the step cursor
    PPCOMMIT <hex>                        store a new parametric blob version
    PPJUMP <n>                            jump the blob history to version n

Changes accumulate between STEP markers and commit as a single change
step; a trailing group without a closing STEP commits at end of script.

The runner drives a whole session: take the document lock, open the
journal, execute commands, tick autosave on a synthetic clock that
advances ``step_seconds`` per executed operation, then save the document,
park the session memory in the sidecar and clean up.  A chronological
``events`` list records engine progress; the crash harness shares that
list with its write-interposition layer to reconstruct what the 'dead'
process had achieved.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .autosave import AutosaveConfig, AutosaveSession, _sha
from .errors import (
    DocumentFrozen,
    NothingToRedo,
    NothingToUndo,
    ScriptError,
)
from .fileio import FileIO
from .journal import FLAG_ADDED, FLAG_DELETED, Change, Journal, make_modify
from .model import Drawing, ElementPayload
from .paths import DocPaths, for_doc
from .ppversions import PPVersionLog
from .sidecar import SidecarState, write_sidecar
from .signatures import guard_edit, load_document, EditGuard, SignedEnvelope, save_document


@dataclass(frozen=True)
class Command:
    op: str
    args: tuple = ()


def _payload(kind_text: str, hex_text: str, lineno: int) -> ElementPayload:
    try:
        return ElementPayload(int(kind_text), bytes.fromhex(hex_text))
    except ValueError as exc:
        raise ScriptError(f"line {lineno}: {exc}") from exc


def parse_script(text: str) -> list[Command]:
    commands: list[Command] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        op = parts[0].upper()
        if op == "STEP" and len(parts) == 1:
            commands.append(Command("STEP"))
        elif op == "ADD" and len(parts) == 3:
            commands.append(Command("ADD", (_payload(parts[1], parts[2], lineno),)))
        elif op == "DEL" and len(parts) == 3:
            commands.append(Command("DEL", (_payload(parts[1], parts[2], lineno),)))
        elif op == "MOD" and len(parts) == 6 and parts[3] == "->":
            old = _payload(parts[1], parts[2], lineno)
            new = _payload(parts[4], parts[5], lineno)
            commands.append(Command("MOD", (old, new)))
        elif op in ("UNDO", "REDO") and len(parts) == 1:
            commands.append(Command(op))
        elif op == "PPCOMMIT" and len(parts) == 2:
            try:
                commands.append(Command("PPCOMMIT", (bytes.fromhex(parts[1]),)))
            except ValueError as exc:
                raise ScriptError(f"line {lineno}: {exc}") from exc
        elif op == "PPJUMP" and len(parts) == 2:
            try:
                commands.append(Command("PPJUMP", (int(parts[1]),)))
            except ValueError as exc:
                raise ScriptError(f"line {lineno}: bad version number") from exc
        else:
            raise ScriptError(f"line {lineno}: cannot parse {raw!r}")
    return commands


@dataclass
class RunResult:
    steps_committed: int = 0
    cursor: int = 0
    step_count: int = 0
    pp_cursor: int | None = None
    pp_count: int = 0
    notices: list[str] = field(default_factory=list)
    aborted: bool = False


def _journal_key(journal: Journal) -> tuple:
    return tuple(
        (s.step_no, tuple((flag, p.kind, p.data) for flag, p in s.changes)) for s in journal.steps
    )


class _AbortRun(Exception):
    pass


class ScriptRunner:
    """Execute an edit script as one document session."""

    def __init__(
        self,
        doc: Path,
        io: FileIO | None = None,
        autosave: AutosaveConfig | None = None,
        start_time: float = 0.0,
        step_seconds: float = 1.0,
        events: list | None = None,
    ):
        self.paths: DocPaths = for_doc(doc)
        self.io = io or FileIO()
        self.autosave_config = autosave
        self.clock = start_time
        self.step_seconds = step_seconds
        self.events = events if events is not None else []

    def run(
        self,
        commands: list[Command],
        abort_after_step: int | None = None,
    ) -> RunResult:
        io = self.io
        paths = self.paths
        if io.exists(paths.doc):
            env = load_document(paths.doc, io)
            if guard_edit(env) is EditGuard.LOCKED:
                raise DocumentFrozen(f"{paths.doc} is signed; editing is rejected")
            drawing = Drawing.from_canonical_bytes(env.document, name=paths.doc.stem)
        else:
            drawing = Drawing(name=paths.doc.stem)

        result = RunResult()
        journal = Journal.begin_session(drawing, paths.journal, io)
        pp_log: PPVersionLog | None = None
        saver: AutosaveSession | None = None
        if self.autosave_config is not None:
            saver = AutosaveSession(
                paths.name, drawing, self.autosave_config, io, started_at=self.clock
            )

        pending: list[Change] = []

        def tick() -> None:
            self.clock += self.step_seconds
            if saver is None:
                return
            pp = saver.current_pp
            self.events.append(
                ("tick_attempt", _sha(drawing.canonical_bytes()), _sha(pp) if pp is not None else None)
            )
            saved = saver.autosave_tick(self.clock)
            if saved is not None:
                self.events.append(("tick_committed", saved.drawing_sha, saved.pp_sha))

        def flush() -> None:
            if not pending:
                return
            journal.commit_step(drawing, list(pending))
            pending.clear()
            result.steps_committed += 1
            self.events.append(("journal_gen", _journal_key(journal)))
            tick()
            if abort_after_step is not None and result.steps_committed >= abort_after_step:
                raise _AbortRun()

        def open_pp() -> PPVersionLog:
            nonlocal pp_log
            if pp_log is None:
                pp_log = PPVersionLog.open(paths.pp_log, io=io)
            return pp_log

        try:
            try:
                for command in commands:
                    if command.op == "ADD":
                        pending.append((FLAG_ADDED, command.args[0]))
                    elif command.op == "DEL":
                        pending.append((FLAG_DELETED, command.args[0]))
                    elif command.op == "MOD":
                        pending.extend(make_modify(*command.args))
                    elif command.op == "STEP":
                        flush()
                    elif command.op == "UNDO":
                        flush()
                        try:
                            journal.undo_step(drawing)
                        except NothingToUndo:
                            result.notices.append("nothing to undo")
                        tick()
                    elif command.op == "REDO":
                        flush()
                        try:
                            journal.redo_step(drawing)
                        except NothingToRedo:
                            result.notices.append("nothing to redo")
                        tick()
                    elif command.op == "PPCOMMIT":
                        log = open_pp()
                        log.commit_pp(command.args[0])
                        self.events.append(("pp_gen", tuple(log.versions)))
                        if saver is not None:
                            saver.set_current_pp(command.args[0])
                        tick()
                    elif command.op == "PPJUMP":
                        log = open_pp()
                        blob = log.jump_pp(command.args[0])
                        if saver is not None:
                            saver.set_current_pp(blob.data)
                        tick()
                flush()
            except _AbortRun:
                result.aborted = True

            result.cursor = journal.cursor
            result.step_count = journal.step_count
            if pp_log is not None:
                result.pp_cursor = pp_log.cursor
                result.pp_count = pp_log.version_count

            if result.aborted:
                # Simulated abnormal end: leave journal, sidecar and autosave
                # set as they are; only the locks are released because the
                # process itself lives on.
                journal.close()
                if pp_log is not None:
                    pp_log.close()
                return result

            save_document(paths.doc, SignedEnvelope(document=drawing.canonical_bytes()), io)
            drawing.mark_saved()
            self.events.append(("doc_saved", _sha(drawing.canonical_bytes())))
            state = SidecarState(
                journal_cursor=journal.cursor,
                pp_cursor=pp_log.cursor if pp_log is not None else None,
                positions={
                    s.step_no: s.positions for s in journal.steps if s.positions is not None
                },
            )
            write_sidecar(paths.sidecar, state, io)
            if saver is not None:
                self.events.append(("shutdown_started",))
                saver.clean_shutdown()
                self.events.append(("clean_shutdown",))
            journal.close()
            if pp_log is not None:
                pp_log.close()
            return result
        except Exception:
            # Orderly failure: this process survives, so it must not leave
            # stale locks behind.  (A simulated crash is BaseException-based
            # and bypasses this on purpose.)
            journal.close()
            if pp_log is not None:
                pp_log.close()
            raise
