"""Deterministic crash-fault injection.

A simulated crash is a write-interposition layer, not a real process
kill: every persisted byte flows through :class:`FaultyIO`, which counts
the bytes written to one targeted file stream and aborts the run at an
exact offset - finishing a partial write first, so torn files look the
way a power cut leaves them.  Metadata operations (rename, truncate,
unlink) count one budget unit each, which makes the gaps *between*
writes sweepable offsets too.

The abort is a BaseException on purpose: none of the engine's error
handling may intercept it, exactly as no repair code runs when the power
goes out.  After the 'crash' the harness releases the zombie session
locks (the real process is still alive, so pid-liveness cannot), runs
the normal recovery paths, and checks the outcome against what the dead
session provably achieved - its event log - reporting every invariant
violation.  A fault sweep runs this once per byte offset of the write
stream and demands zero violations everywhere.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .autosave import AutosaveConfig, probe_recovery, restore
from .errors import BadHeader, Corrupt, DraftVaultError
from .fileio import FileIO
from .journal import recover_journal
from .locks import force_release
from .model import Drawing
from .paths import for_doc
from .ppversions import recover_pp_log
from .script import Command, ScriptRunner, parse_script
from .signatures import load_document

TARGETS = ("journal", "autosave", "pp-log", "envelope")


class CrashSimulated(BaseException):
    """The simulated power cut; must never be caught by engine code."""


@dataclass(frozen=True)
class FaultPlan:
    kill_at_byte: int
    target: str  # one of TARGETS

    def __post_init__(self):
        if self.target not in TARGETS:
            raise ValueError(f"target must be one of {TARGETS}")
        if self.kill_at_byte < 0:
            raise ValueError("kill_at_byte must be non-negative")


class FaultyIO(FileIO):
    """FileIO that dies at an exact offset of one file stream.

    Streams are classified by name: ``*.journal``, ``*.autosave.*``,
    ``*.pp``, and the document file itself ("envelope").  fsync is a
    no-op here; the simulated disk is simply what was written.
    """

    def __init__(self, plan: FaultPlan, doc: Path, events: list | None = None):
        super().__init__(fsync_enabled=False)
        self.plan = plan
        self.doc = Path(doc)
        self.events = events if events is not None else []
        self.budget_left = plan.kill_at_byte
        self.total_written = 0

    def classify(self, path: Path) -> str:
        name = Path(path).name
        if ".autosave." in name:
            return "autosave"
        stripped = name[:-4] if name.endswith(".tmp") else name
        if stripped.endswith(".journal"):
            return "journal"
        if stripped.endswith(".pp"):
            return "pp-log"
        if stripped == self.doc.name:
            return "envelope"
        return "other"

    def _log(self, stream: str, op: str, path: Path, planned: int, written: int, completed: bool):
        self.events.append(("io", stream, op, str(path), planned, written, completed))

    def _spend_bytes(self, stream: str, op: str, path: Path, data: bytes) -> bytes:
        """Portion of ``data`` that survives; raises after a partial write."""
        if stream != self.plan.target:
            self._log(stream, op, path, len(data), len(data), True)
            self.total_written += len(data)
            return data
        if self.budget_left >= len(data):
            self.budget_left -= len(data)
            self.total_written += len(data)
            self._log(stream, op, path, len(data), len(data), True)
            return data
        survived = data[: self.budget_left]
        self.total_written += self.budget_left
        self.budget_left = 0
        self._log(stream, op, path, len(data), len(survived), False)
        return survived

    def _spend_tick(self, stream: str, op: str, path: Path) -> bool:
        """One budget unit for a metadata operation; False means crash now,
        before the operation happens."""
        if stream != self.plan.target:
            self._log(stream, op, path, 1, 1, True)
            return True
        if self.budget_left >= 1:
            self.budget_left -= 1
            self.total_written += 1
            self._log(stream, op, path, 1, 1, True)
            return True
        self._log(stream, op, path, 1, 0, False)
        return False

    # -- interposed operations ------------------------------------------

    def write_file(self, path: Path, data: bytes) -> None:
        stream = self.classify(path)
        survived = self._spend_bytes(stream, "write", path, data)
        super().write_file(path, survived)
        if len(survived) != len(data):
            raise CrashSimulated(f"write of {path} torn at {len(survived)}/{len(data)}")

    def append(self, path: Path, data: bytes) -> None:
        stream = self.classify(path)
        survived = self._spend_bytes(stream, "append", path, data)
        super().append(path, survived)
        if len(survived) != len(data):
            raise CrashSimulated(f"append to {path} torn at {len(survived)}/{len(data)}")

    def truncate(self, path: Path, size: int) -> None:
        stream = self.classify(path)
        if not self._spend_tick(stream, "truncate", path):
            raise CrashSimulated(f"died before truncate of {path}")
        super().truncate(path, size)

    def replace(self, src: Path, dst: Path) -> None:
        stream = self.classify(dst)
        if not self._spend_tick(stream, "replace", dst):
            raise CrashSimulated(f"died before rename onto {dst}")
        super().replace(src, dst)

    def unlink(self, path: Path) -> None:
        stream = self.classify(path)
        if not self._spend_tick(stream, "unlink", path):
            raise CrashSimulated(f"died before unlink of {path}")
        super().unlink(path)


@dataclass
class CrashReport:
    crashed: bool
    target: str
    kill_at_byte: int
    total_written: int
    steps_recovered: int = 0
    journal_truncated: bool = False
    pp_versions_recovered: int = 0
    autosave_outcome: str = "none"
    violations: list[str] = field(default_factory=list)

    def lines(self) -> list[str]:
        return [
            f"crashed={str(self.crashed).lower()} target={self.target} kill_at_byte={self.kill_at_byte}",
            f"steps_recovered={self.steps_recovered} journal_truncated={str(self.journal_truncated).lower()}",
            f"pp_versions_recovered={self.pp_versions_recovered}",
            f"autosave={self.autosave_outcome}",
            f"violations={len(self.violations)}",
            *(f"violation: {v}" for v in self.violations),
        ]


def _is_prefix(candidate: tuple, generations: list[tuple]) -> bool:
    return any(candidate == gen[: len(candidate)] for gen in generations)


def crash_sim(
    doc: Path,
    script_text: str | list[Command],
    plan: FaultPlan,
    autosave: AutosaveConfig | None = None,
    start_time: float = 0.0,
    step_seconds: float = 1.0,
) -> CrashReport:
    """Run a script under fault injection, then recover and audit.

    The report's ``violations`` list must stay empty for every kill
    offset; the test suite sweeps offsets and fails on any entry.
    """
    commands = parse_script(script_text) if isinstance(script_text, str) else script_text
    paths = for_doc(doc)
    clean_io = FileIO()
    base_doc_bytes = clean_io.read_bytes(paths.doc) if paths.doc.exists() else None

    events: list = []
    fio = FaultyIO(plan, paths.doc, events)
    runner = ScriptRunner(
        doc, io=fio, autosave=autosave, start_time=start_time, step_seconds=step_seconds,
        events=events,
    )
    crashed = False
    try:
        runner.run(commands)
    except CrashSimulated:
        crashed = True
        force_release(paths.journal)
        force_release(paths.pp_log)

    report = CrashReport(
        crashed=crashed, target=plan.target, kill_at_byte=plan.kill_at_byte,
        total_written=fio.total_written,
    )

    # Journal: recovered steps must be a prefix of a state the session
    # actually reached, and must replay cleanly over the base drawing.
    journal_gens = [()] + [ev[1] for ev in events if ev[0] == "journal_gen"]
    try:
        journal, truncated = recover_journal(paths.journal)
        report.steps_recovered = journal.step_count
        report.journal_truncated = truncated
        recovered_key = tuple(
            (s.step_no, tuple((flag, p.kind, p.data) for flag, p in s.changes))
            for s in journal.steps
        )
        if not _is_prefix(recovered_key, journal_gens):
            report.violations.append("recovered journal is not a prefix of any reached state")
        journal2, truncated2 = recover_journal(paths.journal)
        if truncated2 or journal2.step_count != journal.step_count:
            report.violations.append("journal recovery is not idempotent")
        if base_doc_bytes is not None:
            base = Drawing.from_canonical_bytes(base_doc_bytes)
        else:
            base = Drawing()
        try:
            for _ in range(journal.step_count):
                journal.redo_step(base)
        except DraftVaultError as exc:
            report.violations.append(f"recovered steps do not replay: {exc}")
    except FileNotFoundError:
        if journal_gens != [()]:
            report.violations.append("journal file vanished after steps were committed")
    except BadHeader as exc:
        # A torn header is a legal crash state only while the session had
        # not yet committed anything; appends never touch the header.
        if journal_gens != [()]:
            report.violations.append(f"journal header damaged after commits: {exc}")
    except DraftVaultError as exc:
        report.violations.append(f"journal recovery failed: {exc}")

    # Parametric log: same prefix rule.
    pp_gens = [()] + [ev[1] for ev in events if ev[0] == "pp_gen"]
    if paths.pp_log.exists():
        try:
            pp_log, _ = recover_pp_log(paths.pp_log)
            report.pp_versions_recovered = pp_log.version_count
            if not _is_prefix(tuple(pp_log.versions), pp_gens):
                report.violations.append("recovered blob versions are not a prefix of any reached state")
        except BadHeader as exc:
            if pp_gens != [()]:
                report.violations.append(f"blob log header damaged after commits: {exc}")
        except DraftVaultError as exc:
            report.violations.append(f"blob log recovery failed: {exc}")

    # Autosave: what probe finds must be a set the dead session could have
    # left: the last committed one, or the one being written, or nothing if
    # nothing was ever committed (or shutdown had begun).
    if autosave is not None:
        report.autosave_outcome = _audit_autosave(paths.name, autosave, events, report)

    # Document file: atomic replacement means old or new, parseable, never torn.
    if paths.doc.exists():
        try:
            env = load_document(paths.doc)
            from .autosave import _sha

            doc_sha = _sha(env.document)
            admissible = {ev[1] for ev in events if ev[0] == "doc_saved"}
            if base_doc_bytes is not None:
                admissible.add(_sha(base_doc_bytes))
            if doc_sha not in admissible:
                report.violations.append("document bytes are neither the old nor the saved state")
        except DraftVaultError as exc:
            report.violations.append(f"document file is unreadable: {exc}")
    elif base_doc_bytes is not None:
        report.violations.append("pre-existing document file vanished")

    return report


def _audit_autosave(
    doc_name: str, config: AutosaveConfig, events: list, report: CrashReport
) -> str:
    committed: list[tuple] = []
    last_committed_index = -1
    shutdown_started = False
    shutdown_finished = False
    for index, ev in enumerate(events):
        if ev[0] == "tick_committed":
            committed.append((ev[1], ev[2]))
            last_committed_index = index
        elif ev[0] == "shutdown_started":
            shutdown_started = True
        elif ev[0] == "clean_shutdown":
            shutdown_finished = True

    in_flight: tuple | None = None
    touched_after_commit = any(
        ev[0] == "io" and ev[1] == "autosave" for ev in events[last_committed_index + 1 :]
    )
    if touched_after_commit and not shutdown_started:
        attempts = [
            (ev[1], ev[2]) for ev in events[last_committed_index + 1 :] if ev[0] == "tick_attempt"
        ]
        if attempts:
            in_flight = attempts[-1]

    current = committed[-1] if committed else None
    admissible: set[tuple | None] = set()
    if shutdown_finished:
        admissible.add(None)
    elif shutdown_started:
        admissible.update({None, current})
    elif in_flight is not None:
        admissible.update({current, in_flight})
        if current is None:
            admissible.add(None)
    else:
        admissible.add(current)  # may be None when nothing was ever saved

    aset = probe_recovery(config.autosave_dir, doc_name)
    found = (aset.drawing_sha, aset.pp_sha) if aset is not None else None
    if found not in admissible:
        report.violations.append(
            f"autosave probe found {found!r}, admissible: {sorted(map(repr, admissible))}"
        )
        return "violation"
    if aset is not None:
        try:
            restore(aset)
        except Corrupt as exc:
            report.violations.append(f"found autosave set does not restore: {exc}")
            return "violation"
    if found is None:
        return "none"
    if in_flight is not None and found == in_flight and found != current:
        return "new"
    if shutdown_started or in_flight is not None:
        return "old"
    return "current"
