"""Exception hierarchy shared by all draftvault modules."""


class DraftVaultError(Exception):
    """Base class for all errors raised by this package."""


class NotFound(DraftVaultError):
    """No element matching the payload exists in the drawing.

    During undo/redo this signals that the journal and the drawing have
    diverged; the operation is aborted without touching the drawing.
    """


class NothingToUndo(DraftVaultError):
    pass


class NothingToRedo(DraftVaultError):
    pass


class OutOfRange(DraftVaultError):
    """Version index outside the stored history."""


class Locked(DraftVaultError):
    """Another live session owns the resource."""


class IoFailure(DraftVaultError):
    """A write failed; on-disk state was repaired to the last good point."""


class BadHeader(DraftVaultError):
    """The file does not start with the expected magic/version."""


class Corrupt(DraftVaultError):
    """Stored content failed a structural or checksum validation."""


class DuplicateSigner(DraftVaultError):
    pass


class NoSuchSigner(DraftVaultError):
    pass


class WeakPassword(DraftVaultError):
    """Empty passwords are rejected at signing time."""


class DocumentFrozen(DraftVaultError):
    """The document carries at least one signature; edits are rejected."""


class ScriptError(DraftVaultError):
    """An edit script failed to parse."""
