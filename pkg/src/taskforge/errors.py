"""Exception types shared across the taskforge engine."""


class TaskforgeError(Exception):
    """Base class for all engine errors."""


# --- template / grammar ---------------------------------------------------


class MissingKey(TaskforgeError):
    def __init__(self, name: str):
        super().__init__(f"missing required template key: {name}")
        self.name = name


class DuplicateModifierRule(TaskforgeError):
    pass


class GrammarUnavailable(TaskforgeError):
    def __init__(self, grammar_ref: str):
        super().__init__(f"no grammar registered for ref {grammar_ref!r}")
        self.grammar_ref = grammar_ref


class AmbiguousExtension(TaskforgeError):
    pass


class QueryError(TaskforgeError):
    """A query string failed to compile against a grammar."""


# --- analysis -------------------------------------------------------------


class IoError(TaskforgeError):
    pass


class AnalysisFailed(TaskforgeError):
    pass


# --- mutation -------------------------------------------------------------


class SnapshotMismatch(TaskforgeError):
    pass


class TargetVanished(TaskforgeError):
    pass


class NoVariantAvailable(TaskforgeError):
    pass


class OverlappingEdits(TaskforgeError):
    pass


class SpanOutOfBounds(TaskforgeError):
    pass


class InvalidEditSet(TaskforgeError):
    pass


# --- patching -------------------------------------------------------------


class NoChanges(TaskforgeError):
    pass


class BinaryFileRejected(TaskforgeError):
    pass


class MalformedPatch(TaskforgeError):
    pass


class BaseMismatch(TaskforgeError):
    pass


class HunkRejected(TaskforgeError):
    def __init__(self, file_path: str, hunk_index: int, reason: str = ""):
        detail = f" ({reason})" if reason else ""
        super().__init__(f"hunk {hunk_index} rejected for {file_path}{detail}")
        self.file_path = file_path
        self.hunk_index = hunk_index


class PostStateMismatch(TaskforgeError):
    pass


# --- sandbox --------------------------------------------------------------


class PoolExhausted(TaskforgeError):
    pass


class SnapshotUnavailable(TaskforgeError):
    pass


class SpawnFailed(TaskforgeError):
    pass


class SandboxRevoked(TaskforgeError):
    pass


# --- verification ---------------------------------------------------------


class MalformedArtifact(TaskforgeError):
    pass


class DuplicateTestId(TaskforgeError):
    pass


class NotReady(TaskforgeError):
    pass


# --- packaging / pipeline -------------------------------------------------


class SchemaViolation(TaskforgeError):
    def __init__(self, field: str, detail: str = ""):
        msg = f"task record field {field!r} violates schema"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)
        self.field = field


class DanglingEntityId(TaskforgeError):
    pass


class MissingTemplate(TaskforgeError):
    pass


class MissingPrerequisite(TaskforgeError):
    pass


class ConfigError(TaskforgeError):
    pass
