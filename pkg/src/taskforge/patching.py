"""Portable patches: unified diffs, strict apply/revert, fingerprints.

Patches are plain unified diffs (a/ and b/ prefixes, LF endings, three
context lines) pinned to a full-tree content hash of their base state.
Application is strict and atomic: either every hunk of every file applies
against verified context, or nothing is written.
"""

from __future__ import annotations

import difflib
import hashlib
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .analyzer import extract_entities, iter_source_files, parse_source
from .cst import line_start_of
from .errors import (
    AnalysisFailed,
    BaseMismatch,
    BinaryFileRejected,
    HunkRejected,
    IoError,
    MalformedPatch,
    NoChanges,
    PostStateMismatch,
)

CONTEXT_LINES = 3
_NO_NEWLINE = "\\ No newline at end of file"


@dataclass
class Patch:
    diff_text: bytes
    files: list[str]
    base_snapshot: str
    patch_id: str = ""

    def __post_init__(self):
        if not self.patch_id:
            self.patch_id = hashlib.sha256(self.diff_text).hexdigest()

    def to_dict(self) -> dict:
        return {
            "patch_id": self.patch_id,
            "base_snapshot": self.base_snapshot,
            "files": list(self.files),
            "diff_text": self.diff_text.decode("utf-8"),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Patch":
        return cls(
            diff_text=d["diff_text"].encode("utf-8"),
            files=list(d["files"]),
            base_snapshot=d["base_snapshot"],
            patch_id=d.get("patch_id", ""),
        )


@dataclass
class ApplyResult:
    applied: bool
    tree_hash: str
    files: list[str] = field(default_factory=list)


@dataclass
class CausalFingerprint:
    files: set[str] = field(default_factory=set)
    identifiers: set[str] = field(default_factory=set)


# ---------------------------------------------------------------------------
# tree hashing
# ---------------------------------------------------------------------------


def tree_hash(root: Path, overrides: Optional[dict[str, Optional[bytes]]] = None) -> str:
    """Content hash of all regular files under root.

    ``overrides`` maps relative paths to staged contents (None = absent),
    letting callers hash a hypothetical tree without writing it.
    """
    root = Path(root)
    contents: dict[str, bytes] = {}
    for path in iter_source_files(root):
        rel = path.relative_to(root).as_posix()
        contents[rel] = path.read_bytes()
    for rel, data in (overrides or {}).items():
        if data is None:
            contents.pop(rel, None)
        else:
            contents[rel] = data
    hasher = hashlib.sha256()
    for rel in sorted(contents):
        hasher.update(rel.encode())
        hasher.update(b"\0")
        hasher.update(hashlib.sha256(contents[rel]).digest())
    return hasher.hexdigest()


def _is_binary(data: bytes) -> bool:
    return b"\0" in data


# ---------------------------------------------------------------------------
# diff generation
# ---------------------------------------------------------------------------


def _render_line(prefix: str, line: str) -> str:
    if line.endswith("\n"):
        return prefix + line
    return prefix + line + "\n" + _NO_NEWLINE + "\n"


def _diff_one_file(path: str, before: Optional[bytes], after: Optional[bytes]) -> str:
    a_lines = before.decode("utf-8").splitlines(keepends=True) if before is not None else []
    b_lines = after.decode("utf-8").splitlines(keepends=True) if after is not None else []
    matcher = difflib.SequenceMatcher(a=a_lines, b=b_lines, autojunk=False)
    groups = list(matcher.get_grouped_opcodes(CONTEXT_LINES))
    if not groups:
        return ""
    from_file = "/dev/null" if before is None else f"a/{path}"
    to_file = "/dev/null" if after is None else f"b/{path}"
    out = [f"--- {from_file}\n", f"+++ {to_file}\n"]
    for group in groups:
        a_start, a_end = group[0][1], group[-1][2]
        b_start, b_end = group[0][3], group[-1][4]
        a_count, b_count = a_end - a_start, b_end - b_start
        a_pos = a_start + 1 if a_count else a_start
        b_pos = b_start + 1 if b_count else b_start
        out.append(f"@@ -{a_pos},{a_count} +{b_pos},{b_count} @@\n")
        for tag, i1, i2, j1, j2 in group:
            if tag == "equal":
                out.extend(_render_line(" ", line) for line in a_lines[i1:i2])
                continue
            if tag in ("replace", "delete"):
                out.extend(_render_line("-", line) for line in a_lines[i1:i2])
            if tag in ("replace", "insert"):
                out.extend(_render_line("+", line) for line in b_lines[j1:j2])
    return "".join(out)


def _read_tree(root: Path) -> dict[str, bytes]:
    root = Path(root)
    if not root.is_dir():
        raise IoError(f"not a directory: {root}")
    return {p.relative_to(root).as_posix(): p.read_bytes()
            for p in iter_source_files(root)}


def patch_from_contents(base_dir: Path, changed: dict[str, bytes]) -> Patch:
    """Patch turning the base tree into one with the given file contents
    (None removes a file), without materializing the changed tree."""
    base_dir = Path(base_dir)
    pieces = []
    files = []
    for path in sorted(changed):
        target = base_dir / path
        old = target.read_bytes() if target.is_file() else None
        new = changed[path]
        if old == new:
            continue
        if (old is not None and _is_binary(old)) or (new is not None and _is_binary(new)):
            raise BinaryFileRejected(path)
        piece = _diff_one_file(path, old, new)
        if piece:
            pieces.append(piece)
            files.append(path)
    if not pieces:
        raise NoChanges("no content changes")
    return Patch(diff_text="".join(pieces).encode("utf-8"),
                 files=files, base_snapshot=tree_hash(base_dir))


def diff_snapshot(before: Path, after: Path) -> Patch:
    """Minimal line-based unified diff between two trees.

    Deterministic for identical inputs; empty diffs and binary files are
    rejected.
    """
    before_files = _read_tree(before)
    after_files = _read_tree(after)
    base = tree_hash(before)
    pieces = []
    changed = []
    for path in sorted(set(before_files) | set(after_files)):
        old = before_files.get(path)
        new = after_files.get(path)
        if old == new:
            continue
        if (old is not None and _is_binary(old)) or (new is not None and _is_binary(new)):
            raise BinaryFileRejected(path)
        piece = _diff_one_file(path, old, new)
        if piece:
            pieces.append(piece)
            changed.append(path)
    if not pieces:
        raise NoChanges(f"{before} and {after} are identical")
    return Patch(diff_text="".join(pieces).encode("utf-8"),
                 files=changed, base_snapshot=base)


# ---------------------------------------------------------------------------
# patch parsing
# ---------------------------------------------------------------------------


@dataclass
class Hunk:
    old_start: int  # 1-based; 0 for empty side
    old_count: int
    new_start: int
    new_count: int
    lines: list[tuple[str, str]] = field(default_factory=list)  # (tag, text)


@dataclass
class FilePatch:
    old_path: Optional[str]  # None = /dev/null
    new_path: Optional[str]
    hunks: list[Hunk] = field(default_factory=list)

    @property
    def path(self) -> str:
        return self.new_path if self.new_path is not None else self.old_path


_HUNK_RE = re.compile(r"^@@ -(\d+)(?:,(\d+))? \+(\d+)(?:,(\d+))? @@")


def _strip_prefix(name: str) -> Optional[str]:
    if name == "/dev/null":
        return None
    if name.startswith("a/") or name.startswith("b/"):
        return name[2:]
    raise MalformedPatch(f"unexpected diff path {name!r}")


def parse_patch(diff_text: bytes) -> list[FilePatch]:
    lines = diff_text.decode("utf-8").splitlines(keepends=True)
    patches: list[FilePatch] = []
    i = 0
    while i < len(lines):
        line = lines[i]
        if not line.startswith("--- "):
            raise MalformedPatch(f"expected '---' header at line {i + 1}")
        old_name = line[4:].strip()
        i += 1
        if i >= len(lines) or not lines[i].startswith("+++ "):
            raise MalformedPatch(f"expected '+++' header at line {i + 1}")
        new_name = lines[i][4:].strip()
        i += 1
        fp = FilePatch(_strip_prefix(old_name), _strip_prefix(new_name))
        while i < len(lines) and lines[i].startswith("@@"):
            m = _HUNK_RE.match(lines[i])
            if not m:
                raise MalformedPatch(f"bad hunk header at line {i + 1}: {lines[i]!r}")
            hunk = Hunk(
                old_start=int(m.group(1)), old_count=int(m.group(2) or "1"),
                new_start=int(m.group(3)), new_count=int(m.group(4) or "1"),
            )
            i += 1
            seen_old = seen_new = 0
            while i < len(lines) and (seen_old < hunk.old_count or seen_new < hunk.new_count):
                raw = lines[i]
                if raw.startswith(_NO_NEWLINE):
                    if not hunk.lines:
                        raise MalformedPatch(f"stray no-newline marker at line {i + 1}")
                    tag, text = hunk.lines[-1]
                    hunk.lines[-1] = (tag, text.rstrip("\n"))
                    i += 1
                    continue
                tag = raw[:1]
                if tag not in (" ", "-", "+"):
                    raise MalformedPatch(f"bad hunk line at {i + 1}: {raw!r}")
                hunk.lines.append((tag, raw[1:]))
                if tag in (" ", "-"):
                    seen_old += 1
                if tag in (" ", "+"):
                    seen_new += 1
                i += 1
            if seen_old != hunk.old_count or seen_new != hunk.new_count:
                raise MalformedPatch(
                    f"hunk at line counts mismatch (-{hunk.old_count} +{hunk.new_count})")
            if i < len(lines) and lines[i].startswith(_NO_NEWLINE):
                tag, text = hunk.lines[-1]
                hunk.lines[-1] = (tag, text.rstrip("\n"))
                i += 1
            fp.hunks.append(hunk)
        if not fp.hunks:
            raise MalformedPatch(f"file entry without hunks near line {i + 1}")
        patches.append(fp)
    return patches


def render_file_patches(patches: list[FilePatch]) -> bytes:
    """Serialize parsed file patches back to unified-diff text."""
    out = []
    for fp in patches:
        old = "/dev/null" if fp.old_path is None else f"a/{fp.old_path}"
        new = "/dev/null" if fp.new_path is None else f"b/{fp.new_path}"
        out.append(f"--- {old}\n")
        out.append(f"+++ {new}\n")
        for h in fp.hunks:
            out.append(f"@@ -{h.old_start},{h.old_count} +{h.new_start},{h.new_count} @@\n")
            for tag, text in h.lines:
                out.append(_render_line(tag, text))
    return "".join(out).encode("utf-8")


def reverse_of(patch: Patch, post_snapshot: str) -> Patch:
    """The exact inverse patch, based on the original's post-state hash."""
    reversed_patches = reverse_patch_content(parse_patch(patch.diff_text))
    return Patch(
        diff_text=render_file_patches(reversed_patches),
        files=list(patch.files),
        base_snapshot=post_snapshot,
    )


def post_state_hash(base_dir: Path, patch: Patch) -> str:
    """Tree hash the patch would produce, without touching the tree."""
    staged = _stage_patch(base_dir, parse_patch(patch.diff_text))
    return tree_hash(base_dir, overrides=staged)


def reverse_patch_content(patches: list[FilePatch]) -> list[FilePatch]:
    reversed_patches = []
    for fp in patches:
        rp = FilePatch(old_path=fp.new_path, new_path=fp.old_path)
        for h in fp.hunks:
            rh = Hunk(old_start=h.new_start, old_count=h.new_count,
                      new_start=h.old_start, new_count=h.old_count)
            for tag, text in h.lines:
                if tag == "-":
                    rh.lines.append(("+", text))
                elif tag == "+":
                    rh.lines.append(("-", text))
                else:
                    rh.lines.append((" ", text))
            rp.hunks.append(rh)
        reversed_patches.append(rp)
    return reversed_patches


# ---------------------------------------------------------------------------
# patch application
# ---------------------------------------------------------------------------


def _apply_file_patch(fp: FilePatch, content: Optional[bytes],
                      lenient: bool = False) -> Optional[bytes]:
    """New file content, or None for a deletion. Raises HunkRejected."""
    path = fp.path
    if fp.old_path is None:
        if content is not None:
            raise HunkRejected(path, 0, "file unexpectedly exists")
        old_lines: list[str] = []
    else:
        if content is None:
            raise HunkRejected(path, 0, "file missing")
        old_lines = content.decode("utf-8").splitlines(keepends=True)

    new_lines: list[str] = []
    cursor = 0  # index into old_lines
    for idx, hunk in enumerate(fp.hunks):
        expected = [text for tag, text in hunk.lines if tag in (" ", "-")]
        start = hunk.old_start - 1 if hunk.old_count else hunk.old_start
        if lenient:
            start = _search_context(old_lines, expected, start)
            if start is None:
                raise HunkRejected(path, idx, "context not found")
        if start < cursor or start + len(expected) > len(old_lines) + (0 if expected else 1):
            raise HunkRejected(path, idx, "hunk out of range")
        if old_lines[start:start + len(expected)] != expected:
            raise HunkRejected(path, idx, "context mismatch")
        new_lines.extend(old_lines[cursor:start])
        for tag, text in hunk.lines:
            if tag in (" ", "+"):
                new_lines.append(text)
        cursor = start + len(expected)
    new_lines.extend(old_lines[cursor:])

    if fp.new_path is None:
        if any(tag == "+" for h in fp.hunks for tag, _ in h.lines) or new_lines:
            # a deletion patch must consume the whole file
            if new_lines:
                raise HunkRejected(path, len(fp.hunks) - 1, "deletion leaves content")
        return None
    return "".join(new_lines).encode("utf-8")


def _search_context(old_lines: list[str], expected: list[str],
                    hint: int, radius: int = 50) -> Optional[int]:
    for delta in range(radius + 1):
        for start in ({hint - delta, hint + delta}):
            if 0 <= start <= len(old_lines) - len(expected):
                if old_lines[start:start + len(expected)] == expected:
                    return start
    return None


def _stage_patch(workdir: Path, patches: list[FilePatch],
                 lenient: bool = False) -> dict[str, Optional[bytes]]:
    staged: dict[str, Optional[bytes]] = {}
    for fp in patches:
        target = Path(workdir) / fp.path
        content = target.read_bytes() if target.is_file() else None
        staged[fp.path] = _apply_file_patch(fp, content, lenient=lenient)
    return staged


def _commit(workdir: Path, staged: dict[str, Optional[bytes]]) -> list[str]:
    touched = []
    for rel, data in sorted(staged.items()):
        target = Path(workdir) / rel
        if data is None:
            if target.exists():
                target.unlink()
        else:
            target.parent.mkdir(parents=True, exist_ok=True)
            target.write_bytes(data)
        touched.append(rel)
    return touched


def apply_patch(workdir: Path, patch: Patch, lenient: bool = False) -> ApplyResult:
    """Apply all hunks atomically; the workdir must be at the patch's base.

    Strict mode verifies the full base tree hash up front; lenient mode
    (off by default) falls back to context search per hunk.
    """
    workdir = Path(workdir)
    if not lenient:
        current = tree_hash(workdir)
        if current != patch.base_snapshot:
            raise BaseMismatch(
                f"workdir at {current[:12]}, patch base {patch.base_snapshot[:12]}")
    staged = _stage_patch(workdir, parse_patch(patch.diff_text), lenient=lenient)
    files = _commit(workdir, staged)
    return ApplyResult(applied=True, tree_hash=tree_hash(workdir), files=files)


def revert_patch(workdir: Path, patch: Patch) -> ApplyResult:
    """Undo a patch; the workdir must be byte-identical to its post-state.

    The reverse application is staged in memory and committed only when the
    staged tree hashes back to the patch's base snapshot, so a half-reverted
    tree is never left behind.
    """
    workdir = Path(workdir)
    reversed_patches = reverse_patch_content(parse_patch(patch.diff_text))
    try:
        staged = _stage_patch(workdir, reversed_patches)
    except HunkRejected as exc:
        raise PostStateMismatch(f"workdir does not match patch post-state: {exc}") from exc
    if tree_hash(workdir, overrides=staged) != patch.base_snapshot:
        raise PostStateMismatch("revert would not restore the base snapshot")
    files = _commit(workdir, staged)
    return ApplyResult(applied=True, tree_hash=tree_hash(workdir), files=files)


# ---------------------------------------------------------------------------
# causal fingerprint
# ---------------------------------------------------------------------------


def extract_identifiers(patch: Patch, registry, base_dir: Path) -> CausalFingerprint:
    """Names of entities whose spans intersect any changed hunk line,
    computed on both the before and after states of each touched file."""
    base_dir = Path(base_dir)
    fingerprint = CausalFingerprint(files=set(patch.files))
    for fp in parse_patch(patch.diff_text):
        before = None
        if fp.old_path is not None:
            target = base_dir / fp.old_path
            before = target.read_bytes() if target.is_file() else None
        after = _apply_file_patch(fp, before)
        old_changed = _changed_line_numbers(fp, side="old")
        new_changed = _changed_line_numbers(fp, side="new")
        for content, changed, path in (
                (before, old_changed, fp.old_path),
                (after, new_changed, fp.new_path)):
            if content is None or path is None or not changed:
                continue
            fingerprint.identifiers |= _entity_names_at_lines(
                content, changed, registry, path)
    return fingerprint


def _changed_line_numbers(fp: FilePatch, side: str) -> list[int]:
    changed = []
    for hunk in fp.hunks:
        pos = (hunk.old_start if side == "old" else hunk.new_start)
        for tag, _ in hunk.lines:
            if side == "old":
                if tag == "-":
                    changed.append(pos)
                if tag in (" ", "-"):
                    pos += 1
            else:
                if tag == "+":
                    changed.append(pos)
                if tag in (" ", "+"):
                    pos += 1
    return changed


def _entity_names_at_lines(content: bytes, line_numbers: list[int],
                           registry, path: str) -> set[str]:
    tpl = registry.resolve(path)
    if tpl is None:
        return set()
    tree = parse_source(content, tpl)
    if tree.has_root_error:
        raise AnalysisFailed(f"{path}: cannot parse for fingerprinting")
    records = extract_entities(tree, tpl, path)
    line_offsets = _line_byte_ranges(content)
    names = set()
    for number in line_numbers:
        if 1 <= number <= len(line_offsets):
            lo, hi = line_offsets[number - 1]
            for record in records:
                s, e = record.byte_span
                if s < hi and lo < e:
                    names.add(record.name)
    return names


def _line_byte_ranges(content: bytes) -> list[tuple[int, int]]:
    ranges = []
    start = 0
    while start <= len(content):
        nl = content.find(b"\n", start)
        if nl == -1:
            if start < len(content):
                ranges.append((start, len(content)))
            break
        ranges.append((start, nl + 1))
        start = nl + 1
    return ranges
