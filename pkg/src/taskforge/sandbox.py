"""Stateless process sandboxes with a warm pool.

Each sandbox is a private copy of a registered repository snapshot; commands
run as resource-limited subprocesses with their output streams, artifacts,
and usage captured. Reset is verified by full tree hashing before a sandbox
returns to the pool, so a leased sandbox always starts pristine regardless
of what the previous candidate did. The contract is the same one a
container-backed substrate would honor; only the realization is local.
"""

from __future__ import annotations

import os
import resource
import shutil
import signal
import subprocess
import tempfile
import threading
import time
import uuid
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

from .errors import (
    BaseMismatch,
    PoolExhausted,
    SandboxRevoked,
    SnapshotUnavailable,
    SpawnFailed,
)
from .patching import Patch, apply_patch, tree_hash

ARTIFACT_SUBDIR = Path(".taskforge") / "artifacts"
ARTIFACT_ENV_VAR = "TASKFORGE_ARTIFACT_DIR"
TRANSIENT_RETRIES = 2


@dataclass
class SandboxSpec:
    substrate_ref: str
    repo_snapshot: str
    cpu_time_limit: float = 120.0
    memory_limit: int = 1024 * 1024 * 1024
    wall_timeout: float = 60.0
    env_vars: dict[str, str] = field(default_factory=dict)

    def with_limits(self, **kwargs) -> "SandboxSpec":
        return replace(self, **kwargs)


@dataclass
class ExecutionResult:
    exit_code: Optional[int]
    stdout: bytes
    stderr: bytes
    duration: float
    peak_memory: int
    timed_out: bool
    artifacts: dict[str, bytes] = field(default_factory=dict)

    def to_meta(self) -> dict:
        return {
            "exit_code": self.exit_code,
            "duration_s": round(self.duration, 6),
            "peak_memory": self.peak_memory,
            "timed_out": self.timed_out,
            "stdout_bytes": len(self.stdout),
            "stderr_bytes": len(self.stderr),
        }


class Sandbox:
    """An exclusively owned snapshot copy. Created and reset by the pool."""

    def __init__(self, sandbox_id: str, root: Path, spec: SandboxSpec):
        self.sandbox_id = sandbox_id
        self.root = root
        self.spec = spec
        self.leased = False
        self.destroyed = False

    def run(self, command: list[str], working_dir: str = "") -> ExecutionResult:
        """Execute a command under the spec's limits, capturing everything.

        A missing executable is reported shell-style (exit 127) rather than
        raised, so readiness classification can see it as evidence.
        """
        if not self.leased or self.destroyed:
            raise SandboxRevoked(f"sandbox {self.sandbox_id} is not leased")
        cwd = self.root / working_dir if working_dir else self.root
        artifact_dir = self.root / ARTIFACT_SUBDIR
        if artifact_dir.exists():
            shutil.rmtree(artifact_dir)  # artifacts never leak across runs
        artifact_dir.mkdir(parents=True, exist_ok=True)

        env = {
            "PATH": os.environ.get("PATH", "/usr/bin:/bin"),
            "HOME": str(self.root),
            "LANG": os.environ.get("LANG", "C.UTF-8"),
            "PYTHONDONTWRITEBYTECODE": "1",
            "PYTHONHASHSEED": "0",
            ARTIFACT_ENV_VAR: str(artifact_dir),
        }
        env.update(self.spec.env_vars)

        spec = self.spec

        def limit_resources():  # pragma: no cover - runs in the child
            os.setsid()
            cpu = max(1, int(spec.cpu_time_limit))
            try:
                resource.setrlimit(resource.RLIMIT_CPU, (cpu, cpu + 5))
                resource.setrlimit(resource.RLIMIT_AS,
                                   (spec.memory_limit, spec.memory_limit))
            except (ValueError, OSError):
                pass  # limits are best-effort on hosts without hard caps

        rusage_before = resource.getrusage(resource.RUSAGE_CHILDREN).ru_maxrss
        started = time.monotonic()
        try:
            proc = subprocess.Popen(
                command, cwd=str(cwd), env=env,
                stdout=subprocess.PIPE, stderr=subprocess.PIPE,
                preexec_fn=limit_resources,
            )
        except FileNotFoundError:
            return ExecutionResult(
                exit_code=127, stdout=b"",
                stderr=f"command not found: {command[0]}\n".encode(),
                duration=0.0, peak_memory=0, timed_out=False,
                artifacts=self._collect_artifacts())
        except PermissionError:
            return ExecutionResult(
                exit_code=126, stdout=b"",
                stderr=f"permission denied: {command[0]}\n".encode(),
                duration=0.0, peak_memory=0, timed_out=False,
                artifacts=self._collect_artifacts())
        except OSError as exc:
            raise SpawnFailed(f"{command[0]}: {exc}") from exc

        timed_out = False
        try:
            stdout, stderr = proc.communicate(timeout=self.spec.wall_timeout)
            exit_code: Optional[int] = proc.returncode
        except subprocess.TimeoutExpired:
            timed_out = True
            exit_code = None
            try:
                os.killpg(proc.pid, signal.SIGKILL)
            except ProcessLookupError:
                pass
            stdout, stderr = proc.communicate()
        duration = time.monotonic() - started
        if timed_out:
            duration = max(duration, self.spec.wall_timeout)
        rusage_after = resource.getrusage(resource.RUSAGE_CHILDREN).ru_maxrss
        peak = max(0, rusage_after - rusage_before) * 1024
        return ExecutionResult(
            exit_code=exit_code, stdout=stdout, stderr=stderr,
            duration=duration, peak_memory=peak, timed_out=timed_out,
            artifacts=self._collect_artifacts())

    def _collect_artifacts(self) -> dict[str, bytes]:
        artifact_dir = self.root / ARTIFACT_SUBDIR
        if not artifact_dir.is_dir():
            return {}
        out = {}
        for path in sorted(artifact_dir.rglob("*")):
            if path.is_file():
                out[path.relative_to(artifact_dir).as_posix()] = path.read_bytes()
        return out


class SandboxPool:
    """Bounded warm pool of hash-verified sandboxes.

    Linearizable lease/release; sandboxes are exclusively owned between the
    two. A sandbox failing reset verification is destroyed instead of being
    returned, shrinking the warm cache but never leaking candidate state.
    """

    def __init__(self, max_size: int = 4, work_root: Optional[Path] = None):
        self.max_size = max_size
        self.work_root = Path(work_root) if work_root else Path(
            tempfile.mkdtemp(prefix="taskforge-pool-"))
        self.work_root.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Condition()
        self._sources: dict[str, Path] = {}      # snapshot hash -> source dir
        self._idle: list[Sandbox] = []
        self._active = 0
        self._shutdown = False

    # -- snapshot registration ---------------------------------------------

    def register_substrate(self, source_dir: Path, **limits) -> SandboxSpec:
        """Pin a directory as an execution substrate; returns its spec."""
        source_dir = Path(source_dir).resolve()
        if not source_dir.is_dir():
            raise SnapshotUnavailable(f"no such directory: {source_dir}")
        snapshot = tree_hash(source_dir)
        with self._lock:
            self._sources[snapshot] = source_dir
        spec = SandboxSpec(substrate_ref=f"dir:{source_dir}", repo_snapshot=snapshot)
        return spec.with_limits(**limits) if limits else spec

    # -- lease / release -----------------------------------------------------

    def lease(self, spec: SandboxSpec, block: bool = True) -> Sandbox:
        with self._lock:
            while True:
                if self._shutdown:
                    raise PoolExhausted("pool is shut down")
                for i, sandbox in enumerate(self._idle):
                    if sandbox.spec.repo_snapshot == spec.repo_snapshot:
                        del self._idle[i]
                        sandbox.spec = spec
                        sandbox.leased = True
                        self._active += 1
                        return sandbox
                if self._active + len(self._idle) < self.max_size:
                    self._active += 1
                    break
                if self._idle:
                    # evict an idle sandbox of another snapshot to make room
                    victim = self._idle.pop(0)
                    self._destroy(victim)
                    continue
                if not block:
                    raise PoolExhausted(
                        f"{self.max_size} sandboxes busy and blocking disabled")
                self._lock.wait()
        try:
            sandbox = self._create(spec)
        except BaseException:
            with self._lock:
                self._active -= 1
                self._lock.notify()
            raise
        sandbox.leased = True
        return sandbox

    def release(self, sandbox: Sandbox) -> None:
        """Reset to pristine (verified by tree hash) and return to the pool;
        destroy on verification failure. Never raises."""
        sandbox.leased = False
        ok = False
        try:
            ok = self._reset(sandbox)
        except Exception:
            ok = False
        with self._lock:
            self._active -= 1
            if ok and not self._shutdown:
                self._idle.append(sandbox)
            else:
                self._destroy(sandbox)
            self._lock.notify()

    def with_candidate(self, spec: SandboxSpec, patch: Optional[Patch],
                       command: list[str]) -> ExecutionResult:
        """lease -> apply patch -> run -> release, with guaranteed release
        and bounded retries on infrastructure failures."""
        last_exc: Optional[Exception] = None
        for _ in range(TRANSIENT_RETRIES + 1):
            sandbox = self.lease(spec)
            try:
                if patch is not None:
                    apply_patch(sandbox.root, patch)
                return sandbox.run(command)
            except SpawnFailed as exc:
                last_exc = exc
                continue
            finally:
                self.release(sandbox)
        raise last_exc  # type: ignore[misc]

    def shutdown(self) -> None:
        with self._lock:
            self._shutdown = True
            for sandbox in self._idle:
                self._destroy(sandbox)
            self._idle.clear()
            self._lock.notify_all()
        shutil.rmtree(self.work_root, ignore_errors=True)

    # -- internals -----------------------------------------------------------

    def _source_for(self, spec: SandboxSpec) -> Path:
        with self._lock:
            source = self._sources.get(spec.repo_snapshot)
        if source is None:
            raise SnapshotUnavailable(
                f"snapshot {spec.repo_snapshot[:12]} not registered")
        return source

    def _create(self, spec: SandboxSpec) -> Sandbox:
        source = self._source_for(spec)
        sandbox_id = uuid.uuid4().hex[:12]
        root = self.work_root / f"sb-{sandbox_id}"
        _copy_tree(source, root)
        actual = tree_hash(root)
        if actual != spec.repo_snapshot:
            shutil.rmtree(root, ignore_errors=True)
            raise SnapshotUnavailable(
                f"substrate drifted: {actual[:12]} != {spec.repo_snapshot[:12]}")
        return Sandbox(sandbox_id, root, spec)

    def _reset(self, sandbox: Sandbox) -> bool:
        _remove_invisible_state(sandbox.root)
        if tree_hash(sandbox.root) == sandbox.spec.repo_snapshot:
            return True
        source = self._source_for(sandbox.spec)
        shutil.rmtree(sandbox.root, ignore_errors=True)
        _copy_tree(source, sandbox.root)
        return tree_hash(sandbox.root) == sandbox.spec.repo_snapshot

    def _destroy(self, sandbox: Sandbox) -> None:
        sandbox.destroyed = True
        shutil.rmtree(sandbox.root, ignore_errors=True)


def _copy_tree(source: Path, dest: Path) -> None:
    shutil.copytree(
        source, dest,
        ignore=shutil.ignore_patterns(".*", "__pycache__"),
        symlinks=False)


def _remove_invisible_state(root: Path) -> None:
    """Drop state tree hashing cannot see (dot-dirs, bytecode caches)."""
    for path in sorted(root.rglob("*"), reverse=True):
        name = path.name
        if path.is_dir() and (name.startswith(".") or name == "__pycache__"):
            shutil.rmtree(path, ignore_errors=True)
        elif path.is_file() and name.startswith("."):
            parts = path.relative_to(root).parts
            if all(not p.startswith(".") for p in parts[:-1]):
                path.unlink(missing_ok=True)
