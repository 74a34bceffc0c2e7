"""Emulated device task system with two submission styles.

Buffers live in an in-process "device" arena; kernels are element-range
computations over declared buffers, organized as a DAG and executed on a
serial or thread-pool backend. Dependencies come either from buffer accessors
(read / write / read_write), from which read-after-write, write-after-read
and write-after-write edges are inferred automatically, or from an explicit
event list with no inference at all - the caller owns correctness in that
mode, exactly like raw pointer-based device memory.

Host copies are an explicit, timed phase so a benchmark's time-to-solution
can include transfer, and parallel execution splits each kernel's element
range into chunks whose results are bitwise identical to serial execution.
"""

from __future__ import annotations

import enum
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import (
    AllocationFailure,
    ConfigError,
    KernelPanic,
    PendingWrites,
    UnknownBuffer,
    UnknownEvent,
)

DEFAULT_ARENA_BYTES = 2 * 1024 ** 3
ARENA_ENV_VAR = "RNGBURN_ARENA_BYTES"

_DTYPES = {"f32": np.float32, "f64": np.float64, "u32": np.uint32}

# Kernel callables receive the whole-buffer views and the element range
# [start, stop) they are responsible for.
Kernel = Callable[[Dict[int, np.ndarray], int, int], None]


class AccessMode(enum.Enum):
    READ = "read"
    WRITE = "write"
    READ_WRITE = "read_write"


@dataclass(frozen=True)
class BufferHandle:
    id: int
    length: int
    kind: str


class Event:
    """Completion marker for one submitted task; completion is monotonic."""

    def __init__(self, task_id: int):
        self.task_id = task_id
        self._completed = False

    @property
    def completed(self) -> bool:
        return self._completed

    def _mark_complete(self) -> None:
        self._completed = True


@dataclass
class _Task:
    id: int
    fn: Kernel
    extent: int
    splittable: bool
    buffer_ids: Tuple[int, ...]
    writes: Tuple[int, ...]  # buffer ids this task may write (USM: all listed)
    deps: Tuple[int, ...]
    executed: bool = False


@dataclass(frozen=True)
class Serial:
    pass


@dataclass(frozen=True)
class Parallel:
    workers: int
    chunk: Optional[int] = None

    def __post_init__(self):
        if self.workers < 1:
            raise ConfigError(f"parallel backend needs workers >= 1, got {self.workers}")
        if self.chunk is not None and self.chunk < 1:
            raise ConfigError(f"chunk must be positive, got {self.chunk}")


Backend = Union[Serial, Parallel]


def parse_backend(text: str) -> Backend:
    """Parse 'serial' or 'parallel:N'."""
    if text == "serial":
        return Serial()
    if text.startswith("parallel:"):
        try:
            return Parallel(workers=int(text.split(":", 1)[1]))
        except ValueError as exc:
            raise ConfigError(f"bad backend spec {text!r}") from exc
    raise ConfigError(f"backend must be serial or parallel:N, got {text!r}")


def backend_label(backend: Backend) -> str:
    if isinstance(backend, Serial):
        return "serial"
    return f"parallel:{backend.workers}"


@dataclass
class TaskReport:
    task_id: int
    start_ns: int
    end_ns: int

    @property
    def duration_ns(self) -> int:
        return self.end_ns - self.start_ns


@dataclass
class RunReport:
    tasks: List[TaskReport] = field(default_factory=list)
    total_ns: int = 0


class TaskGraph:
    """Buffers plus submitted tasks and their dependency edges (always acyclic)."""

    def __init__(self, arena_bytes: Optional[int] = None):
        if arena_bytes is None:
            arena_bytes = int(os.environ.get(ARENA_ENV_VAR, DEFAULT_ARENA_BYTES))
        self.arena_bytes = arena_bytes
        self.allocated_bytes = 0
        self._storage: Dict[int, np.ndarray] = {}
        self._handles: Dict[int, BufferHandle] = {}
        self._tasks: List[_Task] = []
        self._events: Dict[int, Event] = {}
        self.edges: set[Tuple[int, int]] = set()
        self._last_writer: Dict[int, int] = {}
        self._readers_since_write: Dict[int, List[int]] = {}
        self.transfer_ns = 0

    # -- buffers ------------------------------------------------------------

    def create_buffer(self, n: int, kind: str = "f32") -> BufferHandle:
        """Allocate a zero-initialized device buffer of n elements."""
        if n < 0:
            raise AllocationFailure("buffer length must be non-negative")
        if kind not in _DTYPES:
            raise AllocationFailure(f"unknown element kind {kind!r}")
        nbytes = n * np.dtype(_DTYPES[kind]).itemsize
        if self.allocated_bytes + nbytes > self.arena_bytes:
            raise AllocationFailure(
                f"arena cap exceeded: {self.allocated_bytes + nbytes} > {self.arena_bytes} bytes"
            )
        handle = BufferHandle(id=len(self._handles), length=n, kind=kind)
        self._storage[handle.id] = np.zeros(n, dtype=_DTYPES[kind])
        self._handles[handle.id] = handle
        self.allocated_bytes += nbytes
        self._readers_since_write[handle.id] = []
        return handle

    def _check_handle(self, handle: BufferHandle) -> None:
        if self._handles.get(handle.id) is not handle:
            raise UnknownBuffer(f"buffer {handle!r} does not belong to this graph")

    def buffer_view(self, handle: BufferHandle) -> np.ndarray:
        self._check_handle(handle)
        return self._storage[handle.id]

    # -- submission ---------------------------------------------------------

    def _add_task(
        self,
        fn: Kernel,
        buffer_ids: Sequence[int],
        writes: Sequence[int],
        deps: Sequence[int],
        extent: Optional[int],
        splittable: bool,
    ) -> Event:
        if extent is None:
            extent = max((self._handles[b].length for b in buffer_ids), default=0)
        task = _Task(
            id=len(self._tasks),
            fn=fn,
            extent=extent,
            splittable=splittable,
            buffer_ids=tuple(buffer_ids),
            writes=tuple(writes),
            deps=tuple(sorted(set(deps))),
        )
        self._tasks.append(task)
        for dep in task.deps:
            self.edges.add((dep, task.id))
        self._assert_acyclic()
        event = Event(task.id)
        self._events[task.id] = event
        return event

    def _assert_acyclic(self) -> None:
        # Edges may only point from earlier submissions to later ones, which
        # makes cycles structurally impossible; verify the invariant anyway.
        assert all(u < v for u, v in self.edges), "dependency edge points backwards"

    def submit_with_accessors(
        self,
        kernel: Kernel,
        accessors: Sequence[Tuple[BufferHandle, AccessMode]],
        extent: Optional[int] = None,
        splittable: bool = True,
    ) -> Event:
        """Submit a task whose dependencies are inferred from buffer access modes.

        Hazard rules: readers depend on the buffer's last writer (RAW), a new
        writer depends on every reader since the last write (WAR) and on the
        last writer itself (WAW); read_write counts as both.
        """
        seen = set()
        for handle, mode in accessors:
            self._check_handle(handle)
            if handle.id in seen:
                raise UnknownBuffer(f"buffer {handle.id} listed twice in one task")
            seen.add(handle.id)
            if not isinstance(mode, AccessMode):
                raise ConfigError(f"bad access mode {mode!r}")

        deps: List[int] = []
        writes: List[int] = []
        for handle, mode in accessors:
            reads_buf = mode in (AccessMode.READ, AccessMode.READ_WRITE)
            writes_buf = mode in (AccessMode.WRITE, AccessMode.READ_WRITE)
            if reads_buf and handle.id in self._last_writer:
                deps.append(self._last_writer[handle.id])
            if writes_buf:
                deps.extend(self._readers_since_write[handle.id])
                if handle.id in self._last_writer:
                    deps.append(self._last_writer[handle.id])
                writes.append(handle.id)

        event = self._add_task(
            kernel,
            buffer_ids=[h.id for h, _ in accessors],
            writes=writes,
            deps=deps,
            extent=extent,
            splittable=splittable,
        )
        task_id = event.task_id
        for handle, mode in accessors:
            if mode in (AccessMode.WRITE, AccessMode.READ_WRITE):
                self._last_writer[handle.id] = task_id
                self._readers_since_write[handle.id] = []
            if mode in (AccessMode.READ, AccessMode.READ_WRITE):
                self._readers_since_write[handle.id].append(task_id)
        return event

    def submit_with_events(
        self,
        kernel: Kernel,
        buffers_unchecked: Sequence[BufferHandle],
        deps: Sequence[Event],
        extent: Optional[int] = None,
        splittable: bool = True,
    ) -> Event:
        """Submit a task ordered only by the given events; nothing is inferred.

        The listed buffers are made visible to the kernel but carry no access
        information, so any of them may be written as far as the runtime
        knows. Missing a real dependency is the caller's bug, as with raw
        device pointers.
        """
        for handle in buffers_unchecked:
            self._check_handle(handle)
        for ev in deps:
            if self._events.get(ev.task_id) is not ev:
                raise UnknownEvent(f"event for task {ev.task_id} does not belong to this graph")
        ids = [h.id for h in buffers_unchecked]
        return self._add_task(
            kernel,
            buffer_ids=ids,
            writes=ids,
            deps=[ev.task_id for ev in deps],
            extent=extent,
            splittable=splittable,
        )

    # -- execution ----------------------------------------------------------

    def _views(self, task: _Task) -> Dict[int, np.ndarray]:
        return {b: self._storage[b] for b in task.buffer_ids}

    def _chunks(self, task: _Task, backend: Backend) -> List[Tuple[int, int]]:
        if isinstance(backend, Serial) or not task.splittable or task.extent == 0:
            return [(0, task.extent)]
        size = backend.chunk
        if size is None:
            size = max(4096, -(-task.extent // (4 * backend.workers)))
        return [(a, min(a + size, task.extent)) for a in range(0, task.extent, size)]

    def run(self, backend: Backend) -> RunReport:
        """Execute all pending tasks; predecessors always finish first.

        The parallel backend runs independent tasks simultaneously and splits
        each splittable kernel across workers; final buffer contents are
        bitwise identical to serial execution for correctly declared graphs.
        """
        pending = [t for t in self._tasks if not t.executed]
        report = RunReport()
        t_run0 = time.perf_counter_ns()
        if isinstance(backend, Serial):
            for task in pending:
                t0 = time.perf_counter_ns()
                try:
                    task.fn(self._views(task), 0, task.extent)
                except Exception as exc:
                    raise KernelPanic(f"task {task.id} failed: {exc}") from exc
                t1 = time.perf_counter_ns()
                task.executed = True
                self._events[task.id]._mark_complete()
                report.tasks.append(TaskReport(task.id, t0, t1))
            report.total_ns = time.perf_counter_ns() - t_run0
            return report

        self._run_parallel(pending, backend, report)
        report.total_ns = time.perf_counter_ns() - t_run0
        return report

    def _run_parallel(self, pending: List[_Task], backend: Parallel, report: RunReport) -> None:
        pending_ids = {t.id for t in pending}
        indegree = {t.id: sum(1 for d in t.deps if d in pending_ids) for t in pending}
        dependents: Dict[int, List[int]] = {t.id: [] for t in pending}
        for u, v in self.edges:
            if u in pending_ids and v in pending_ids:
                dependents[u].append(v)
        by_id = {t.id: t for t in pending}

        lock = threading.Lock()
        done = threading.Event()
        state: Dict[int, dict] = {}
        failure: List[BaseException] = []
        launched: set = set()
        remaining = set(pending_ids)

        def account(task_id: int) -> None:
            # lock held
            remaining.discard(task_id)
            if not remaining:
                done.set()

        def launch(executor: ThreadPoolExecutor, task: _Task) -> None:
            chunks = self._chunks(task, backend)
            st = state[task.id] = {"left": len(chunks), "start": None, "failed": False}
            views = self._views(task)
            with lock:
                launched.add(task.id)
            for a, b in chunks:
                executor.submit(run_chunk, task, st, views, a, b)

        def run_chunk(task: _Task, st: dict, views: Dict[int, np.ndarray], a: int, b: int) -> None:
            now = time.perf_counter_ns()
            with lock:
                if st["start"] is None:
                    st["start"] = now
            ok = True
            try:
                task.fn(views, a, b)
            except BaseException as exc:
                ok = False
                with lock:
                    failure.append(KernelPanic(f"task {task.id} failed: {exc}"))
                    # Tasks never launched can no longer run; account them now
                    # so the run can drain without deadlocking.
                    for tid in list(remaining):
                        if tid not in launched:
                            account(tid)
            finish_chunk(task, st, ok)

        def finish_chunk(task: _Task, st: dict, ok: bool) -> None:
            ready: List[_Task] = []
            with lock:
                if not ok:
                    st["failed"] = True
                st["left"] -= 1
                if st["left"] > 0:
                    return
                end = time.perf_counter_ns()
                if not st["failed"]:
                    task.executed = True
                    self._events[task.id]._mark_complete()
                    report.tasks.append(TaskReport(task.id, st["start"], end))
                    if not failure:
                        for dep_id in dependents[task.id]:
                            indegree[dep_id] -= 1
                            if indegree[dep_id] == 0:
                                ready.append(by_id[dep_id])
                account(task.id)
            for t in ready:
                launch(executor, t)

        with ThreadPoolExecutor(max_workers=backend.workers) as executor:
            roots = [t for t in pending if indegree[t.id] == 0]
            for t in roots:
                launch(executor, t)
            if pending:
                done.wait()
        if failure:
            raise failure[0]

    # -- host transfer ------------------------------------------------------

    def copy_to_host(self, handle: BufferHandle) -> np.ndarray:
        """Snapshot a device buffer into host memory; the copy time is recorded.

        Raises PendingWrites while any unexecuted task may still write the
        buffer (event-list tasks are treated as potential writers of every
        buffer they list).
        """
        self._check_handle(handle)
        for task in self._tasks:
            if not task.executed and handle.id in task.writes:
                raise PendingWrites(f"buffer {handle.id} has pending writer task {task.id}")
        t0 = time.perf_counter_ns()
        host = self._storage[handle.id].copy()
        self.transfer_ns += time.perf_counter_ns() - t0
        return host
