from __future__ import annotations

import heapq
import itertools
import logging
import threading
import time
from collections.abc import Callable
from dataclasses import dataclass, field

from refaas.errors import QueueFull

log = logging.getLogger(__name__)


@dataclass(frozen=True, order=True)
class JobQueueEntry:
    # ordering key: higher priority first, then enqueue order
    sort_key: tuple[int, int] = field(repr=False)
    job_id: str = field(compare=False)
    enqueue_time: float = field(compare=False)
    priority: int = field(compare=False, default=0)


class JobQueue:
    """Bounded priority queue, FIFO among equal priorities."""

    def __init__(self, bound: int):
        self.bound = bound
        self._heap: list[JobQueueEntry] = []
        self._seq = itertools.count()
        self._cond = threading.Condition()
        self._closed = False

    def __len__(self) -> int:
        with self._cond:
            return len(self._heap)

    def put(self, job_id: str, priority: int = 0) -> JobQueueEntry:
        with self._cond:
            if self._closed:
                raise RuntimeError("queue is closed")
            if len(self._heap) >= self.bound:
                raise QueueFull(f"queue holds {self.bound} jobs")
            entry = JobQueueEntry((-priority, next(self._seq)), job_id, time.time(), priority)
            heapq.heappush(self._heap, entry)
            self._cond.notify()
            return entry

    def get(self, timeout: float | None = None) -> JobQueueEntry | None:
        """Next entry, or None once the queue is closed and drained (or on timeout)."""
        with self._cond:
            deadline = None if timeout is None else time.monotonic() + timeout
            while not self._heap:
                if self._closed:
                    return None
                remaining = None if deadline is None else deadline - time.monotonic()
                if remaining is not None and remaining <= 0:
                    return None
                self._cond.wait(remaining)
            return heapq.heappop(self._heap)

    def close(self) -> None:
        with self._cond:
            self._closed = True
            self._cond.notify_all()


class WorkerPool:
    """Fixed set of threads that hand queue entries to ``handler``."""

    def __init__(self, size: int, queue: JobQueue, handler: Callable[[JobQueueEntry], None]):
        self.queue = queue
        self.handler = handler
        self._threads = [threading.Thread(target=self._run, name=f"refaas-worker-{i}", daemon=True) for i in range(size)]
        self._busy = 0
        self._lock = threading.Lock()

    def start(self) -> None:
        for t in self._threads:
            t.start()

    @property
    def busy(self) -> int:
        with self._lock:
            return self._busy

    def _run(self) -> None:
        while True:
            entry = self.queue.get()
            if entry is None:
                return
            with self._lock:
                self._busy += 1
            try:
                self.handler(entry)
            except Exception:
                log.exception("worker failed on job %s", entry.job_id)
            finally:
                with self._lock:
                    self._busy -= 1

    def stop(self, timeout: float | None = None) -> None:
        self.queue.close()
        for t in self._threads:
            if t.is_alive():
                t.join(timeout)
