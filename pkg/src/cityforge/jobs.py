"""In-process job registry with a single worker thread.

Mutating operations (plan, expand) all flow through the same worker, which is
what serializes writes to a project: a second expansion submitted while one is
running simply waits in the queue.
"""

from __future__ import annotations

import queue
import threading
import time
from dataclasses import dataclass, field
from typing import Any, Callable


@dataclass
class JobStatus:
    job_id: str
    kind: str
    state: str = "queued"  # queued -> running -> done | failed (terminal)
    progress: float = 0.0
    error: str | None = None
    result: dict[str, Any] | None = None
    created_at: float = field(default_factory=time.time)
    started_at: float | None = None
    finished_at: float | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.job_id,
            "kind": self.kind,
            "state": self.state,
            "progress": round(self.progress, 4),
            "error": self.error,
            "result": self.result,
        }


class JobManager:
    def __init__(self):
        self._queue: queue.Queue = queue.Queue()
        self._jobs: dict[str, JobStatus] = {}
        self._lock = threading.Lock()
        self._counter = 0
        self._worker = threading.Thread(target=self._run, daemon=True)
        self._worker.start()

    def submit(self, kind: str, fn: Callable[[JobStatus], dict[str, Any] | None]) -> JobStatus:
        with self._lock:
            self._counter += 1
            job = JobStatus(job_id=f"{kind}-{self._counter:04d}", kind=kind)
            self._jobs[job.job_id] = job
        self._queue.put((job, fn))
        return job

    def get(self, job_id: str) -> JobStatus | None:
        with self._lock:
            return self._jobs.get(job_id)

    def wait(self, job_id: str, timeout: float = 30.0) -> JobStatus:
        deadline = time.time() + timeout
        while time.time() < deadline:
            job = self.get(job_id)
            if job is not None and job.state in ("done", "failed"):
                return job
            time.sleep(0.01)
        raise TimeoutError(f"job {job_id} did not finish within {timeout}s")

    def _run(self) -> None:
        while True:
            job, fn = self._queue.get()
            job.state = "running"
            job.started_at = time.time()
            try:
                result = fn(job)
                job.result = result
                job.progress = 1.0
                job.state = "done"
            except Exception as exc:  # surfaced through the job, not the worker
                job.error = str(exc)
                job.state = "failed"
            finally:
                job.finished_at = time.time()
                self._queue.task_done()
