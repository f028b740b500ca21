"""
GField - Backend

    A pool of worker threads pulling CalcJobs from a queue and pushing
        CalcJobResults back; map() reassembles results in submission order
"""
# License: GPLv3, see License.txt

from __future__ import annotations

import time
import queue

from dataclasses import dataclass
from traceback import format_exc
from typing import Any, Callable, Sequence

from threading import Event, Thread

from .common import IdProvider, get_worker_cap, log, time_nano, time_nano_pretty


class BackendException(Exception):
    """exception specific to backend"""


@dataclass
class CalcJob:
    """Calculation Job: func(*args)"""
    func: Callable[..., Any]
    args: tuple = ()
    job_id: int = 0  # will be set internally, 0 = unset


@dataclass
class CalcJobResult:
    """Result of a Calculation Job"""
    job_id: int  # matching calcjob
    output: Any
    duration: int  # ns, how long calculation took to perform
    error: bool = False
    error_message: str = ''
    error_traceback: str = ''


class WorkerResources:
    """The resources provided to worker so they can handle jobs"""

    def __init__(self, job_queue: queue.Queue, results_queue: queue.Queue, stopper: Event, worker_name: str) -> None:
        self.job_queue = job_queue
        self.results_queue = results_queue
        self.stopper = stopper
        self.worker_name = worker_name


class BackendConfig:
    """static global config values for backend"""
    queue_timeout: float = 0.05  # seconds, how long a worker blocks on an empty queue before checking the stopper
    wait_increment: float = 0.01  # seconds, how long for "wait for this" scenarios to wait before checking again
    wait_stop: float = 4.0  # seconds, how long to wait for workers to stop


def handle_job(job: CalcJob) -> CalcJobResult:
    """Run one job, capturing its error instead of raising"""
    t_start = time_nano()
    try:
        output = job.func(*job.args)
    except Exception as ex:
        return CalcJobResult(job.job_id, None, time_nano() - t_start, True, str(ex), format_exc())
    return CalcJobResult(job.job_id, output, time_nano() - t_start)


def worker_function(resources: WorkerResources):
    """
    Worker function, which processes the job queue
        this is what runs inside each worker thread; a None job means stop
    """
    log.debug(f'[{resources.worker_name}] Starting up')
    while not resources.stopper.is_set():
        try:
            job = resources.job_queue.get(timeout=BackendConfig.queue_timeout)
        except queue.Empty:
            continue
        if job is None:
            break
        resources.results_queue.put(handle_job(job))
    log.debug(f'[{resources.worker_name}] Shutting down')


class Backend:
    """Worker thread pool (numpy and the numba kernel release the GIL)"""

    def __init__(self, num_workers: int = 1) -> None:
        self.num_workers = get_worker_cap(num_workers)
        self.job_queue: queue.Queue = queue.Queue()
        self.results_queue: queue.Queue = queue.Queue()
        self.stopper = Event()
        self.workers: list[Thread] = []
        self.callbacks: dict[int, Callable[[CalcJobResult], None]] = {}
        self.id_provider = IdProvider(1)

    # public (run on main thread)

    def start(self):
        """Start backend service"""
        log.debug(f'Starting {self.num_workers} worker thread(s)')
        for i in range(1, self.num_workers + 1):
            worker_name = f'GFieldWorker-{i}'
            resources = WorkerResources(self.job_queue, self.results_queue, self.stopper, worker_name)
            worker = Thread(target=worker_function, name=worker_name, args=(resources,), daemon=True)
            worker.start()
            self.workers.append(worker)

    def stop(self):
        """Stop backend service"""
        for _ in self.workers:
            self.job_queue.put(None)
        self.stopper.set()
        deadline = time.monotonic() + BackendConfig.wait_stop
        for worker in self.workers:
            worker.join(max(0.0, deadline - time.monotonic()))
        stuck = [w.name for w in self.workers if w.is_alive()]
        if stuck:
            log.warning(f'Workers took too long to shutdown on their own: {", ".join(stuck)}')
        self.workers.clear()

    def submit(self, job: CalcJob, callback: Callable[[CalcJobResult], None]):
        """Submit a calculation job with a callback"""
        if not self.workers:
            raise BackendException('Backend is not running')
        job.job_id = self.id_provider.next_id()
        self.callbacks[job.job_id] = callback
        self.job_queue.put(job)

    def check(self, timeout: float = 0.0) -> int:
        """Call the callbacks of available results, waiting up to timeout for the first one; returns how many were handled"""
        handled = 0
        while True:
            try:
                result = self.results_queue.get(timeout=timeout) if timeout > 0 and handled == 0 else self.results_queue.get_nowait()
            except queue.Empty:
                return handled
            callback = self.callbacks.pop(result.job_id)
            callback(result)
            handled += 1

    def wait(self):
        """Block until every submitted job has returned"""
        while self.callbacks:
            if not any(w.is_alive() for w in self.workers):
                raise BackendException(f'All workers died with {len(self.callbacks)} job(s) outstanding')
            self.check(BackendConfig.wait_increment)

    def map(self, func: Callable[..., Any], args: Sequence[tuple]) -> list[Any]:
        """[func(*a) for a in args], computed by the workers, in the order of args"""
        t_start = time_nano()
        results: dict[int, CalcJobResult] = {}
        ids = []
        for a in args:
            job = CalcJob(func, tuple(a))
            self.submit(job, lambda r: results.__setitem__(r.job_id, r))
            ids.append(job.job_id)
        self.wait()
        failed = [results[i] for i in ids if results[i].error]
        if failed:
            first = failed[0]
            raise BackendException(f'{len(failed)} of {len(ids)} job(s) failed, first: {first.error_message}\n{first.error_traceback}')
        log.debug(f'{len(ids)} job(s) of {getattr(func, "__name__", func)} took {time_nano_pretty(time_nano() - t_start)}')
        return [results[i].output for i in ids]

    def __enter__(self) -> Backend:
        self.start()
        return self

    def __exit__(self, exc_type, exc_value, tb):
        self.stop()
        return False


def run_parallel(func: Callable[..., Any], args: Sequence[tuple], workers: int = 1) -> list[Any]:
    """func over args, through a temporary Backend when more than one worker is useful"""
    if get_worker_cap(workers) > 1 and len(args) > 1:
        with Backend(workers) as backend:
            return backend.map(func, args)
    return [func(*a) for a in args]

