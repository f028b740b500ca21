"""
GField - worker pool
"""
# License: GPLv3, see License.txt

import pytest

from gfield.backend import Backend, BackendException, CalcJob, handle_job, run_parallel
from gfield.common import get_worker_cap


def _square(x):
    return x * x


def _fail(x):
    raise ValueError(f'bad {x}')


def test_handle_job_captures_errors():
    ok = handle_job(CalcJob(_square, (3,), 7))
    assert (ok.job_id, ok.output, ok.error) == (7, 9, False)
    bad = handle_job(CalcJob(_fail, (1,), 8))
    assert bad.error
    assert bad.error_message == 'bad 1'
    assert 'ValueError' in bad.error_traceback


def test_map_keeps_submission_order():
    with Backend(3) as backend:
        assert backend.map(_square, [(i,) for i in range(20)]) == [i * i for i in range(20)]


def test_map_reports_failures():
    with Backend(2) as backend:
        with pytest.raises(BackendException, match='1 of 3'):
            backend.map(lambda x: _fail(x) if x == 1 else x, [(0,), (1,), (2,)])


def test_submit_requires_running_backend():
    with pytest.raises(BackendException):
        Backend(1).submit(CalcJob(_square, (1,)), lambda r: None)


def test_stop_joins_workers():
    backend = Backend(2)
    backend.start()
    assert len(backend.workers) == 2
    backend.stop()
    assert not backend.workers


@pytest.mark.parametrize('workers', [1, 4])
def test_run_parallel(workers):
    assert run_parallel(_square, [(i,) for i in range(7)], workers) == [i * i for i in range(7)]


def test_worker_cap(monkeypatch):
    monkeypatch.delenv('GFIELD_THREADS', raising=False)
    assert get_worker_cap(6) == 6
    assert get_worker_cap(0) == 1
    monkeypatch.setenv('GFIELD_THREADS', '2')
    assert get_worker_cap(6) == 2
    monkeypatch.setenv('GFIELD_THREADS', 'many')
    assert get_worker_cap(6) == 6
