import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from mono3d.bench import amdahl_bound, fit_amdahl, max_speedup, run_bench, write_bench_csv
from mono3d.errors import InvalidInput
from mono3d.filter import KernelSpec

times = st.floats(0.0, 100.0)


def test_examples():
    assert amdahl_bound(0.3, 0.7, 1) == 1.0
    assert amdahl_bound(0.0, 2.0, 8) == 8.0
    # (1 + 9) / (1 + 9 / 9) = 5
    assert amdahl_bound(1.0, 9.0, 9) == 5.0
    assert max_speedup(1.0, 9.0) == 10.0
    assert max_speedup(0.0, 1.0) == math.inf


@pytest.mark.parametrize("args", [(-1, 1, 2), (1, -1, 2), (0, 0, 2), (1, 1, 0), (1, 1, 1.5)])
def test_invalid(args):
    with pytest.raises(InvalidInput):
        amdahl_bound(*args)


@given(times, times.filter(lambda x: x > 0), st.integers(1, 500))
def test_bounded_and_monotone(sigma, phi, p):
    s = amdahl_bound(sigma, phi, p)
    assert 1.0 <= s <= p * (1 + 1e-12)
    assert amdahl_bound(sigma, phi, p + 1) >= s * (1 - 1e-12)
    if sigma > 0:
        assert s <= max_speedup(sigma, phi) * (1 + 1e-12)


def test_fit_recovers_exact_curve():
    ps = [1, 2, 4, 8]
    sigma, phi = fit_amdahl(ps, [0.2 + 1.6 / p for p in ps])
    assert sigma == pytest.approx(0.2, abs=1e-12)
    assert phi == pytest.approx(1.6, abs=1e-12)


def test_fit_never_negative():
    # times that grow with p would give a negative parallel part
    sigma, phi = fit_amdahl([1, 2, 4], [1.0, 1.1, 1.2])
    assert sigma >= 0 and phi >= 0


def test_run_bench_small(tmp_path, sim6):
    res = run_bench(sim6, KernelSpec.square(), worker_counts=(2,), repetitions=3, resolution=0.04)
    assert res.worker_counts == [1, 2]
    assert len(res.wall_times) == 2 and all(t > 0 for t in res.wall_times)
    assert res.speedups()[0] == 1.0
    assert res.sigma_n >= 0 and res.phi_n >= 0
    assert res.profiled_phi > 0 and res.profiled_sigma >= 0
    path = tmp_path / "bench.csv"
    write_bench_csv(res, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "kernel,workers,median_wall_s,speedup"
    assert lines[1].startswith("square,1,")
    assert lines[-1].startswith("# fit kernel=square sigma_s=")


def test_run_bench_needs_repetitions(sim6):
    with pytest.raises(InvalidInput):
        run_bench(sim6, KernelSpec.square(), repetitions=2)
