"""Compiled vs pure-Python kernels, alone and inside the full tracker.

    python3 benchmarks/bench_backends.py [--repeat 5]

Prints one CSV row per (workload, backend) with the median wall time.
"""

import argparse
import statistics
import time

import numpy as np

from cbiou import _backend, synth
from cbiou.geometry import KIND_IOU
from cbiou.tracker import TrackerConfig, run_sequence


def _median_time(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


def workloads(rng):
    a = np.column_stack([rng.uniform(0, 1000, (200, 2)), rng.uniform(10, 50, (200, 2))])
    b = np.column_stack([rng.uniform(0, 1000, (200, 2)), rng.uniform(10, 50, (200, 2))])
    score = rng.uniform(0, 1, (60, 60))
    dist = rng.uniform(0, 1, (150, 150))
    dist = (dist + dist.T) / 2
    np.fill_diagonal(dist, 0)
    scene = synth.generate(synth.SceneSpec(seed=3, n_objects=22, n_frames=750))
    cfg = TrackerConfig()
    return {
        "scores_200x200": lambda: _backend.pairwise_scores(a, b, KIND_IOU, 0.7),
        "hungarian_60x60": lambda: _backend.solve_assignment(score),
        "linkage_150": lambda: _backend.average_linkage(dist, 0.5),
        "tracker_750f_22obj": lambda: run_sequence(cfg, scene.detections),
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    jobs = workloads(np.random.default_rng(0))
    print("workload,backend,median_ms,speedup_vs_python")
    for label, fn in jobs.items():
        base = None
        for backend in ("python", "compiled"):
            if backend not in _backend.BACKENDS:
                print(f"{label},{backend},n/a,n/a")
                continue
            _backend.use(backend)
            fn()  # warm-up
            t = _median_time(fn, args.repeat)
            base = base or t
            print(f"{label},{backend},{1000 * t:.3f},{base / t:.2f}")


if __name__ == "__main__":
    main()
