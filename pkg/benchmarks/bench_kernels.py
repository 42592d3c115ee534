"""Time the compiled and numpy kernel paths on the same inputs.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--boxes 1000] [--pipeline]

Compilation happens in a warm-up call that is not timed.  Both paths are
checked for agreement before timing.  ``--pipeline`` also times one full
localisation per path in a fresh interpreter, switched by ``SPECLOCAL_JIT``.
"""
import argparse
import os
import subprocess
import sys
import time

import numpy as np

from speclocal import kernels
from speclocal._jit import HAS_NUMBA


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


PIPELINE_SNIPPET = """
import time
import numpy as np
from speclocal.pipeline import localize_image
from speclocal.synthetic import make_corpus
img, _ = make_corpus(2, seed=2024)[1]
localize_image(img)  # warm-up, includes any compilation
start = time.perf_counter()
localize_image(img)
print(time.perf_counter() - start)
"""


def pipeline_seconds(jit):
    env = dict(os.environ, SPECLOCAL_JIT="1" if jit else "0")
    out = subprocess.run([sys.executable, "-c", PIPELINE_SNIPPET], env=env, check=True,
                         capture_output=True, text=True)
    return float(out.stdout.strip().splitlines()[-1])


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--boxes", type=int, default=1000)
    parser.add_argument("--pipeline", action="store_true", help="also time one end-to-end localisation")
    args = parser.parse_args(argv)
    if not HAS_NUMBA:
        raise SystemExit("numba is not installed; only the numpy path is available")

    rng = np.random.default_rng(0)
    gray = rng.random((375, 500))
    xy = rng.integers(0, 300, size=(args.boxes, 2))
    wh = rng.integers(16, 200, size=(args.boxes, 2))
    wh = np.minimum(wh, np.array([500, 375]) - xy)
    boxes = np.ascontiguousarray(np.hstack([xy, wh]).astype(np.int64))
    mag = rng.random((375, 500))
    pos = rng.uniform(-0.5, 8.5, size=mag.shape)

    cases = [
        ("hog_batch", lambda: kernels._hog_batch_numba(gray, boxes), lambda: kernels._hog_batch_numpy(gray, boxes)),
        ("resize_bilinear", lambda: kernels._resize_bilinear_numba(gray, 64, 64),
         lambda: kernels._resize_bilinear_numpy(gray, 64, 64)),
        ("orientation_histograms", lambda: kernels._orientation_histograms_numba(mag, pos, 9, 8),
         lambda: kernels._orientation_histograms_numpy(mag, pos, 9, 8)),
    ]
    print(f"{'kernel':<24}{'numba (s)':>12}{'numpy (s)':>12}{'speed-up':>10}{'max |diff|':>12}")
    for name, jit_fn, np_fn in cases:
        diff = float(np.max(np.abs(jit_fn() - np_fn())))
        t_jit = best_of(jit_fn, args.repeat)
        t_np = best_of(np_fn, args.repeat)
        print(f"{name:<24}{t_jit:>12.4f}{t_np:>12.4f}{t_np / t_jit:>9.1f}x{diff:>12.1e}")
    if args.pipeline:
        t_jit, t_np = pipeline_seconds(True), pipeline_seconds(False)
        print(f"{'localize (200x200)':<24}{t_jit:>12.4f}{t_np:>12.4f}{t_np / t_jit:>9.1f}x{'':>12}")


if __name__ == "__main__":
    main()
