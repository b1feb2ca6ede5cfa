"""Compare the numba and numpy geometry kernels.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--points 200000]

Each kernel runs once untimed (JIT warm-up), then ``--repeat`` times; the
best wall time is reported. Results are also checked for agreement.
"""

import argparse
import time

import numpy as np

from freightej.kernels import backends


def star(n_vertices, radius, rng, cx=0.0, cy=0.0):
    t = np.sort(rng.uniform(0, 2 * np.pi, n_vertices))
    r = radius * rng.uniform(0.4, 1.0, n_vertices)
    return np.column_stack([cx + r * np.cos(t), cy + r * np.sin(t)])


def best_of(fn, repeat):
    fn()  # warm-up
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--points", type=int, default=200_000)
    ap.add_argument("--vertices", type=int, default=400)
    args = ap.parse_args()

    rng = np.random.default_rng(7)
    ring = star(args.vertices, 150_000.0, rng, 300_000.0, 300_000.0)
    px = rng.uniform(100_000, 500_000, args.points)
    py = rng.uniform(100_000, 500_000, args.points)
    cell = 36_000.0
    c0, c1 = int(ring[:, 0].min() // cell), int(ring[:, 0].max() // cell) + 1
    r0, r1 = int(ring[:, 1].min() // cell), int(ring[:, 1].max() // cell) + 1

    cases = {
        "ring_signed_area": lambda k: k.ring_signed_area(ring),
        "clip_ring_rect": lambda k: k.clip_ring_rect(ring, 250_000.0, 250_000.0,
                                                     350_000.0, 350_000.0),
        "ring_cell_areas": lambda k: k.ring_cell_areas(ring, 0.0, 0.0, cell, c0, c1, r0, r1),
        "points_ring_location": lambda k: k.points_ring_location(px, py, ring),
    }
    impls = backends()
    print(f"{'kernel':<22}" + "".join(f"{name:>12}" for name in impls) + "     speedup")
    for name, call in cases.items():
        times = {b: best_of(lambda: call(k), args.repeat) for b, k in impls.items()}
        outs = {b: call(k) for b, k in impls.items()}
        ref = outs["numpy"]
        for b, out in outs.items():
            if not np.allclose(out, ref, rtol=1e-12, atol=1e-6):
                raise SystemExit(f"{name}: {b} disagrees with numpy")
        line = f"{name:<22}" + "".join(f"{times[b] * 1e3:>10.3f}ms" for b in impls)
        if "numba" in times:
            line += f"  {times['numpy'] / times['numba']:>9.1f}x"
        print(line)


if __name__ == "__main__":
    main()
