"""Compare the compiled and numpy kernel backends on trial-sized inputs.

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import timeit

import numpy as np

from robot_vitals import _kernels
from robot_vitals._kernels import _pykernels


def cases(rng):
    img = rng.normal(5.0, 0.5, (19, 19))
    p = rng.random(120)
    flags = (rng.random(120) < 0.4).astype(np.uint8)
    cx = rng.random(80) - 0.5
    cy = rng.random(80) - 0.5
    perms = np.argsort(rng.random((10_000, 80)), axis=1)
    u1, u2 = rng.random(180), rng.random(180)
    return {
        "immerkaer_abs_sum 19x19": lambda k: k.immerkaer_abs_sum(img),
        "windowed_entropy n=120": lambda k: k.windowed_entropy(p, 5),
        "run_lengths n=120": lambda k: k.run_lengths(flags),
        "permutation_abs_count 1e4x80": lambda k: k.permutation_abs_count(cx, cy, perms, 0.1),
        "box_muller n=180": lambda k: k.box_muller(u1, u2),
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    backends = {"python": _pykernels}
    if "cython" in _kernels.available_backends():
        from robot_vitals._kernels import _ckernels
        backends["cython"] = _ckernels
    print(f"{'kernel':<30}" + "".join(f"{b:>14}" for b in backends) + f"{'speedup':>10}")
    for name, fn in cases(np.random.default_rng(0)).items():
        times = {}
        for b, mod in backends.items():
            n, _ = timeit.Timer(lambda: fn(mod)).autorange()
            times[b] = min(timeit.repeat(lambda: fn(mod), number=n, repeat=args.repeat)) / n
        row = f"{name:<30}" + "".join(f"{times[b] * 1e6:>11.1f} us" for b in backends)
        if "cython" in times:
            row += f"{times['python'] / times['cython']:>9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
