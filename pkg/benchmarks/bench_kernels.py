"""Compare the compiled kernels with the numpy fallback.

    python benchmarks/bench_kernels.py [--repeats 20]
"""
import argparse

from qcgnn import _kernels
from qcgnn.benchmarks import bench_kernels


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeats", type=int, default=20)
    a = ap.parse_args()
    print(f"active backend: {_kernels.BACKEND}")
    res = bench_kernels(a.repeats)
    print(f"{'kernel':38s} {'python (us)':>12s} {'cython (us)':>12s} {'speedup':>8s}")
    for name, row in res.items():
        cy = row.get("cython")
        sp = row.get("speedup")
        print(f"{name:38s} {row['python'] * 1e6:12.1f} {'-' if cy is None else f'{cy * 1e6:12.1f}':>12s} "
              f"{'-' if sp is None else f'{sp:7.1f}x':>8s}")


if __name__ == "__main__":
    main()
