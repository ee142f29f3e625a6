"""Compare the compiled and numpy backward tracers on the same workload.

Usage: python benchmarks/bench_trace.py [--h 0.02] [--repeat 3]
"""

import argparse
import time

import numpy as np

from carleman_lab import geometry, velocity
from carleman_lab.kernels import compiled_trace_backward, python_trace_backward
from carleman_lab.transport import CharacteristicSolver


def workload(h):
    dom = geometry.Domain.disk()
    fld = velocity.rotation(1.0, 1.0, 2.0 * np.pi)
    zero = lambda p, *t: np.zeros(len(p))  # noqa: E731
    return CharacteristicSolver(dom, fld, zero, zero), dom.interior_grid(h).nodes


def best_of(solver, nodes, backend, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        out = solver.trace(nodes, np.pi, backend=backend)
        times.append(time.perf_counter() - start)
    return min(times), out


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--h", type=float, default=0.02)
    ap.add_argument("--repeat", type=int, default=3)
    a = ap.parse_args()
    solver, nodes = workload(a.h)
    print(f"nodes: {len(nodes)}")
    t_py, out_py = best_of(solver, nodes, python_trace_backward, a.repeat)
    print(f"python  : {t_py * 1e3:9.2f} ms")
    compiled = compiled_trace_backward()
    if compiled is None:
        print("compiled: extension not built")
        return
    t_c, out_c = best_of(solver, nodes, compiled, a.repeat)
    gap = float(np.max(np.abs(out_py[0] - out_c[0])))
    print(f"compiled: {t_c * 1e3:9.2f} ms  (speedup {t_py / t_c:.1f}x, max foot gap {gap:.2e})")


if __name__ == "__main__":
    main()
