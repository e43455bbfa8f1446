"""Compare the compiled and NumPy blob kernels.

Times the O(S^2) velocity sum and the energy row sums on a perturbed circle
for a range of blob counts, reports the best of ``--repeat`` runs per
backend, and checks that the two backends agree.

    python3 benchmarks/bench_kernels.py --sizes 500 1000 2000 4000
"""

from __future__ import annotations

import argparse
import json
import time

import numpy as np

from vortexzone import kernels
from vortexzone.blob_sim import KHConfig, init_from_curve, kh_perturb
from vortexzone.curve import ClosedCurve, ScalarField


def best_time(fn, repeat: int) -> tuple[float, object]:
    best, result = float("inf"), None
    for _ in range(repeat):
        start = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - start)
    return best, result


def bench(size: int, repeat: int) -> dict:
    z = kh_perturb(ClosedCurve.circle(size), KHConfig())
    state = init_from_curve(z, ScalarField.constant(z.grid, 0.25), size, 0.002)
    row = {"S": size}
    outputs = {}
    for name in kernels.available_backends():
        with kernels.use_backend(name):
            tv, vel = best_time(lambda: kernels.induced_velocity(state.positions, state.positions, state.weights, state.delta), repeat)
            te, rows = best_time(lambda: kernels.log_energy_rows(state.positions, state.weights, state.delta), repeat)
        row[f"{name}_velocity_s"] = tv
        row[f"{name}_energy_s"] = te
        outputs[name] = (vel, rows)
    if len(outputs) == 2:
        (v1, e1), (v2, e2) = outputs.values()
        row["velocity_max_diff"] = float(np.max(np.abs(v1 - v2)))
        row["energy_max_diff"] = float(np.max(np.abs(e1 - e2)))
        row["velocity_speedup"] = row["python_velocity_s"] / row["cython_velocity_s"]
        row["energy_speedup"] = row["python_energy_s"] / row["cython_energy_s"]
    return row


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", type=int, nargs="+", default=[500, 1000, 2000, 4000])
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--json", action="store_true", help="print rows as JSON lines")
    args = parser.parse_args(argv)

    backends = kernels.available_backends()
    if "cython" not in backends:
        print("compiled extension not built; timing the NumPy kernels only")
    rows = [bench(s, args.repeat) for s in args.sizes]
    if args.json:
        for row in rows:
            print(json.dumps(row))
        return 0
    header = f"{'S':>6}  " + "  ".join(f"{b + ' vel':>12}  {b + ' energy':>14}" for b in backends)
    if len(backends) == 2:
        header += f"  {'speedup':>15}  {'max |dv|':>9}"
    print(header)
    for row in rows:
        line = f"{row['S']:>6}  " + "  ".join(
            f"{row[b + '_velocity_s'] * 1e3:>9.1f} ms  {row[b + '_energy_s'] * 1e3:>11.1f} ms" for b in backends
        )
        if len(backends) == 2:
            line += f"  {row['velocity_speedup']:>5.1f}x / {row['energy_speedup']:>4.1f}x  {row['velocity_max_diff']:>9.1e}"
        print(line)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
