"""Compare the compiled and pure-Python integration kernels.

Usage: python3 benchmarks/bench_kernel.py [--seconds 2.0]

Runs the same droop probe on both backends, reports integration steps per
second, the speedup, and the largest difference between the two outputs.
"""
import argparse
import math
import time

import numpy as np

from gridspec import _backend
from gridspec.devices import DroopParams
from gridspec.network import LineParams
from gridspec.testbench import DeviceUnderTest, ProbeConfig, TestbenchConfig, simulate_probe_run


def bench(backend, cfg, probe, repeats):
    best = math.inf
    rec = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        rec = simulate_probe_run(cfg, probe, backend=backend)
        best = min(best, time.perf_counter() - t0)
    steps = probe.settle_steps() + probe.measure_periods * probe.steps_per_period()
    return steps / best, rec


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seconds", type=float, default=2.0, help="simulated time per run")
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()
    w0 = 2 * math.pi * 50
    line = LineParams.from_scr(5.0, 0.1 * w0, 1.0, w0)
    cfg = TestbenchConfig(line, DeviceUnderTest(DroopParams(0.05, 0.1)), 0.5)
    probe = ProbeConfig(omega_p=1.0, A_V=0.0, A_omega=1e-3, V_star=1.0, omega0=w0, dt=1e-4,
                        settle_periods=0, measure_periods=max(1, int(args.seconds)))
    results = {}
    for name in sorted(_backend.KERNELS):
        rate, rec = bench(name, cfg, probe, args.repeats if name == "compiled" else 1)
        results[name] = (rate, rec)
        print(f"{name:>9}: {rate:14,.0f} steps/s")
    if "compiled" in results:
        speedup = results["compiled"][0] / results["python"][0]
        a, b = results["compiled"][1].as_array(), results["python"][1].as_array()
        print(f"  speedup: {speedup:.1f}x   max |compiled - python| = {np.max(np.abs(a - b)):.3g}")
    else:
        print("compiled kernel not built; only the Python fallback is available")


if __name__ == "__main__":
    main()
