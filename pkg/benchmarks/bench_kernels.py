#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-NumPy fallback.

Runs each hot kernel at the sizes the default simulation actually uses and
prints best-of-N timings plus the speedup, followed by an end-to-end
ensemble timing under both backends.

Usage:  python benchmarks/bench_kernels.py [--repeat N] [--skip-e2e]
"""

from __future__ import annotations

import argparse
import subprocess
import sys
import timeit

import numpy as np

from lightgrating import _kernels_py

try:
    from lightgrating import _kernels as _compiled
except ImportError:
    _compiled = None


def bench(label: str, make_args, repeat: int) -> None:
    """Time one kernel on both implementations with identical inputs."""
    impls = [("python", _kernels_py)]
    if _compiled is not None:
        impls.append(("compiled", _compiled))
    times = {}
    for name, impl in impls:
        args = make_args()
        fn = getattr(impl, label)
        calls = max(1, int(0.02 / max(timeit.timeit(lambda: fn(*args), number=1), 1e-7)))
        best = min(timeit.repeat(lambda: fn(*args), number=calls, repeat=repeat))
        times[name] = best / calls
    line = f"{label:28s}"
    for name in ("python", "compiled"):
        if name in times:
            line += f"  {name}: {times[name] * 1e6:10.1f} us"
    if "compiled" in times:
        line += f"  speedup: {times['python'] / times['compiled']:6.2f}x"
    print(line)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=5, help="timing repeats (default 5)")
    parser.add_argument(
        "--skip-e2e", action="store_true", help="skip the end-to-end ensemble timing"
    )
    args = parser.parse_args()

    if _compiled is None:
        print("compiled extension not available; timing the fallback only\n")

    rng = np.random.default_rng(7)
    # grating-plane grid at the default resolution: 28 periods x 64 samples
    x_grating = (np.arange(1792) + 0.5 - 896) * (514.5e-9 / 2 / 64)
    # propagated fields: 9 absorption channels on the padded FFT grid
    fields = rng.normal(size=(9, 8192)) + 1j * rng.normal(size=(9, 8192))
    accumulator = np.zeros(8192)
    x_out = np.linspace(-150e-6, 150e-6, 601)

    print(f"kernel timings (best of {args.repeat}):")
    bench(
        "sample_channels",
        lambda: (1.9506, 0.1545, 8, 2 * np.pi / 514.5e-9, x_grating),
        args.repeat,
    )
    bench(
        "accumulate_weighted_abs2",
        lambda: (fields, 0.125, accumulator.copy()),
        args.repeat,
    )
    bench(
        "direct_fresnel_sum",
        lambda: (
            fields[0, : x_grating.size],
            x_grating,
            np.full(x_grating.size, 514.5e-9 / 128),
            x_out,
            np.pi / (4.62e-12 * 1.2),
        ),
        args.repeat,
    )

    if args.skip_e2e or _compiled is None:
        return 0

    print("\nend-to-end wave-mode ensemble (default configuration):", flush=True)
    script = (
        "import time; from lightgrating.config import parse_config; "
        "from lightgrating.beamline import ensemble_pattern; "
        "from lightgrating import backend; "
        "cfg = parse_config(''); t = time.perf_counter(); "
        "ensemble_pattern(cfg); "
        "print(f'  {backend.backend_name():8s} {time.perf_counter() - t:.2f} s')"
    )
    for env_value in ("0", "1"):
        subprocess.run(
            [sys.executable, "-c", script],
            env={"LIGHTGRATING_PURE_PYTHON": env_value, "PATH": "/usr/bin:/bin:/usr/local/bin"},
            check=True,
        )
    return 0


if __name__ == "__main__":
    sys.exit(main())
