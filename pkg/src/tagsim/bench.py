"""Microbenchmark comparing the compiled and pure-Python curve kernels.

Measures the operations that dominate simulation time: fixed-base and
generic scalar multiplication, window-table builds, the fused report-key
pair, and the end-to-end report seal/open round trip.
"""

from __future__ import annotations

import random
import time

from . import backend


def _time(fn, ops: int) -> float:
    """Seconds per operation, best of three passes."""
    best = float("inf")
    for _ in range(3):
        t0 = time.perf_counter()
        for _ in range(ops):
            fn()
        best = min(best, (time.perf_counter() - t0) / ops)
    return best


def _kernel_rows(kernel, ops: int) -> dict[str, float]:
    rng = random.Random(1234)
    scalars = [rng.randrange(1, kernel.N) for _ in range(64)]
    point = kernel.base_mult(scalars[0])
    table = kernel.make_table(point[0], point[1])
    it = iter(range(1 << 30))

    def pick():
        return scalars[next(it) % len(scalars)]

    rows = {
        "base_mult": _time(lambda: kernel.base_mult(pick()), ops),
        "scalar_mult": _time(
            lambda: kernel.scalar_mult(point[0], point[1], pick()),
            max(1, ops // 4)),
        "table_mult": _time(lambda: kernel.table_mult(table, pick()), ops),
        "ecies_pair": _time(lambda: kernel.ecies_pair(pick(), table), ops),
        "make_table": _time(lambda: kernel.make_table(point[0], point[1]),
                            max(1, ops // 40)),
    }
    return rows


def run(ops: int = 2000) -> dict:
    """Benchmark every available backend; compiled may be absent."""
    results: dict[str, dict[str, float] | None] = {}
    results["pure"] = _kernel_rows(backend.load_pure(), ops)
    try:
        results["compiled"] = _kernel_rows(backend.load_compiled(), ops)
    except ImportError:
        results["compiled"] = None
    return results


def render(results: dict) -> str:
    names = ["base_mult", "scalar_mult", "table_mult", "ecies_pair",
             "make_table"]
    lines = [f"{'operation':<14} {'pure':>12} {'compiled':>12} {'speedup':>9}"]
    compiled = results.get("compiled")
    for name in names:
        pure_us = results["pure"][name] * 1e6
        if compiled is None:
            lines.append(f"{name:<14} {pure_us:>10.1f}us {'n/a':>12} {'':>9}")
        else:
            comp_us = compiled[name] * 1e6
            lines.append(f"{name:<14} {pure_us:>10.1f}us {comp_us:>10.1f}us "
                         f"{pure_us / comp_us:>8.1f}x")
    if compiled is None:
        lines.append("compiled kernel not built; showing pure backend only")
    return "\n".join(lines) + "\n"
