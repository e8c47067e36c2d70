"""Time the compiled kernel against the pure-Python engine on generated workloads.

    python3 benchmarks/bench_kernel.py --lambda 2.5 --slots 200 --repeat 3
"""

import argparse
import statistics
import time

from mrspeed import Policy, PowerFunction
from mrspeed import kernel
from mrspeed.kernel import KERNEL_POLICIES, simulate_costs
from mrspeed.workload import WorkloadSpec, generate


def _time(fn, repeat: int) -> float:
    samples = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - start)
    return statistics.median(samples)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--lambda", type=float, default=2.5, dest="lam")
    ap.add_argument("--slots", type=int, default=200)
    ap.add_argument("--servers", "-K", type=int, default=5)
    ap.add_argument("--alpha", type=float, default=2.5)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    workload = generate(WorkloadSpec(args.lam, args.slots, seed=args.seed))
    power = PowerFunction(args.alpha)
    print(f"{len(workload)} jobs, {workload.n_tasks} tasks, K={args.servers}, backend available: {kernel.BACKEND}")
    print(f"{'policy':<15} {'python s':>10} {'cython s':>10} {'speedup':>9} {'max rel diff':>13}")
    for name in sorted(KERNEL_POLICIES):
        policy = Policy(name)
        py = simulate_costs(workload, policy, args.servers, power, "python")
        t_py = _time(lambda: simulate_costs(workload, policy, args.servers, power, "python"), args.repeat)
        if kernel.BACKEND != "cython":
            print(f"{name:<15} {t_py:>10.3f} {'n/a':>10} {'':>9} {'':>13}")
            continue
        cy = simulate_costs(workload, policy, args.servers, power, "cython")
        t_cy = _time(lambda: simulate_costs(workload, policy, args.servers, power, "cython"), args.repeat)
        diff = max(abs(a - b) / max(1.0, abs(b)) for a, b in zip(cy, py))
        print(f"{name:<15} {t_py:>10.3f} {t_cy:>10.4f} {t_py / t_cy:>8.0f}x {diff:>13.1e}")


if __name__ == "__main__":
    main()
