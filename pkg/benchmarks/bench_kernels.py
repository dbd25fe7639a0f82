"""Run the kernel backend comparison: python benchmarks/bench_kernels.py"""

from evlink.bench import run_benchmark

if __name__ == "__main__":
    run_benchmark(repeats=7)
