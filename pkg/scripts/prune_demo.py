"""Run the pruning loop on the built-in corpus and extract first-return horseshoes."""
import time

from semihorse.prune import build_instance, corpus, first_return_horseshoe, prune

if __name__ == "__main__":
    for name, (lam, pi, N) in sorted(corpus().items()):
        t0 = time.perf_counter()
        inst = build_instance(lam, pi, N)
        B, trace = prune(inst)
        fr = first_return_horseshoe(B)
        print(f"{name:14s} tau={inst.tau:3d} cuts={trace.cuts!s:8s} budget={trace.total_budget:3d} "
              f"L={fr.L} period={fr.period:4d} free={fr.certificate.free} "
              f"({time.perf_counter() - t0:.2f}s)")
