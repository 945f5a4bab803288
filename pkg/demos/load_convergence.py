"""Watch measured loads converge to their asymptotes as the file grows.

Removal load tends to 1/(r-1) from above (padding shrinks relative to
packet size); addition load concentrates around 1. Also checks the
closed-form bound on the expected maximum of binomial packet sizes
against a sampling estimate.
"""

import numpy as np

from coded_rebalance import (
    RngSpec,
    addition_load,
    apply_addition_rebalance,
    apply_removal_rebalance,
    binomial_max_bound,
    build_database,
    removal_load,
)

print("=" * 72)
print("REMOVAL: 6 nodes, replication 3, remove node 6 (asymptote 0.5)")
print("=" * 72)
print(f"{'bits':>9} {'load':>8} {'bound':>8}")
for exponent in range(3, 7):
    F = 10**exponent
    loads = []
    for trial in range(5):
        spec = RngSpec(31, trial=trial)
        db = build_database(6, 3, F, spec)
        _, cws = apply_removal_rebalance(db, 6, spec)
        loads.append(removal_load(cws, 6, 3, F).measured_load)
    bound = removal_load(cws, 6, 3, F).finite_size_upper_bound
    print(f"{F:>9} {np.mean(loads):>8.4f} {bound:>8.4f}")

print()
print("=" * 72)
print("ADDITION: 4 nodes, replication 2, newcomer joins (asymptote 1.0)")
print("=" * 72)
print(f"{'bits':>9} {'load':>8}")
for exponent in range(3, 7):
    F = 10**exponent
    loads = []
    for trial in range(5):
        spec = RngSpec(37, trial=trial)
        db = build_database(4, 2, F, spec)
        _, cws = apply_addition_rebalance(db, spec)
        loads.append(addition_load(cws, 4, 2, F).measured_load)
    print(f"{F:>9} {np.mean(loads):>8.4f}")

print()
print("=" * 72)
print("MAX OF BINOMIAL PACKET SIZES: bound vs sampling estimate")
print("=" * 72)
gen = np.random.default_rng(41)
print(f"{'n':>7} {'p':>6} {'vars':>5} {'estimate':>10} {'bound':>10}")
for n, p, r_vars in [(10**4, 0.5, 2), (10**4, 0.3, 3), (10**5, 0.01, 5)]:
    estimate = gen.binomial(n, p, size=(10**4, r_vars)).max(axis=1).mean()
    print(f"{n:>7} {p:>6} {r_vars:>5} {estimate:>10.1f} "
          f"{binomial_max_bound(n, p, r_vars):>10.1f}")
