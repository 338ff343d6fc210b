"""Wrapping an ensemble's predictions into a credal set.

Walks through the core objects: per-class probability intervals from
ensemble min/max, the validity condition, the intersection probability,
and the round trip through the (p*, delta, beta) triple a credal
student predicts.

Run: python3 demos/01_credal_wrapping.py
"""

import numpy as np

from credalkit import (
    CredalPrediction,
    IntervalSystem,
    check_validity,
    intersection_probability,
    predict_class,
    reconstruct_intervals,
    wrap_ensemble,
)

print("=== Three ensemble members, three classes ===")
members = np.array([
    [0.50, 0.30, 0.20],
    [0.40, 0.40, 0.20],
    [0.60, 0.20, 0.20],
])
print("member predictions:\n", members)

system = wrap_ensemble(members)
print("\nper-class intervals (elementwise min / max over members):")
for k in range(system.class_count):
    print(f"  class {k}: [{system.lower[k]:.2f}, {system.upper[k]:.2f}]"
          f"  width {system.width[k]:.2f}")

ok, _ = check_validity(system)
print(f"\nvalid credal set (sum lower <= 1 <= sum upper): {ok}")
print(f"  sum(lower) = {system.lower.sum():.2f}, sum(upper) = {system.upper.sum():.2f}")

p_star, beta = intersection_probability(system)
print(f"\nintersection probability p* = {np.round(p_star, 4)}  (beta = {beta:.4f})")
print(f"predicted class: {predict_class(p_star)}")

print("\n=== Round trip through the student's output triple ===")
pred = CredalPrediction(p_star=p_star, delta=system.width, beta=beta)
rebuilt = reconstruct_intervals(pred)
print("reconstructed lower:", np.round(rebuilt.lower, 12))
print("reconstructed upper:", np.round(rebuilt.upper, 12))
print("matches the wrapped intervals:",
      bool(np.allclose(rebuilt.lower, system.lower) and np.allclose(rebuilt.upper, system.upper)))

print("\n=== Clipping keeps reconstructed bounds inside [0, 1] ===")
extreme = CredalPrediction(p_star=(0.1, 0.9), delta=(0.5, 0.0), beta=1.0)
clipped = reconstruct_intervals(extreme)
print("p* - beta*delta would be -0.4 for class 0; after clipping:")
print(f"  lower = {clipped.lower}, upper = {clipped.upper}")
print("still a valid credal set:", check_validity(clipped)[0])

print("\n=== An invalid interval system is reported, not silently used ===")
bad = IntervalSystem((0.6, 0.6), (0.7, 0.7))
ok, diagnostics = check_validity(bad)
print(f"valid: {ok}; diagnostics: {diagnostics}")
