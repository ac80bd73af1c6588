"""Printed generator formulas against a finite-difference oracle.

The oracle differentiates T_t f numerically at t = 0.  A printed formula
that is only off by a sign has a small gap after flipping; otherwise the
mismatch involves more than the sign.
"""
from monolev import errata as er

print(f"{'formula':32s} {'printed':>10s} {'flipped':>10s} {'implemented':>12s}")
for r in er.generator_report():
    print(f"{r['formula']:32s} {r['printed_gap']:10.3g} {r['printed_gap_after_sign_flip']:10.3g} "
          f"{r['implemented_gap']:12.2g}")
print("drift transform z - a t, gap to flow:", er.drift_printed_gap(0.7, 0.3 + 1j, 1.0))
print("printed Poisson equation residual:   ", er.poisson_printed_residual(1.0, 0.5 + 1j, 0.5))
print("corrected Poisson equation residual: ", er.poisson_corrected_residual(1.0, 0.5 + 1j, 0.5))
