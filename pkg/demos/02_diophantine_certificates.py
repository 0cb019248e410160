"""Empirical Diophantine constants over lattice balls.

The expanding direction of the cat map has slope 1/phi: the golden ratio
is as badly approximable as it gets, so the empirical constant stabilizes
immediately.  A rational direction resonates and fails.  The structural
subspaces of an ergodic integer matrix (top/bottom modulus classes, the
expanding/contracting spaces, and each modulus class inside its own
rational block) all certify positive.

Run:  python demos/02_diophantine_certificates.py
"""

import math

from nilmix.catalog import CAT, CUBIC
from nilmix.dioph import diophantine_certificate, certify_structural_subspaces

PHI_INV = (math.sqrt(5) - 1) / 2

print("golden direction (1, 1/phi), growing ball radii:")
for radius in (10, 100, 1000, 10000):
    cert = diophantine_certificate([(1.0, PHI_INV)], 2, radius)
    print(f"   R = {radius:>6}: C_emp = {cert.c_emp:.12f} at m = {cert.argmin} "
          f"({cert.points_scanned} points scanned)")

print("\nrational direction (1, 1): exact resonance")
cert = diophantine_certificate([(1, 1)], 2, 50)
print(f"   verdict: {'pass' if cert.passed else 'fail'}, "
      f"C_emp = {cert.c_emp} at m = {cert.argmin}")

for label, m in (("cat map", CAT), ("cubic companion", CUBIC)):
    print(f"\nstructural subspace sweep, {label}, R = 1000:")
    for name, c in certify_structural_subspaces(m, 1000).items():
        print(f"   {name:<22} C_emp = {c.c_emp:.8f}  at {c.argmin}  "
              f"{'pass' if c.passed else 'FAIL'}")
