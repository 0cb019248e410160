"""The order-1/2 threshold in the line model.

The quadratic form integral over h <= |x| <= 1 of xi(x)^2 |x|^{-2r} dx
converges as the cutoff h shrinks exactly when r < 1/2 (for profiles not
vanishing at the origin).  At r = 1/2 it grows like 2 log(1/h); above,
like h^{1-2r}.  A profile vanishing to high order at 0 restores
convergence above the threshold.

Run:  python demos/04_threshold_experiment.py
"""

import math

from nilmix.fracsolve import schrodinger_threshold

print("constant profile, order sweep at cutoff h = 1e-6:")
for r in (0.1, 0.25, 0.4, 0.49, 0.5, 0.6, 0.75):
    rep = schrodinger_threshold(lambda x: 1.0, r, 1e-6)
    print(f"   r = {r:<5} I = {rep.value:14.4f}   verdict: {rep.verdict}")

print("\nlog-normalized growth at r = 1/2:")
for h in (1e-2, 1e-4, 1e-6, 1e-8):
    rep = schrodinger_threshold(lambda x: 1.0, 0.5, h)
    print(f"   h = {h:8.0e}: I / log(1/h) = {rep.value / math.log(1 / h):.8f}")

print("\nquadratically vanishing profile pushes the threshold out:")
for r in (0.75, 1.5, 2.4, 2.5):
    rep = schrodinger_threshold(lambda x: x * x, r, 1e-5)
    print(f"   r = {r:<5} verdict: {rep.verdict}   ({rep.details})")
