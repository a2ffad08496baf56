"""Primal integrals: one worked trajectory, then two solvers on the same instance.

A solver that finds good solutions early gets a smaller integral even when
both end at the best known value.

    python demos/02_primal_integral.py
"""

from cvrpisa import Trajectory, primal_gap, primal_integral

bks, limit = 100.0, 10.0

# incumbent 110 from the start, the best known 100 found at t = 5
worked = Trajectory((0.0, 5.0), (110.0, 100.0), limit, bks)
print(f"gap of 110 against 100: {primal_gap(110, bks):.5f}")
print(f"worked example PI:      {primal_integral(worked):.5f}   (= 10/110 held for half the run)")

fast = Trajectory((0.5, 1.0, 2.0), (140.0, 104.0, 100.0), limit, bks)
slow = Trajectory((3.0, 6.0, 9.0), (105.0, 102.0, 100.0), limit, bks)
print(f"\nfast starter PI: {primal_integral(fast):.4f}")
print(f"slow starter PI: {primal_integral(slow):.4f}   (gap counts as 1 until a first incumbent exists)")
print(f"never finds a solution: {primal_integral(Trajectory((), (), limit, bks)):.1f}")
