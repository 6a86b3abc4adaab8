"""
Location-aware SELD scores
==========================

Predictions are matched to references per 1 s segment and class. A match
only counts as a detection when it lies within 20 degrees.
"""

from avseld import Doa, SeldEvent, assign_min_cost, evaluate

ref = [SeldEvent(f, 3, 0, Doa(40, 10)) for f in range(20)]
print("perfect     ", evaluate(ref, ref))

close = [SeldEvent(f, 3, 0, Doa(50, 10)) for f in range(20)]
print("10 deg off  ", evaluate(ref, close))

far = [SeldEvent(f, 3, 0, Doa(80, 10)) for f in range(20)]
print("40 deg off  ", evaluate(ref, far))

wrong_class = [SeldEvent(f, 4, 0, Doa(40, 10)) for f in range(20)]
print("wrong class ", evaluate(ref, wrong_class))

# ties resolve to the lexicographically smallest pairing
print(assign_min_cost([[1, 1], [1, 1]]))
