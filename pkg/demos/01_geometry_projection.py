"""
Directions and equirectangular pixels
=====================================

Directions of arrival are (azimuth, elevation) pairs in degrees. Azimuth
wraps into [-180, 180) and grows counterclockwise seen from above.
"""

import numpy as np

from avseld import Doa, FrameGeometry, angular_distance, doa_to_unit_vec, project_equirect, unit_vec_to_doa

# azimuth wraps, elevation is validated
print(Doa(190, 10), Doa(-180, 0) == Doa(180, 0))

# unit vectors: x to the front, y to the left, z up
v = doa_to_unit_vec(Doa(30, 10))
print("unit vector", np.round(v, 6), "back to", unit_vec_to_doa(v))

print("great-circle distance", angular_distance(Doa(30, 0), Doa(50, 0)))

# pixel columns run from +180 on the left edge to -180 on the right
g = FrameGeometry(1920, 960)
for d in [Doa(0, 0), Doa(-90, 0), Doa(90, 0), Doa(0, 90), Doa(0, -90), Doa(179.9, 0)]:
    print(f"{str(d):>24} -> (col, row) {project_equirect(d, g)}")
