"""
Eight-fold audio-visual rotation augmentation
=============================================

Each transform rotates azimuth by a multiple of -90 degrees and optionally
flips elevation. The same transform is applied to the FOA channels, the
labels and the 360 video frame, so all three stay consistent.
"""

import numpy as np

from avseld import Doa, FrameGeometry, MonoClip, augmentation_set, encode_foa_anechoic, project_equirect
from avseld.augment import transform_doa, transform_foa, transform_frame

rng = np.random.default_rng(0)
mono = MonoClip(rng.standard_normal(2400), 24000)
d = Doa(30, 20)
clip = encode_foa_anechoic(mono, d)

g = FrameGeometry(360, 180)
frame = rng.integers(0, 256, size=(*g.shape, 3), dtype=np.uint8)

for t in augmentation_set():
    moved = transform_doa(t, d)
    # rotating the channels equals encoding at the moved direction
    err = np.abs(transform_foa(t, clip).samples - encode_foa_anechoic(mono, moved).samples).max()
    # the moved frame shows the same pixel at the moved direction
    c0, r0 = project_equirect(d, g)
    c1, r1 = project_equirect(moved, g)
    same = np.array_equal(transform_frame(t, frame, g)[r1, c1], frame[r0, c0])
    print(f"{t.index}: {str(t):<16} {str(moved):<28} channel error {err:.1e}  pixel match {same}")
