"""
Checking labels against the audio
=================================

The active intensity vector of an FOA clip points at a single source, so
every single-source stretch of a scene can be checked against its labels.
"""

import numpy as np

from avseld import Doa, MonoClip, SeldEvent, encode_foa_anechoic, estimate_doa, validate_scene
from avseld.augment import augmentation_set, transform_foa, transform_metadata

rng = np.random.default_rng(2)
d = Doa(-65, 25)
clip = encode_foa_anechoic(MonoClip(rng.standard_normal(24000), 24000), d)
print("estimate", estimate_doa(clip), "label", d)

labels = [SeldEvent(f, 5, 0, d) for f in range(10)]
for t in augmentation_set():
    report = validate_scene(transform_foa(t, clip), transform_metadata(t, labels))
    print(f"{str(t):<16} passed {report.passed}  error {report.runs[0].error:.2e} deg")
