"""Spatial audio-visual SELD data tooling: augmentation, synthesis, labels, metrics."""

from avseld.augment import (
    AcsTransform,
    augmentation_set,
    transform_doa,
    transform_foa,
    transform_frame,
    transform_metadata,
)
from avseld.core import (
    Doa,
    FrameGeometry,
    Vec3,
    angular_distance,
    doa_to_unit_vec,
    project_equirect,
    unit_vec_to_doa,
)
from avseld.doaval import estimate_doa, validate_scene
from avseld.foa import (
    FoaClip,
    MonoClip,
    Rir,
    convolve_rir,
    encode_foa_anechoic,
    mix_events,
    peak_normalize,
)
from avseld.labels import (
    BoundingBox,
    SeldEvent,
    decode_multi_accdoa,
    encode_multi_accdoa,
    encode_visual_boxes,
    read_metadata,
    write_metadata,
)
from avseld.metrics import SeldScores, assign_min_cost, evaluate

__version__ = "0.1.0"
