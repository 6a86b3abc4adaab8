"""
Label codecs
============

Multi-ACCDOA stores up to three same-class tracks per frame as activity
scaled unit vectors. Visual embeddings turn up to six person boxes into
pairs of 37-bin Gaussian vectors.
"""

import numpy as np

from avseld import BoundingBox, Doa, SeldEvent, decode_multi_accdoa, encode_multi_accdoa, encode_visual_boxes

events = [
    SeldEvent(0, 2, 0, Doa(40, 10)),
    SeldEvent(0, 2, 1, Doa(-120, -30)),
    SeldEvent(1, 7, 0, Doa(0, 90)),
]
target = encode_multi_accdoa(events, n_frames=3)
print("ACCDOA target", target.shape)
for e in decode_multi_accdoa(target):
    print("  decoded", e)

# a centred box peaks at bin 18 on both axes
emb = encode_visual_boxes([BoundingBox(0.5, 0.5, 0.1, 0.2)])
print("visual embedding", emb.shape, "peaks", emb[0, 0].argmax(), emb[1, 0].argmax(), emb[0, 0].max())

# more than six boxes keep the six largest
boxes = [BoundingBox(0.1 * i + 0.05, 0.5, 0.01 * (i + 1), 0.1) for i in range(8)]
emb = encode_visual_boxes(boxes)
print("kept slots", int((emb[0].max(axis=1) > 0).sum()))
