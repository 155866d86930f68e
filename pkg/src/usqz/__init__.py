"""Contour chain-code compression and speckle-preserving regeneration of
polar ultrasound frames.

Compression segments a B-mode frame into tissue regions and transmits only
the boundary chain codes plus acquisition metadata; decompression rebuilds
the label map and re-synthesizes a speckle-realistic frame with a
physics-based point-spread-function simulator.
"""

from .backend import BACKEND
from .grid import (CartesianFrame, ContourSet, LabelMap, PolarFrame,
                   ProbeGeometry, cartesian_to_polar, polar_to_cartesian,
                   rasterize_contours)
from .codec import (ChainCode, CompressedHeader, compression_ratio,
                    decode_contour, encode_contour, read_file, write_file)
from .speckle import FeatureStack, NakagamiParams, feature_map, nakagami_fit
from .segmenter import ClassifierModel, classify, extract_contours, train_classifier
from .synth import (PsfSpec, TissueEchoParams, decompress, simulate_bmode)
from .metrics import (Pmf, inter_tissue_jsd, intra_tissue_jsd, js_divergence,
                      overlap_metrics)
from .phantom import PhantomSpec, generate_dataset, generate_phantom

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "CartesianFrame", "ChainCode", "ClassifierModel",
    "CompressedHeader", "ContourSet", "FeatureStack", "LabelMap",
    "NakagamiParams", "PhantomSpec", "Pmf", "PolarFrame", "ProbeGeometry",
    "PsfSpec", "TissueEchoParams", "cartesian_to_polar", "classify",
    "compression_ratio", "decode_contour", "decompress", "encode_contour",
    "extract_contours", "feature_map", "generate_dataset", "generate_phantom",
    "inter_tissue_jsd", "intra_tissue_jsd", "js_divergence", "nakagami_fit",
    "overlap_metrics", "polar_to_cartesian", "rasterize_contours",
    "read_file", "simulate_bmode", "train_classifier", "write_file",
]
