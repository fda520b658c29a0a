"""Interpretable texture classification for grayscale imagery.

The pipeline: superlevelset cubical persistent homology on image patches,
persistence-landscape embeddings, PCA to three components, a pairwise
linear SVM, and a geometric read-back of the separating plane as virtual
landscapes.
"""

from .cubical import (Barcode, CubicalComplex, PersistenceBar, betti_at,
                      brute_force_betti, build_superlevel_filtration,
                      compute_persistence, sublevel_bars, superlevel_barcode)
from .classify import (EvalResult, PcaModel, SvmModel, evaluate, fit_pca,
                       fit_svm, project)
from .errors import (BoundsError, DomainError, InsufficientClassError,
                     PatchTooSmallError, RankError, SingleClassError)
from .image_io import (AnnotationRecord, GrayImage, annotation_seed, crop,
                       load_image, read_manifest, rgb_to_gray, sample_patches,
                       write_pgm)
from .interpret import (ExtremeExample, VirtualPoint, extreme_examples,
                        lift_plane, virtual_landscape)
from .landscapes import (DEFAULT_GRID, LandscapeCurves, LandscapeEmbedding,
                         LandscapeGrid, PersistenceLandscape, average_embeddings,
                         compute_landscape, embed, sample_landscape,
                         vector_to_landscape)
from .pipeline import (EmbeddedAnnotation, EmbeddingCache, IngestResult,
                       PipelineConfig, SplitSpec, ingest, split)

__version__ = "0.1.0"

__all__ = [
    "AnnotationRecord", "Barcode", "BoundsError", "CubicalComplex",
    "DEFAULT_GRID", "DomainError", "EmbeddedAnnotation", "EmbeddingCache",
    "EvalResult", "ExtremeExample", "GrayImage", "IngestResult",
    "InsufficientClassError", "LandscapeCurves", "LandscapeEmbedding",
    "LandscapeGrid", "PatchTooSmallError", "PcaModel", "PersistenceBar",
    "PersistenceLandscape", "PipelineConfig", "RankError", "SingleClassError",
    "SplitSpec", "SvmModel", "VirtualPoint", "annotation_seed",
    "average_embeddings", "betti_at", "brute_force_betti",
    "build_superlevel_filtration", "compute_landscape", "compute_persistence",
    "crop", "embed", "evaluate", "extreme_examples", "fit_pca", "fit_svm",
    "ingest", "lift_plane", "load_image", "project", "read_manifest",
    "rgb_to_gray", "sample_landscape", "sample_patches", "split",
    "sublevel_bars", "superlevel_barcode", "vector_to_landscape",
    "virtual_landscape", "write_pgm",
]
