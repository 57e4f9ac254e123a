"""gecforge: desk-scale grammatical error correction pipeline.

Rule-based and neural artificial-error generation, deterministic data
mixing, a from-scratch attention seq2seq trainable in both the correction
and generation directions, and a MaxMatch edit-lattice scorer reporting
F0.5.
"""

__version__ = "0.1.0"

from gecforge.corpus import (
    AnnotatedSentence,
    EditAnnotation,
    ParallelPair,
    Provenance,
    Sentence,
)

__all__ = [
    "AnnotatedSentence",
    "EditAnnotation",
    "ParallelPair",
    "Provenance",
    "Sentence",
    "__version__",
]
