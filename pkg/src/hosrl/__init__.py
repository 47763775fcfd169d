"""End-to-end semantic role labeling with biaffine pair scoring and high-order refinement."""

import os

# single-threaded BLAS keeps runs bit-reproducible and is faster at these sizes
for _var in ("OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS", "OMP_NUM_THREADS"):
    os.environ.setdefault(_var, "1")

from .config import ModelConfig, TrainConfig  # noqa: E402
from .corpus import Sentence, Token, Triplet, Vocabulary, build_vocab, parse_conll09, parse_upb  # noqa: E402
from .model import SRLModel  # noqa: E402

__all__ = [
    "ModelConfig", "TrainConfig", "Sentence", "Token", "Triplet", "Vocabulary",
    "build_vocab", "parse_conll09", "parse_upb", "SRLModel",
]
__version__ = "0.1.0"
