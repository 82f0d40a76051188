"""Joint statistical and spatial sparse representation (J3S) for image and
image-set classification."""

from .classifier import PredictionReport, class_error, predict
from .coder import (
    J3SParams,
    JointCode,
    JointDictionary,
    assemble_dictionaries,
    j3s_loss,
    solve,
    solve_codes,
    update_alpha,
    update_G,
    update_gamma,
)
from .data import (
    Manifest,
    NoiseSpec,
    SplitSpec,
    add_gaussian_noise,
    few_shot_subsample,
    gallery_probe_split,
    load_feature_matrix,
    load_manifest,
    read_fmx1,
    write_fmx1,
)
from .gaussian import (
    FeatureMatrix,
    GaussianConfig,
    GaussianDescriptor,
    build_descriptor,
    embed_spd,
    gaussian_fit,
    hellinger_map,
    robust_covariance,
)
from .pca import PcaTransform, pca_apply, pca_fit
from .spd import EigPair, spd_logm, sym_eig, triu_vec
from .unitary import (
    PatchConfig,
    UnitaryDictionary,
    extract_patches,
    hard_threshold,
    learn_transform,
    learn_unitary,
    spatial_vector,
    transform_update,
)

__version__ = "0.1.0"
