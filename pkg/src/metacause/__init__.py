"""Meta-learned bivariate causal direction inference.

A single generative mechanism model is fit jointly across many labeled
cause-effect datasets by minimizing a kernel two-sample discrepancy between
real and generated joint samples; direction on a new pair is read off by
comparing the discrepancy achieved in each orientation. The package also
ships synthetic pair generators, analytic baselines, and a benchmark
harness with a CLI (`metacause`).
"""

from .baselines import (
    BASELINE_METHODS,
    BaselineConfig,
    ablation_variant,
    baseline_score,
    cds_score,
    cgnn_score,
    igci_score,
    reci_score,
)
from .bench import (
    BenchmarkReport,
    TuebingenPair,
    auprc,
    compute_aggregates,
    kfold_cv,
    load_report,
    load_tuebingen,
    parse_config_file,
    pr_curve,
    resolve_config,
    run_benchmark,
    save_report,
    weighted_accuracy,
)
from .datagen import (
    CEDatabase,
    PairDataset,
    PairSpec,
    gen_ce_gauss,
    gen_ce_multi,
    gen_ce_net,
    generate_database,
    generate_pair,
    load_database,
    read_numeric_table,
    save_database,
    standardize,
    swap_pair,
)
from .embeddings import (
    CMEOperator,
    DatasetFeature,
    DeepSetsEncoder,
    cme_embed,
    cme_feature_matrix,
    deepsets_embed,
    fit_cmeo,
    make_deepsets_encoder,
)
from .errors import (
    ConfigError,
    DataFormatError,
    DegenerateDataError,
    MetacauseError,
    MetricUndefinedError,
    NumericError,
    PreconditionError,
    ShapeMismatchError,
    TapeReusedError,
)
from .generator import (
    GeneratorModel,
    generate,
    load_model,
    make_generator_model,
    save_model,
)
from .kernels import (
    DEFAULT_BANDWIDTHS,
    BandwidthSet,
    RFFMap,
    gaussian_kernel,
    make_rff_map,
    mmd2_linear,
    mmd2_unbiased,
    rff_features,
    rff_maps_for_bandwidths,
)
from .meta_trainer import (
    DirectionScore,
    TrainConfig,
    ensemble_score,
    evaluate_accuracy,
    score_direction,
    select_decoder_width,
    train,
    train_ensemble,
)
from .nn_core import (
    AdamState,
    MLPConfig,
    ParamTensor,
    adam_init,
    adam_step,
    backprop,
    finite_diff_check,
    load_checkpoint,
    mlp_apply,
    mlp_forward,
    mlp_init,
    save_checkpoint,
)
from .seeding import derive_seed, rng_from

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
