"""DreamerV2-style world-model RL: tensors, distributions, envs, training."""

from ._core import (  # noqa: F401
    DimensionError,
    DomainError,
    Env,
    LoadError,
    NotReadyError,
    NumericError,
    ParseError,
    Tensor,
    UsageError,
    __version__,
    add,
    add_scalar,
    aggregate_scores,
    backward,
    bernoulli_log_prob,
    config_keys,
    diag_gaussian_kl,
    divide,
    elu,
    entropy_categorical,
    evaluate_checkpoint,
    exp,
    gaussian_log_prob_unit,
    kl_balanced,
    kl_categorical,
    lambda_returns,
    load_config,
    log,
    log_prob_onehot,
    log_softmax,
    make_env,
    matmul,
    mean_all,
    mul,
    neg,
    normalize_score,
    read_metrics,
    sample_straight_through,
    scale,
    sigmoid,
    softmax,
    softplus,
    sqrt,
    square,
    sub,
    sum_all,
    sum_rows,
    tanh,
    train,
)
