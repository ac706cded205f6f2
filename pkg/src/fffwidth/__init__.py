"""Transfer-based multifidelity learning for FFF printed line width.

Train a weighted epsilon-SVR on cheap analytical source data, fine-tune it
with TrAdaBoost.R2 on scarce target data, and benchmark direct vs transfer
learning including the experimental-cost reduction metrics.
"""

from .data import (
    Dataset,
    Sample,
    Scaler,
    concat,
    fit_scaler,
    load_csv,
    random_split,
    rmse,
    save_csv,
    subgrid_select,
)
from .sourcegen import (
    SourceModelConfig,
    SyntheticTargetConfig,
    default_synthetic_config,
    generate_source_grid,
    generate_source_pool,
    generate_synthetic_target,
    source_width,
    synthetic_truth,
)
from .svr import (
    SvrModel,
    SvrParams,
    default_param_grid,
    dual_objective,
    fit_weighted_svr,
    grid_search_cv,
    predict,
    rbf_kernel,
)
from .transfer import (
    Loss,
    TransferConfig,
    TransferEnsemble,
    adjusted_errors,
    boost_step,
    fit_tradaboost_r2,
    weighted_median_predict,
)
from .protocol import (
    Baseline,
    BenchmarkReport,
    DirectLearningCurve,
    SearchConfig,
    TransferSweepResult,
    direct_learning_curve,
    find_n_direct,
    select_n_t,
    transfer_sweep,
)

__version__ = "0.1.0"
