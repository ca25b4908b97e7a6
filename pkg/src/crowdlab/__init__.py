"""Social-learning analytics for crowd prediction experiments.

The library measures how much individuals move toward the crowd after
seeing its predictions (the social weight of each revision), how filtering
by that weight changes the aggregate's accuracy (threshold sweep with
bootstrap intervals), and whether the shape of the crowd shown — one clear
peak or several — moderates the effect (dip-test gating).  A seeded
simulator generates synthetic crowds with known weights for end-to-end
validation, and a CLI wires everything into reproducible report runs.
"""

__version__ = "0.1.0"

from .alpha_sweep import (
    AlphaSweepPoint,
    FilteredSubset,
    ResampleMode,
    RoundImprovement,
    bootstrap_improvement,
    default_alpha_grid,
    filter_by_alpha,
    mean_improvement,
    round_improvement,
    sweep_alpha,
)
from .dataset import (
    Dataset,
    PredictionRecord,
    Round,
    geometric_mean,
    parse_dataset,
    reconstruct_shown_crowd,
    serialize_records,
    serialize_truths,
    shown_crowd_map,
    write_dataset,
)
from .dip import (
    BACKEND as DIP_BACKEND,
    DipNullCache,
    DipResult,
    UnimodalityFlag,
    dip_pvalue,
    dip_statistic,
    flag_unimodality,
)
from .simulate import (
    CrowdMode,
    ScenarioSpec,
    SwDistribution,
    apply_social_update,
    generate_dataset,
    merge_generated,
)
from .social_weight import (
    Direction,
    ErrorMode,
    SocialWeightResult,
    classify_records,
    compute_sw,
    sw_sign_summary,
)
from .unimodality import (
    ProportionTestResult,
    UserSubsetImprovement,
    normal_cdf,
    proportion_test,
    sorted_improvement_curve,
    user_subset_improvements,
)
