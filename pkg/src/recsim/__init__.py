"""
Teacher-student simulation of feedback loops between a matrix-factorization
recommender and stochastic agents.
"""

from recsim.metrics import (
    gini,
    ground_truth_correlation,
    inter_realization_correlation,
    mean_popularity,
    pearson,
    popularity_difference_zscore,
)
from recsim.simulation import (
    ExperimentConfig,
    RealizationResult,
    build_teacher,
    run_experiment,
    run_realization,
    seed_initial_data,
)
from recsim.strategies import StrategyKind, recommend
from recsim.student import (
    StudentModel,
    TrainingDataset,
    TrainingHyperparams,
    TrainReport,
    brier,
    init_student,
    train,
)
from recsim.teacher import (
    BetaCondition,
    TeacherModel,
    expected_item_popularity,
    generate_teacher,
    sample_choice,
)

__version__ = "0.1.0"
