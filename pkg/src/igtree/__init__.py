"""Information-gain tree learning and modular word-pronunciation experiments."""

__version__ = "0.1.0"

from .align import AlignmentError, align
from .evaluation import (
    ExperimentResult,
    FoldPlan,
    MetricsReport,
    TTestResult,
    joint_ps_error,
    make_folds,
    run_cv,
    run_experiment,
    t_test_one_tailed,
    word_flawless,
)
from .lexicon import (
    AlignedEntry,
    LexiconFormatError,
    StreamSpec,
    Task,
    WindowSpec,
    parse_lexicon,
    window_instances,
    write_lexicon,
)
from .pipeline import (
    PRESETS,
    ModuleSpec,
    Regime,
    SystemSpec,
    TrainedSystem,
    dump_system,
    load_system,
    train_system,
)
from .toylang import generate_toy_lexicon
from .tree import (
    FeatureOrder,
    IgTree,
    InstanceBase,
    LabeledInstance,
    build_tree,
    compute_feature_order,
    dumps_tree,
    entropy,
    feature_entropy,
    information_gain,
    loads_tree,
    tree_stats,
)

__all__ = [
    "AlignedEntry",
    "AlignmentError",
    "ExperimentResult",
    "FeatureOrder",
    "FoldPlan",
    "IgTree",
    "InstanceBase",
    "LabeledInstance",
    "LexiconFormatError",
    "MetricsReport",
    "ModuleSpec",
    "PRESETS",
    "Regime",
    "StreamSpec",
    "SystemSpec",
    "TTestResult",
    "Task",
    "TrainedSystem",
    "WindowSpec",
    "align",
    "build_tree",
    "compute_feature_order",
    "dump_system",
    "dumps_tree",
    "entropy",
    "feature_entropy",
    "generate_toy_lexicon",
    "information_gain",
    "joint_ps_error",
    "load_system",
    "loads_tree",
    "make_folds",
    "parse_lexicon",
    "run_cv",
    "run_experiment",
    "t_test_one_tailed",
    "train_system",
    "tree_stats",
    "window_instances",
    "word_flawless",
    "write_lexicon",
]
