"""Region mixup, mixup and CutMix augmentation with a small numpy CNN trainer."""
from .augment import (
    MaskGrid,
    MixRecipe,
    build_grid_masks,
    cutmix_batch,
    region_mixup_batch,
    sample_recipe,
    standard_augment,
    vanilla_mixup_batch,
)
from .core import (
    BetaParams,
    ConfigError,
    DivisibilityError,
    NumericError,
    ParameterError,
    RngState,
    ShapeError,
    lerp,
    sample_beta,
    sample_permutation,
)
from .data import Dataset, gen_synthetic, load_cifar10_binary, load_dataset, one_hot
from .robustness import AttackConfig, evaluate_under_attack, fgsm_attack
from .train import (
    MetricsRow,
    ModelState,
    TrainConfig,
    evaluate_accuracy,
    train_iteration,
    train_run,
)

__version__ = "0.1.0"
