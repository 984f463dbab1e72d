"""The four adversarial variants: CGAN, FuzzyGAN, PhysiCGAN and PhyzzyGAN."""
from .model import (
    FUZZY_VARIANTS,
    PHYSICS_VARIANTS,
    VARIANTS,
    Discriminator,
    Generator,
    Model,
    Physics,
    VariantConfig,
    bce_loss,
    check_variant,
    fuzzy_head,
    generator_loss,
    predict,
)
from .train import TrainingError, TrainReport, evaluate, predict_dataset, train

__all__ = [
    "FUZZY_VARIANTS", "PHYSICS_VARIANTS", "VARIANTS", "Discriminator", "Generator", "Model",
    "Physics", "TrainReport", "TrainingError", "VariantConfig", "bce_loss", "check_variant",
    "evaluate", "fuzzy_head", "generator_loss", "predict", "predict_dataset", "train",
]
