"""Season-varying remote sensing image translation.

Cycle-consistent translation between summer and winter imagery with
style-recalibrated generators and style discriminators, evaluation metrics
(IS/FID/KID), PCAKM change detection, and a synthetic season-pair
benchmark generator.
"""

__version__ = "0.1.0"

from .changedetect import PcakmConfig, detect_with_translation, difference_image, pcakm
from .data import DomainDataset, SyntheticSceneSpec, generate_synthetic, load_folder, write_benchmark
from .discriminator import DiscriminatorConfig, StyleDiscriminator
from .generator import GeneratorConfig, TranslationGenerator, count_parameters
from .metrics import ConfusionSummary, fid, get_extractor, inception_score, kid, score_change_map
from .srm import SRMConvBlock, SRMLayer, recalibrate, style_integrate, style_pool
from .trainer import HistoryBuffer, TrainConfig, TranslationModel, build_model, fit, lr_schedule

__all__ = [
    "PcakmConfig", "detect_with_translation", "difference_image", "pcakm",
    "DomainDataset", "SyntheticSceneSpec", "generate_synthetic", "load_folder", "write_benchmark",
    "DiscriminatorConfig", "StyleDiscriminator",
    "GeneratorConfig", "TranslationGenerator", "count_parameters",
    "ConfusionSummary", "fid", "get_extractor", "inception_score", "kid", "score_change_map",
    "SRMConvBlock", "SRMLayer", "recalibrate", "style_integrate", "style_pool",
    "HistoryBuffer", "TrainConfig", "TranslationModel", "build_model", "fit", "lr_schedule",
]
