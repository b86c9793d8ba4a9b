"""Dataset ingestion, feature assembly, inference, evaluation and the
synthetic benchmark."""
from .dataset import (DatasetManifest, ImageEntry, import_voc, load_dataset, load_labelmap, save_labelmap,
                      write_manifest)
from .experiment import run_experiment, write_report
from .features import FeatureConfig, candidate_feature
from .inference import candidate_targets, infer_labeling
from .metrics import AACResult, aac
from .synth import synth_border_benchmark

__all__ = [
    "AACResult", "DatasetManifest", "FeatureConfig", "ImageEntry", "aac", "candidate_feature",
    "candidate_targets", "import_voc", "infer_labeling", "load_dataset", "load_labelmap", "run_experiment",
    "save_labelmap", "synth_border_benchmark", "write_manifest", "write_report",
]
