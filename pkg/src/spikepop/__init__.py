"""Information-maximising spike encoding with populations of LIF neurons."""

from ._backend import BACKEND
from .signal import (Dataset, DatasetFormatError, SpikeTrain, Stimulus, load_dataset,
                     mean_density, save_dataset, spike_density)
from .lif import (Calibration, LifParams, PopulationConfig, calibrate_threshold,
                  encode_population, lif_encode)
from .patterns import PairSet, best_shift, extract_pairs
from .infotheory import (MiEstimate, PidAtoms, extrapolate_mi, mi_mixed, mi_windowed,
                         pid_two)
from .builder import (BuilderConfig, TuneReport, add_neuron, build_population,
                      exhaustive_search, random_baseline, tune_first_neuron)
from .evaluation import (EvalConfig, EvalResult, FeatureVector, classify, evaluate_pipeline,
                         extract_features, split_dataset)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "Dataset", "DatasetFormatError", "SpikeTrain", "Stimulus", "load_dataset",
    "mean_density", "save_dataset", "spike_density",
    "Calibration", "LifParams", "PopulationConfig", "calibrate_threshold",
    "encode_population", "lif_encode",
    "PairSet", "best_shift", "extract_pairs",
    "MiEstimate", "PidAtoms", "extrapolate_mi", "mi_mixed", "mi_windowed", "pid_two",
    "BuilderConfig", "TuneReport", "add_neuron", "build_population", "exhaustive_search",
    "random_baseline", "tune_first_neuron",
    "EvalConfig", "EvalResult", "FeatureVector", "classify", "evaluate_pipeline",
    "extract_features", "split_dataset",
]
