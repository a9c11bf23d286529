"""Naive Bayes classifiers trained from locally differentially private reports."""

from .dataio import CsvHints, Dataset, DatasetSchema, load_csv, split
from .errors import LDPNBError
from .freq_mech import FrequencyOracle, Mechanism
from .model import NaiveBayesModel, predict, reference_fit
from .pipeline import RunConfig, fit_private, prepare, run_once
from .privacy import PrivacyParams

__version__ = "0.1.0"

__all__ = [
    "CsvHints", "Dataset", "DatasetSchema", "FrequencyOracle", "LDPNBError", "Mechanism",
    "NaiveBayesModel", "PrivacyParams", "RunConfig", "fit_private", "load_csv", "predict",
    "prepare", "reference_fit", "run_once", "split",
]
