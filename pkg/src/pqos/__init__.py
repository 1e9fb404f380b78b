"""Predictive QoS for vehicle convoys: forecast a vehicle's throughput minutes
ahead from measurements of the vehicle driving in front of it."""

from .alignment import FeatureSetKind, SupervisedDataset, build_dataset, lookahead_delay, pair_distance
from .correlation import CorrelationCurve, cross_correlation, peak_lag
from .evaluation import ExperimentConfig, ExperimentReport, mrpe, permutation_importance, run_experiment
from .gbt import GbtConfig, GbtModel, fit, predict
from .radio_sim import CampaignConfig, EnvironmentConfig, link_quality, simulate_campaign, throughput_sample
from .records import CellState, PhyMeasurement, TraceSample, VehicleTrace
from .trace_store import load_csv, resample, store_csv

__version__ = "0.1.0"

__all__ = [
    "FeatureSetKind",
    "SupervisedDataset",
    "build_dataset",
    "lookahead_delay",
    "pair_distance",
    "CorrelationCurve",
    "cross_correlation",
    "peak_lag",
    "ExperimentConfig",
    "ExperimentReport",
    "mrpe",
    "permutation_importance",
    "run_experiment",
    "GbtConfig",
    "GbtModel",
    "fit",
    "predict",
    "CampaignConfig",
    "EnvironmentConfig",
    "link_quality",
    "simulate_campaign",
    "throughput_sample",
    "CellState",
    "PhyMeasurement",
    "TraceSample",
    "VehicleTrace",
    "load_csv",
    "resample",
    "store_csv",
]
