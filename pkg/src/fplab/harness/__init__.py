"""Experiment orchestration: datasets, runs, traces, plots and the CLI."""

from .config import ExperimentConfig
from .data import build_1d_dataset, gaussian_clusters, load_idx, subsample, write_idx
from .experiment import RunArtifacts, crossing_epochs, low_to_high, run_experiment
from .io import Trace, emit_csv, emit_heatmap_svg, read_csv
