"""Entanglement recognition from randomized-measurement images of spin chains."""
from .hilbert import DensityMatrix, LocalUnitary, PureState
from .measures import EntanglementValue, MeasureKind, half_chain_entropy, log_negativity, measure
from .models import LindbladConfig, ModelKind, ModelSpec, build_hamiltonian, diagonalize, ground_state
from .imaging import RotationSet, StatImage, apply_shot_noise, generate_image, sample_cue_rotations
from .library import BinningScheme, Library, bin_label, entropy_scheme, read_library, write_library
from .cnn import NetworkConfig, NetworkParams, TrainConfig, forward, init_params, predict_bin, train
from .harness import ErrorStats, cross_model_grid, evaluate, evaluate_dynamics, nbin_sweep

__version__ = "0.1.0"

__all__ = [
    "BinningScheme", "DensityMatrix", "EntanglementValue", "ErrorStats", "Library", "LindbladConfig",
    "LocalUnitary", "MeasureKind", "ModelKind", "ModelSpec", "NetworkConfig", "NetworkParams", "PureState",
    "RotationSet", "StatImage", "TrainConfig", "apply_shot_noise", "bin_label", "build_hamiltonian",
    "cross_model_grid", "diagonalize", "entropy_scheme", "evaluate", "evaluate_dynamics", "forward",
    "generate_image", "ground_state", "half_chain_entropy", "init_params", "log_negativity", "measure",
    "nbin_sweep", "predict_bin", "read_library", "sample_cue_rotations", "train", "write_library",
]
