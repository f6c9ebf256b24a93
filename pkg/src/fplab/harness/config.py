"""Experiment configuration (JSON schema) and fingerprinting."""

from dataclasses import asdict, dataclass, field, fields
import hashlib
import json

from ..errors import ConfigError
from ..mlp import MlpSpec

TARGETS = ("sin1_3", "sin1_3_5", "mnist_subset", "clusters")
OPTIMIZERS = ("gd", "cg", "tnc", "bfgs", "lbfgs", "powell", "pso", "mc")

# keys accepted in ``optimizer_params`` per optimizer
OPTIMIZER_PARAMS = {
    "gd": {"step_size"},
    "cg": set(),
    "tnc": {"inner_maxiter", "eta", "curvature_eps"},
    "bfgs": set(),
    "lbfgs": {"memory"},
    "powell": {"tol", "bracket"},
    "pso": {"init_width", "max_particles"},
    "mc": {"delta", "n_samples"},
}


@dataclass
class ExperimentConfig:
    """One training run.

    ``stop_threshold``: if set, the run ends as soon as every tracked
    frequency has dropped below it (1-d targets only); the crossing epochs
    at that threshold are unaffected.
    """

    target: str = "sin1_3_5"
    widths: tuple = (1, 100, 10, 1)
    optimizer: str = "cg"
    optimizer_params: dict = field(default_factory=dict)
    epsilon: float = 1e-6
    max_iter: int = 2000
    stall_window: int = 50
    seed: int = 0
    record_every: int = 1
    n_points: int = 201
    track: list = None
    peak_ratio: float = 0.1
    threshold: float = 0.3
    stop_threshold: float = None
    deltas: list = field(default_factory=lambda: [2.0, 7.0])
    subsample: int = 550
    mnist_images: str = None
    mnist_labels: str = None
    out: str = "runs/experiment"

    def __post_init__(self):
        try:
            if isinstance(self.widths, str):
                self.widths = MlpSpec.parse(self.widths).widths
            self.widths = tuple(int(w) for w in self.widths)
            self.deltas = [float(d) for d in self.deltas]
            if self.track is not None:
                self.track = [int(k) for k in self.track]
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None
        self.validate()

    @property
    def spectral(self):
        return self.target in ("sin1_3", "sin1_3_5")

    def validate(self):
        if self.target not in TARGETS:
            raise ConfigError(f"unknown target {self.target!r}; choose from {TARGETS}")
        if self.optimizer not in OPTIMIZERS:
            raise ConfigError(f"unknown optimizer {self.optimizer!r}; choose from {OPTIMIZERS}")
        extra = set(self.optimizer_params) - OPTIMIZER_PARAMS[self.optimizer]
        if extra:
            raise ConfigError(f"{self.optimizer} does not take {sorted(extra)}")
        try:
            MlpSpec(self.widths)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.spectral and (self.widths[0] != 1 or self.widths[-1] != 1):
            raise ConfigError("1-d targets need a 1-...-1 network")
        if self.target in ("mnist_subset",) and (self.widths[0] != 784 or self.widths[-1] != 10):
            raise ConfigError("mnist_subset needs a 784-...-10 network")
        if self.target == "clusters" and self.widths[-1] != 10:
            raise ConfigError("clusters needs 10 outputs")
        if self.target == "mnist_subset" and not (self.mnist_images and self.mnist_labels):
            raise ConfigError("mnist_subset needs mnist_images and mnist_labels")
        if self.record_every < 1:
            raise ConfigError("record_every must be >= 1")
        if self.max_iter < 0 or self.stall_window < 1 or not self.epsilon > 0:
            raise ConfigError("invalid stopping rule")
        if not self.spectral and not self.deltas:
            raise ConfigError("filter mode needs at least one delta")
        if any(not d > 0 for d in self.deltas):
            raise ConfigError("deltas must be positive")

    def to_dict(self):
        d = asdict(self)
        d["widths"] = list(self.widths)
        return d

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        try:
            return cls(**data)
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc)) from None

    @classmethod
    def load(cls, path):
        try:
            with open(path) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        return cls.from_dict(data)

    def fingerprint(self):
        """sha256 over the canonical JSON of every field except ``out``."""
        d = self.to_dict()
        d.pop("out")
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()
