##############################################################################
# Experiment configuration: a dataclass whose field names are exactly the
# keys of the experiment JSON file. Missing keys are filled with defaults
# (with a warning), unknown keys are dropped (with a warning), and the result
# is validated before any replication runs.
##############################################################################
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import List, Optional

from errors import InvalidConfig, InvalidInput, StorageError
from file_formats import read_params
from logger_config import get_logger
from utils import default_iterations

logger = get_logger(__name__)

SIM_KINDS = ("sim1", "sim2")
BASELINES = ("vanilla", "spectral")
METHODS = ("spectral", "vanilla", "spectral+alg1", "vanilla+alg1", "spectral+alg2", "vanilla+alg2")

DEFAULT_EXPERIMENT_CONFIG = {
    "model_kind": "sim1",
    "n": 1200,
    "replications": 100,
    "methods": ["spectral", "vanilla", "spectral+alg1", "vanilla+alg1"],
    "max_iters": None,
    "base_seed": 20240601,
    "ridge": 1e-6,
    "workers": 1,
    "time_budget": None,
    "restarts": 10,
    "lloyd_iters": 100,
    "sim_options": {},
}


def split_method(method: str):
    """'vanilla+alg1' -> ('vanilla', 'alg1'); plain baselines -> (name, None)."""
    init, _, algorithm = method.partition("+")
    return init, algorithm or None


@dataclass
class ExperimentConfig:
    model_kind: str = DEFAULT_EXPERIMENT_CONFIG["model_kind"]
    n: int = DEFAULT_EXPERIMENT_CONFIG["n"]
    replications: int = DEFAULT_EXPERIMENT_CONFIG["replications"]
    methods: List[str] = field(default_factory=lambda: list(DEFAULT_EXPERIMENT_CONFIG["methods"]))
    max_iters: Optional[int] = None
    base_seed: int = DEFAULT_EXPERIMENT_CONFIG["base_seed"]
    ridge: float = DEFAULT_EXPERIMENT_CONFIG["ridge"]
    workers: int = DEFAULT_EXPERIMENT_CONFIG["workers"]
    time_budget: Optional[float] = None
    restarts: int = DEFAULT_EXPERIMENT_CONFIG["restarts"]
    lloyd_iters: int = DEFAULT_EXPERIMENT_CONFIG["lloyd_iters"]
    sim_options: dict = field(default_factory=dict)

    @property
    def iterations(self) -> int:
        """max_iters, or ceil(ln n) when unset."""
        return self.max_iters if self.max_iters is not None else default_iterations(self.n)

    @property
    def initializers(self) -> List[str]:
        return sorted({split_method(m)[0] for m in self.methods}, key=BASELINES.index)

    def model_is_homogeneous(self) -> bool:
        if self.model_kind == "sim1":
            return True
        if self.model_kind == "sim2":
            return False
        return read_params(self.model_kind).homogeneous

    def validate(self) -> "ExperimentConfig":
        if not isinstance(self.n, int) or self.n < 2:
            raise InvalidConfig(f"n must be an integer >= 2, got {self.n!r}")
        if not isinstance(self.replications, int) or self.replications < 1:
            raise InvalidConfig(f"replications must be >= 1, got {self.replications!r}")
        if not self.methods:
            raise InvalidConfig("methods must not be empty")
        unknown = [m for m in self.methods if m not in METHODS]
        if unknown:
            raise InvalidConfig(f"unknown method(s) {unknown}; expected a subset of {list(METHODS)}")
        if len(set(self.methods)) != len(self.methods):
            raise InvalidConfig("methods must not repeat")
        if self.max_iters is not None and (not isinstance(self.max_iters, int) or self.max_iters < 1):
            raise InvalidConfig(f"max_iters must be null or >= 1, got {self.max_iters!r}")
        if not isinstance(self.base_seed, int) or not 0 <= self.base_seed < 2 ** 64:
            raise InvalidConfig(f"base_seed must be a 64-bit unsigned integer, got {self.base_seed!r}")
        if self.ridge < 0:
            raise InvalidConfig(f"ridge must be non-negative, got {self.ridge}")
        if not isinstance(self.workers, int) or self.workers < 1:
            raise InvalidConfig(f"workers must be >= 1, got {self.workers!r}")
        if self.time_budget is not None and self.time_budget <= 0:
            raise InvalidConfig(f"time_budget must be positive or null, got {self.time_budget}")
        if self.restarts < 1 or self.lloyd_iters < 1:
            raise InvalidConfig("restarts and lloyd_iters must be >= 1")
        if not isinstance(self.sim_options, dict):
            raise InvalidConfig("sim_options must be an object")
        if self.model_kind not in SIM_KINDS and not Path(self.model_kind).exists():
            raise InvalidConfig(f"model_kind must be one of {SIM_KINDS} or a params file, got {self.model_kind!r}")

        try:
            homogeneous = self.model_is_homogeneous()
        except (InvalidInput, StorageError) as e:
            raise InvalidConfig(f"cannot load params file {self.model_kind}: {e}") from e
        for method in self.methods:
            algorithm = split_method(method)[1]
            if algorithm == "alg1" and not homogeneous:
                raise InvalidConfig(f"{method} needs a shared-covariance model")
            if algorithm == "alg2" and homogeneous:
                raise InvalidConfig(f"{method} needs a heterogeneous model")
        return self

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        missing = [key for key in DEFAULT_EXPERIMENT_CONFIG if key not in data]
        if missing:
            logger.warning(f"Experiment config misses {missing}; using defaults for them")
        ignored = sorted(set(data) - set(DEFAULT_EXPERIMENT_CONFIG))
        if ignored:
            logger.warning(f"Ignoring unknown experiment config keys {ignored}")
        filtered = {key: data.get(key, DEFAULT_EXPERIMENT_CONFIG[key]) for key in DEFAULT_EXPERIMENT_CONFIG}
        filtered["methods"] = list(filtered["methods"])
        filtered["sim_options"] = dict(filtered["sim_options"] or {})
        return cls(**filtered).validate()

    @classmethod
    def load_config(cls, path) -> "ExperimentConfig":
        """Load and validate an experiment file."""
        path = Path(path)
        if not path.exists():
            logger.error(f"{path} not found")
            raise StorageError(path, "experiment config not found")
        try:
            with open(path, "r", encoding="utf-8") as f:
                data = json.load(f)
        except OSError as e:
            raise StorageError(path, f"cannot read: {e}") from e
        except json.JSONDecodeError as e:
            logger.error(f"Invalid {path}: {e}")
            raise InvalidConfig(f"{path}: invalid JSON: {e}") from e
        if not isinstance(data, dict):
            raise InvalidConfig(f"{path}: expected a JSON object")
        return cls.from_dict(data)
