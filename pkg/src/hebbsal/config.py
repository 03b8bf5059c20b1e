"""Run configuration: one serializable source of truth for every tunable.

Configs load from a flat ``key = value`` text file (``#`` comments allowed),
can be overridden by CLI flags, and serialize into the run manifest so a run
can be reproduced exactly from its own output.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .errors import ValidationError
from .lateral import SaliencyConfig
from .oja import LearnConfig

ENV_SEED = "HEBBSAL_SEED"

# key -> coercion; the single schema for files, flags and manifests
_BOOL_WORDS = {"true": True, "yes": True, "1": True,
               "false": False, "no": False, "0": False}


def _as_bool(v) -> bool:
    if isinstance(v, bool):
        return v
    word = str(v).strip().lower()
    if word not in _BOOL_WORDS:
        raise ValidationError(f"expected a boolean, got {v!r}")
    return _BOOL_WORDS[word]


_SCHEMA = {
    "seed": int,
    "patch_size": int,
    "num_layers": int,
    "epsilon": float,
    "mu": float,
    "epochs": int,
    "alpha": float,
    "init_w1": float,
    "init_w2": float,
    "dissim_threshold": float,
    "count_threshold": int,
    "use_absolute_dot": _as_bool,
    "workers": int,
    "emit_diagnostics": _as_bool,
    "output_dir": str,
}


@dataclass
class RunConfig:
    """Effective settings of one run; every module tunable is reachable here."""

    patch_size: int = 16
    num_layers: int = 10
    learn: LearnConfig = LearnConfig()
    saliency: SaliencyConfig = SaliencyConfig()
    seed: int = 0
    workers: int = 1
    emit_diagnostics: bool = False
    output_dir: str = "hebbsal_run"

    def __post_init__(self):
        if self.patch_size < 2:
            raise ValidationError(f"patch_size must be >= 2, got {self.patch_size}")
        if self.num_layers < 1:
            raise ValidationError(f"num_layers must be >= 1, got {self.num_layers}")
        if self.seed < 0:
            raise ValidationError(f"seed must be non-negative, got {self.seed}")
        if self.workers < 1:
            raise ValidationError(f"workers must be >= 1, got {self.workers}")

    @property
    def epsilon(self) -> float:
        return 1.0 / self.num_layers

    def to_dict(self) -> dict:
        """Flat mapping that round-trips through from_mapping."""
        return {
            "seed": self.seed,
            "patch_size": self.patch_size,
            "num_layers": self.num_layers,
            "mu": self.learn.mu,
            "epochs": self.learn.epochs,
            "alpha": self.learn.alpha,
            "init_w1": self.learn.init[0],
            "init_w2": self.learn.init[1],
            "dissim_threshold": self.saliency.dissim_threshold,
            "count_threshold": self.saliency.count_threshold,
            "use_absolute_dot": self.saliency.use_absolute_dot,
            "workers": self.workers,
            "emit_diagnostics": self.emit_diagnostics,
            "output_dir": self.output_dir,
        }

    @classmethod
    def from_mapping(cls, mapping: dict) -> "RunConfig":
        """Build a config from a flat key/value mapping (file, flags, manifest).

        ``epsilon`` is accepted as an alternative to ``num_layers`` and must
        be the reciprocal of a whole layer count.
        """
        values = {}
        for key, raw in mapping.items():
            if key not in _SCHEMA:
                raise ValidationError(f"unknown config key {key!r}")
            try:
                values[key] = _SCHEMA[key](raw)
            except (TypeError, ValueError) as exc:
                raise ValidationError(f"bad value for {key!r}: {raw!r}") from exc

        if "epsilon" in values:
            eps = values.pop("epsilon")
            if eps <= 0 or eps > 1:
                raise ValidationError(f"epsilon must be in (0, 1], got {eps}")
            n = round(1.0 / eps)
            if abs(n * eps - 1.0) > 1e-9:
                raise ValidationError(f"epsilon {eps} is not 1/num_layers")
            if "num_layers" in values and values["num_layers"] != n:
                raise ValidationError("epsilon and num_layers disagree")
            values["num_layers"] = n

        defaults = LearnConfig()
        learn = LearnConfig(
            mu=values.pop("mu", defaults.mu),
            epochs=values.pop("epochs", defaults.epochs),
            alpha=values.pop("alpha", defaults.alpha),
            seed=0,
            init=(values.pop("init_w1", defaults.init[0]),
                  values.pop("init_w2", defaults.init[1])),
        )
        sal_defaults = SaliencyConfig()
        saliency = SaliencyConfig(
            dissim_threshold=values.pop("dissim_threshold",
                                        sal_defaults.dissim_threshold),
            count_threshold=values.pop("count_threshold",
                                       sal_defaults.count_threshold),
            use_absolute_dot=values.pop("use_absolute_dot",
                                        sal_defaults.use_absolute_dot),
        )
        return cls(learn=learn, saliency=saliency, **values)

    @classmethod
    def from_file(cls, path: str | Path) -> "RunConfig":
        return cls.from_mapping(parse_config_file(path))


def parse_config_file(path: str | Path) -> dict:
    """Read a flat ``key = value`` file into a raw mapping.

    Blank lines and ``#`` comments are skipped; keys are validated against
    the schema but values stay raw strings for from_mapping to coerce.
    """
    mapping: dict = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ValidationError(f"{path}:{lineno}: expected 'key = value'")
        key, _, value = stripped.partition("=")
        key, value = key.strip(), value.strip()
        if key not in _SCHEMA:
            raise ValidationError(f"{path}:{lineno}: unknown config key {key!r}")
        if key in mapping:
            raise ValidationError(f"{path}:{lineno}: duplicate key {key!r}")
        mapping[key] = value
    return mapping
