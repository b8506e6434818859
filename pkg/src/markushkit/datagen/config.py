"""Generator configuration, loaded from and saved to JSON."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

DEFAULT_VARIABLE_LABELS = (
    "R1", "R2", "R3", "R4", "R5", "R6", "R7", "R8", "R9", "R10", "R11", "R12",
    "X", "Y", "Z", "A", "Q", "T", "G1", "G2", "G3", "G4", "Ra", "Rb", "Rc",
)
DEFAULT_NOISE_LABELS = ("R20", "R21", "R22", "X1", "Y1", "L", "W1")
DEFAULT_FREQUENCY_WEIGHTS = {"n": 0.35, "m": 0.2, "p": 0.15, "w": 0.15, "": 0.15}


class ConfigError(ValueError):
    pass


def _check_prob(name: str, value: float) -> None:
    if not isinstance(value, (int, float)) or not 0.0 <= value <= 1.0:
        raise ConfigError(f"{name} must be a probability in [0, 1], got {value!r}")


@dataclass(frozen=True)
class OcrNoise:
    p_substitution: float = 0.0
    p_insertion: float = 0.0
    p_deletion: float = 0.0
    p_transposition: float = 0.0
    p_case: float = 0.0
    p_shift: float = 0.0
    max_shift: int = 3

    def __post_init__(self):
        for f in fields(self):
            if f.name.startswith("p_"):
                _check_prob(f"ocr_noise.{f.name}", getattr(self, f.name))
        if self.max_shift < 0:
            raise ConfigError("ocr_noise.max_shift must be >= 0")

    @classmethod
    def uniform(cls, p: float, max_shift: int = 3) -> OcrNoise:
        return cls(p, p, p, p, p, p, max_shift)


@dataclass(frozen=True)
class ImageNoise:
    p_shift: float = 0.0
    p_scale: float = 0.0
    p_downscale: float = 0.0
    p_blur: float = 0.0
    p_pepper: float = 0.0
    p_lines: float = 0.0
    max_shift: int = 12
    scale_range: tuple[float, float] = (0.8, 1.2)
    downscale_range: tuple[float, float] = (0.4, 0.8)
    blur_sigma: tuple[float, float] = (0.5, 1.5)
    pepper_rate: float = 0.05
    pepper_patches: int = 4
    pepper_patch_size: int = 24
    max_lines: int = 3

    def __post_init__(self):
        for f in fields(self):
            if f.name.startswith("p_"):
                _check_prob(f"image_noise.{f.name}", getattr(self, f.name))
        _check_prob("image_noise.pepper_rate", self.pepper_rate)
        object.__setattr__(self, "scale_range", tuple(self.scale_range))
        object.__setattr__(self, "downscale_range", tuple(self.downscale_range))
        object.__setattr__(self, "blur_sigma", tuple(self.blur_sigma))
        lo, hi = self.scale_range
        if not 0 < lo <= hi:
            raise ConfigError("image_noise.scale_range must satisfy 0 < lo <= hi")
        lo, hi = self.downscale_range
        if not 0 < lo <= hi <= 1:
            raise ConfigError("image_noise.downscale_range must lie in (0, 1]")


@dataclass(frozen=True)
class GenConfig:
    seed: int = 0
    # per-site probabilities of the six structure operations
    p_variable_group: float = 0.3
    p_parentheses: float = 0.1
    p_bracket_pair: float = 0.4
    p_rfrag_ring_atom: float = 0.2
    p_rfrag_ring: float = 0.5
    p_funcgroup_ring: float = 0.5
    # sample-level targets: fraction of samples carrying each feature kind
    target_rgroup: float = 0.95
    target_m: float = 0.54
    target_sg: float = 0.39
    max_variable_groups: int = 4
    max_position_variations: int = 2
    max_frequency_variations: int = 2
    variable_labels: tuple[str, ...] = DEFAULT_VARIABLE_LABELS
    noise_labels: tuple[str, ...] = DEFAULT_NOISE_LABELS
    frequency_label_weights: dict[str, float] = field(
        default_factory=lambda: dict(DEFAULT_FREQUENCY_WEIGHTS))
    # description assembly
    max_substituents: int = 6
    p_shared_definition: float = 0.25
    p_noise_sentence: float = 0.2
    p_prefix: float = 0.5
    p_suffix: float = 0.3
    p_abbreviation_as_smiles: float = 0.3
    # drawing
    p_explicit_carbon: float = 0.1
    p_aromatic_circle: float = 0.3
    p_atom_numbers: float = 0.1
    p_superscript_indices: float = 0.3
    p_description_right: float = 0.3
    max_canvas: int = 2400
    pool_size: int = 200
    ocr_noise: OcrNoise = field(default_factory=OcrNoise)
    image_noise: ImageNoise = field(default_factory=ImageNoise)
    # accepted for compatibility; descriptions are never paraphrased here
    paraphrase_fraction: float = 0.0

    def __post_init__(self):
        for f in fields(self):
            if f.name.startswith(("p_", "target_")) or f.name == "paraphrase_fraction":
                _check_prob(f.name, getattr(self, f.name))
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        for name in ("max_variable_groups", "max_position_variations",
                     "max_frequency_variations", "max_substituents", "pool_size"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0")
        if self.max_substituents < 1:
            raise ConfigError("max_substituents must be >= 1")
        object.__setattr__(self, "variable_labels", tuple(self.variable_labels))
        object.__setattr__(self, "noise_labels", tuple(self.noise_labels))
        weights = {str(k).strip(): float(v) for k, v in dict(self.frequency_label_weights).items()}
        if not weights or any(w < 0 for w in weights.values()) or sum(weights.values()) <= 0:
            raise ConfigError("frequency_label_weights must be non-negative with a positive sum")
        object.__setattr__(self, "frequency_label_weights", weights)
        overlap = (set(self.variable_labels) | set(self.noise_labels)) & set(weights)
        if overlap:
            raise ConfigError(f"labels used both for atoms and repeat units: {sorted(overlap)}")
        if len(set(self.variable_labels)) != len(self.variable_labels):
            raise ConfigError("variable_labels contains duplicates")
        if set(self.variable_labels) & set(self.noise_labels):
            raise ConfigError("noise_labels must not overlap variable_labels")
        if isinstance(self.ocr_noise, dict):
            object.__setattr__(self, "ocr_noise", OcrNoise(**self.ocr_noise))
        if isinstance(self.image_noise, dict):
            object.__setattr__(self, "image_noise", ImageNoise(**self.image_noise))

    def with_seed(self, seed: int) -> GenConfig:
        return replace(self, seed=seed)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> GenConfig:
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {unknown}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def digest(self) -> str:
        """SHA-256 over the canonical JSON form."""
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def load_config(path: str | Path) -> GenConfig:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a JSON object")
    return GenConfig.from_dict(data)
