"""Pipeline configuration: flat ``section.key=value`` text, one value per line.

Blank lines and ``#`` comments are ignored.  Every key has a typed default,
so a config file only lists deviations; unknown sections or keys and
values of the wrong type are rejected with the offending line.  The same
``section.key=value`` syntax drives command-line overrides.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from pathlib import Path

__all__ = [
    "SynthSection",
    "Audio2vecSection",
    "ClusterSection",
    "GanmapSection",
    "EvalSection",
    "SweepSection",
    "PipelineConfig",
    "parse_config",
    "read_config",
    "apply_overrides",
    "format_config",
]


@dataclass
class SynthSection:
    """Synthetic world and corpus sizes."""

    l: int = 10
    modes: int = 1
    d: int = 8
    sigma: float = 0.1
    min_proto_gap: float = 2.0
    n_utts: int = 60
    n_test_utts: int = 20
    n_text: int = 60
    len_lo: int = 8
    len_hi: int = 20
    emit: str = "embeddings"
    frames_lo: int = 2
    frames_hi: int = 5


@dataclass
class Audio2vecSection:
    """Sequence-autoencoder training settings."""

    hidden_size: int = 16
    epochs: int = 300
    lr: float = 5e-4
    batch_size: int = 128
    reverse_targets: bool = False


@dataclass
class ClusterSection:
    """K-means settings."""

    k: int = 8
    max_iter: int = 300
    tol: float = 1e-6
    normalize: bool = False


@dataclass
class GanmapSection:
    """Adversarial mapping settings; cluster count and inventory size come
    from the consuming stage's inputs."""

    mode: str = "gumbel"
    inv_temp: float = 0.9
    lr_g: float = 0.01
    lr_d: float = 0.001
    d_steps_per_g: int = 3
    gp_lambda: float = 10.0
    batch: int = 128
    seq_len: int = 32
    iterations: int = 5000
    channels: int = 8
    leak: float = 0.2
    e_init_scale: float = 0.1
    early_stop: bool = True
    probe_every: int = 25
    patience: int = 8
    min_iterations: int = 200


@dataclass
class EvalSection:
    """Evaluation and ensembling settings."""

    ensemble_size: int = 6


@dataclass
class SweepSection:
    """Cluster-count sweep settings."""

    ks: tuple[int, ...] = (4, 8, 16)


@dataclass
class PipelineConfig:
    """All stage settings plus the root seed every stage derives from."""

    seed: int = 0
    synth: SynthSection = field(default_factory=SynthSection)
    audio2vec: Audio2vecSection = field(default_factory=Audio2vecSection)
    cluster: ClusterSection = field(default_factory=ClusterSection)
    ganmap: GanmapSection = field(default_factory=GanmapSection)
    eval: EvalSection = field(default_factory=EvalSection)
    sweep: SweepSection = field(default_factory=SweepSection)


_SECTIONS = ("synth", "audio2vec", "cluster", "ganmap", "eval", "sweep")


def _parse_value(raw: str, kind: type, where: str):
    raw = raw.strip()
    if kind is bool:
        lowered = raw.lower()
        if lowered in ("true", "1", "yes"):
            return True
        if lowered in ("false", "0", "no"):
            return False
        raise ValueError(f"{where}: expected a boolean, got {raw!r}")
    try:
        if kind is int:
            return int(raw)
        if kind is float:
            return float(raw)
        if kind is tuple:
            return tuple(int(part) for part in raw.split(",") if part.strip())
    except ValueError:
        raise ValueError(f"{where}: expected {kind.__name__}, got {raw!r}") from None
    return raw


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(str(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _set_key(config: PipelineConfig, dotted: str, raw: str, where: str) -> None:
    if dotted == "seed":
        config.seed = _parse_value(raw, int, where)
        return
    if "." not in dotted:
        raise ValueError(f"{where}: expected 'section.key', got {dotted!r}")
    section_name, key = dotted.split(".", 1)
    if section_name not in _SECTIONS:
        raise ValueError(f"{where}: unknown section {section_name!r}")
    section = getattr(config, section_name)
    spec = {f.name: f.type for f in fields(section)}
    if key not in spec:
        raise ValueError(f"{where}: unknown key {key!r} in section {section_name!r}")
    current = getattr(section, key)
    kind = type(current)
    setattr(section, key, _parse_value(raw, kind, where))


def parse_config(text: str, base: PipelineConfig | None = None) -> PipelineConfig:
    """Parse ``section.key=value`` lines on top of defaults (or ``base``)."""
    config = base if base is not None else PipelineConfig()
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ValueError(f"line {lineno}: expected 'section.key=value', got {line!r}")
        dotted, raw = stripped.split("=", 1)
        _set_key(config, dotted.strip(), raw, f"line {lineno}")
    return config


def read_config(path: str | Path) -> PipelineConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ValueError(f"cannot read config {path}: {exc}") from None
    return parse_config(text)


def apply_overrides(config: PipelineConfig, overrides: list[str]) -> PipelineConfig:
    """Apply ``section.key=value`` strings (e.g. from ``--set``) in order."""
    for i, item in enumerate(overrides, start=1):
        if "=" not in item:
            raise ValueError(f"override {i}: expected 'section.key=value', got {item!r}")
        dotted, raw = item.split("=", 1)
        _set_key(config, dotted.strip(), raw, f"override {item!r}")
    return config


def format_config(config: PipelineConfig) -> str:
    """Canonical text form: every key, stable order; parses back losslessly."""
    lines = [f"seed={config.seed}"]
    for section_name in _SECTIONS:
        section = getattr(config, section_name)
        for f in fields(section):
            lines.append(f"{section_name}.{f.name}={_format_value(getattr(section, f.name))}")
    return "\n".join(lines) + "\n"
