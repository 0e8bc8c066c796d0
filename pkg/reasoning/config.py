"""
Configurazione del pipeline: default dai settings Django (quindi da
variabili d'ambiente / .env), sovrascritti da un file JSON dichiarativo e
infine dai flag dei comandi.
"""
from __future__ import annotations

import dataclasses
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional

from django.conf import settings

from .exceptions import ConfigurationError

logger = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    learning_rate: float = field(default_factory=lambda: settings.POINTER_LEARNING_RATE)
    warmup_fraction: float = field(default_factory=lambda: settings.POINTER_WARMUP_FRACTION)
    batch_size: int = field(default_factory=lambda: settings.POINTER_BATCH_SIZE)
    epochs: int = field(default_factory=lambda: settings.POINTER_EPOCHS)
    # early stopping sulla loss di training ("fino a convergenza")
    patience: int = field(default_factory=lambda: settings.POINTER_PATIENCE)
    min_delta: float = 1e-4
    seed: int = 1
    finetune_encoder: bool = field(default_factory=lambda: settings.POINTER_FINETUNE_ENCODER)
    dev_fraction: float = 0.1

    def __post_init__(self):
        if self.learning_rate <= 0 or self.batch_size < 1 or self.epochs < 1:
            raise ConfigurationError("learning_rate, batch_size ed epochs devono essere positivi")
        if not 0.0 <= self.warmup_fraction < 1.0:
            raise ConfigurationError("warmup_fraction deve stare in [0, 1)")


@dataclass
class PathsConfig:
    drop_file: Optional[str] = None
    annotations: Optional[str] = None
    weights_dir: str = field(default_factory=lambda: str(settings.PIPELINE_WEIGHTS_DIR))
    reports_dir: str = field(default_factory=lambda: str(settings.PIPELINE_REPORTS_DIR))
    output_dir: str = field(default_factory=lambda: str(settings.PIPELINE_DATA_DIR))
    gold_decompositions: Optional[str] = None
    relabel_overlay: Optional[str] = None


@dataclass
class EncoderConfig:
    # transformer | mock
    backend: str = field(default_factory=lambda: settings.POINTER_ENCODER)
    model: str = field(default_factory=lambda: settings.POINTER_ENCODER_MODEL)
    max_length: int = field(default_factory=lambda: settings.POINTER_MAX_LENGTH)


@dataclass
class PointerConfig:
    # learned (encoder + pesi) | annotated (puntatori gold da file)
    source: str = "learned"
    weights: Optional[str] = None


@dataclass
class ReaderConfig:
    # local | http | mock
    backend: str = field(default_factory=lambda: settings.READER_BACKEND)
    model: str = field(default_factory=lambda: settings.READER_MODEL)
    endpoint: str = field(default_factory=lambda: settings.READER_ENDPOINT)
    max_length: int = field(default_factory=lambda: settings.READER_MAX_LENGTH)
    timeout: float = field(default_factory=lambda: settings.READER_TIMEOUT)
    retries: int = field(default_factory=lambda: settings.READER_RETRIES)
    # per il backend mock: JSON {sottodomanda: span}
    spans_file: Optional[str] = None


@dataclass
class ParserConfig:
    # spacy | scripted
    adapter: str = field(default_factory=lambda: settings.PARSER_ADAPTER)
    model: str = field(default_factory=lambda: settings.PARSER_MODEL)
    # per l'adattatore scripted: JSON lines {question, tags, heads}
    parses_file: Optional[str] = None


@dataclass
class PipelineConfig:
    paths: PathsConfig = field(default_factory=PathsConfig)
    encoder: EncoderConfig = field(default_factory=EncoderConfig)
    pointer: PointerConfig = field(default_factory=PointerConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    reader: ReaderConfig = field(default_factory=ReaderConfig)
    parser: ParserConfig = field(default_factory=ParserConfig)
    parallelism: int = field(default_factory=lambda: settings.PIPELINE_PARALLELISM)
    seeds: List[int] = field(default_factory=lambda: list(settings.POINTER_SEEDS))
    # id del template oppure "auto" per il selettore a trigrammi
    template: str = field(default_factory=lambda: settings.PIPELINE_TEMPLATE)
    device: str = field(default_factory=lambda: settings.PIPELINE_DEVICE)

    @classmethod
    def load(cls, path=None, overrides: Optional[Mapping[str, Any]] = None) -> "PipelineConfig":
        data: Dict[str, Any] = {}
        if path:
            path = Path(path)
            if not path.exists():
                raise ConfigurationError(f"File di configurazione non trovato: {path}")
            try:
                data = json.loads(path.read_text(encoding="utf-8"))
            except json.JSONDecodeError as exc:
                raise ConfigurationError(f"{path}: JSON non valido ({exc})") from exc
        config = _build(cls, data, "config")
        for dotted, value in (overrides or {}).items():
            if value is not None:
                config.set(dotted, value)
        if config.parallelism < 1:
            raise ConfigurationError("parallelism deve essere >= 1")
        return config

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "PipelineConfig":
        return _build(cls, data, "config")

    def set(self, dotted: str, value: Any) -> None:
        """Override puntuale, es. set("reader.backend", "http")."""
        *parents, leaf = dotted.split(".")
        target = self
        for name in parents:
            target = getattr(target, name)
        if not hasattr(target, leaf):
            raise ConfigurationError(f"chiave di configurazione sconosciuta: {dotted}")
        setattr(target, leaf, value)

    def require_paths(self, *names: str) -> None:
        for name in names:
            value = getattr(self.paths, name)
            if not value or not Path(value).exists():
                raise ConfigurationError(f"percorso '{name}' mancante o inesistente: {value}")

    def to_dict(self) -> Dict[str, Any]:
        return dataclasses.asdict(self)


def _build(cls, data: Mapping[str, Any], where: str):
    if not isinstance(data, Mapping):
        raise ConfigurationError(f"{where}: atteso un oggetto")
    known = {f.name: f for f in dataclasses.fields(cls)}
    unknown = set(data) - set(known)
    if unknown:
        raise ConfigurationError(f"{where}: chiavi sconosciute {sorted(unknown)}")
    kwargs = {}
    for name, value in data.items():
        default = known[name].default_factory() if known[name].default_factory is not dataclasses.MISSING else None
        if dataclasses.is_dataclass(default):
            kwargs[name] = _build(type(default), value, f"{where}.{name}")
        else:
            kwargs[name] = value
    return cls(**kwargs)
