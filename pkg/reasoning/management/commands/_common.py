"""Argomenti e gestione errori condivisi dai comandi del pipeline."""
import builtins
from contextlib import contextmanager

from django.core.management.base import CommandError

from reasoning import exceptions
from reasoning.config import PipelineConfig
from reasoning.exceptions import ConfigurationError, ReasoningError, TransportError

# codici di uscita: 1 uso/configurazione, 2 guasto sistemico di un backend
USAGE_ERROR = 1
SYSTEMIC_ERROR = 2


def add_config_argument(parser):
    parser.add_argument("--config", help="File JSON di configurazione del pipeline")
    parser.add_argument(
        "--set", action="append", default=[], metavar="CHIAVE=VALORE",
        help="Override puntuale, es. --set reader.backend=mock (ripetibile)",
    )


def _coerce(value: str):
    lowered = value.lower()
    if lowered in ("true", "false"):
        return lowered == "true"
    for cast in (int, float):
        try:
            return cast(value)
        except ValueError:
            pass
    return value


def load_config(options, **overrides) -> PipelineConfig:
    pairs = dict(overrides)
    for item in options.get("set") or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise CommandError(f"override non valido: {item}", returncode=USAGE_ERROR)
        pairs[key.strip()] = _coerce(value.strip())
    try:
        return PipelineConfig.load(options.get("config"), pairs)
    except ConfigurationError as exc:
        raise CommandError(str(exc), returncode=USAGE_ERROR) from exc


def exit_code_for(exc_type: type) -> int:
    if issubclass(exc_type, TransportError):
        return SYSTEMIC_ERROR
    if issubclass(exc_type, (ConfigurationError, ReasoningError, FileNotFoundError)):
        return USAGE_ERROR
    return SYSTEMIC_ERROR


def exit_code_for_name(name: str) -> int:
    """Codice di uscita per il nome di classe salvato su una PipelineRun fallita."""
    exc_type = getattr(exceptions, name, None) or getattr(builtins, name, None)
    if not isinstance(exc_type, type) or not issubclass(exc_type, BaseException):
        return SYSTEMIC_ERROR
    return exit_code_for(exc_type)


@contextmanager
def command_errors():
    """Errori del dominio -> CommandError con il codice di uscita giusto."""
    try:
        yield
    except TransportError as exc:
        raise CommandError(f"backend non raggiungibile: {exc}", returncode=SYSTEMIC_ERROR) from exc
    except (ConfigurationError, ReasoningError, FileNotFoundError) as exc:
        raise CommandError(str(exc), returncode=USAGE_ERROR) from exc
