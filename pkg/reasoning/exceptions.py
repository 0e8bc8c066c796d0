"""Errori del pipeline. Ogni fase solleva la propria sottoclasse."""
from typing import Optional


class ReasoningError(Exception):
    """Radice di tutti gli errori del progetto."""


class ConfigurationError(ReasoningError):
    """Configurazione incoerente (dimensioni, percorsi, backend)."""


class IngestError(ReasoningError):
    """File DROP o QuestionSet non leggibile."""


class AnnotationError(IngestError):
    def __init__(self, line_no: Optional[int], message: str):
        self.line_no = line_no
        super().__init__(message if line_no is None else f"riga {line_no}: {message}")


class AlignmentError(ReasoningError):
    """Parole non allineabili ai sub-token dell'encoder."""


class OverLengthError(ReasoningError):
    def __init__(self, length: int, limit: int, what: str = "input"):
        self.length = length
        self.limit = limit
        super().__init__(f"{what} di {length} token supera il limite di {limit}")


class InvalidPointersError(ReasoningError):
    """Il modello ha prodotto puntatori non mappabili su parole."""


class InvalidDecompositionError(ReasoningError):
    """Algoritmo di riscrittura non applicabile alla domanda."""


class ReaderError(ReasoningError):
    """Il reader ha restituito uno span non valido."""


class TransportError(ReaderError):
    """Backend remoto irraggiungibile dopo i tentativi configurati."""


class SimilarityError(ReasoningError):
    """Distanza o similarità non definita (frase fuori vocabolario)."""


class EvaluationError(ReasoningError):
    """Input delle metriche non coerenti (lunghezze diverse, ecc.)."""
