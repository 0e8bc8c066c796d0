from pathlib import Path
import os

from dotenv import load_dotenv

# Percorsi base
BASE_DIR = Path(__file__).resolve().parent.parent

# Variabili da .env (se presente); l'ambiente reale ha la precedenza
load_dotenv(BASE_DIR / ".env", override=False)

# Sicurezza / Debug
SECRET_KEY = os.environ.get("DJANGO_SECRET_KEY", "dev-secret-key-change-me")
DEBUG = os.environ.get("DJANGO_DEBUG", "1") == "1"
ALLOWED_HOSTS = os.environ.get("DJANGO_ALLOWED_HOSTS", "localhost").split(",")

# App installate (nessuna interfaccia web: solo comandi di gestione e worker)
INSTALLED_APPS = [
    "django.contrib.contenttypes",
    # App progetto
    "reasoning",
]

# Database (SQLite per sviluppo): tiene il registro delle esecuzioni
DATABASES = {
    "default": {
        "ENGINE": "django.db.backends.sqlite3",
        "NAME": BASE_DIR / "db.sqlite3",
    }
}

# Localizzazione
LANGUAGE_CODE = "it-it"
TIME_ZONE = "Europe/Rome"
USE_I18N = True
USE_TZ = True

DEFAULT_AUTO_FIELD = "django.db.models.BigAutoField"

# ---- Logging ----
LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "plain": {"format": "%(asctime)s %(levelname)s %(name)s: %(message)s"},
    },
    "handlers": {
        "console": {"class": "logging.StreamHandler", "formatter": "plain"},
    },
    "root": {"handlers": ["console"], "level": "WARNING"},
    "loggers": {
        "reasoning": {
            "handlers": ["console"],
            "level": os.environ.get("DJANGO_LOG_LEVEL", "INFO"),
            "propagate": False,
        },
    },
}

# ---- Celery / Redis ----
CELERY_BROKER_URL = os.environ.get("CELERY_BROKER_URL", "redis://localhost:6379/0")
CELERY_RESULT_BACKEND = os.environ.get("CELERY_RESULT_BACKEND", "redis://localhost:6379/0")
CELERY_TASK_TRACK_STARTED = True
CELERY_TASK_TIME_LIMIT = 60 * 60 * 4  # 4 ore

# ---- Percorsi degli artefatti ----
PIPELINE_DATA_DIR = Path(os.environ.get("PIPELINE_DATA_DIR", BASE_DIR / "data"))
PIPELINE_WEIGHTS_DIR = Path(os.environ.get("PIPELINE_WEIGHTS_DIR", BASE_DIR / "models"))
PIPELINE_REPORTS_DIR = Path(os.environ.get("PIPELINE_REPORTS_DIR", BASE_DIR / "reports"))
PIPELINE_PARALLELISM = int(os.environ.get("PIPELINE_PARALLELISM", 1))
PIPELINE_TEMPLATE = os.environ.get("PIPELINE_TEMPLATE", "subtraction")

# ---- Pointer model (Appendice A: BERT large, Adam 5e-5, warm-up 10%, batch 20) ----
POINTER_ENCODER = os.environ.get("POINTER_ENCODER", "transformer")
POINTER_ENCODER_MODEL = os.environ.get("POINTER_ENCODER_MODEL", "bert-large-uncased")
POINTER_MAX_LENGTH = int(os.environ.get("POINTER_MAX_LENGTH", 512))
POINTER_LEARNING_RATE = float(os.environ.get("POINTER_LR", 5e-5))
POINTER_WARMUP_FRACTION = float(os.environ.get("POINTER_WARMUP", 0.10))
POINTER_BATCH_SIZE = int(os.environ.get("POINTER_BATCH_SIZE", 20))
POINTER_EPOCHS = int(os.environ.get("POINTER_EPOCHS", 30))
POINTER_PATIENCE = int(os.environ.get("POINTER_PATIENCE", 3))
POINTER_FINETUNE_ENCODER = os.environ.get("POINTER_FINETUNE_ENCODER", "1") == "1"
POINTER_SEEDS = [int(s) for s in os.environ.get("POINTER_SEEDS", "1,2,3").split(",") if s]

# ---- Reader single-hop ----
# READER_BACKEND: local (modello estrattivo in-process), http (servizio remoto) o mock
READER_BACKEND = os.environ.get("READER_BACKEND", "local")
READER_MODEL = os.environ.get(
    "READER_MODEL", "bert-large-uncased-whole-word-masking-finetuned-squad"
)
READER_ENDPOINT = os.environ.get("READER_ENDPOINT", "http://localhost:8080/answer")
READER_MAX_LENGTH = int(os.environ.get("READER_MAX_LENGTH", 512))
READER_TIMEOUT = float(os.environ.get("READER_TIMEOUT", 30))
READER_RETRIES = int(os.environ.get("READER_RETRIES", 3))

# Se vuoi forzare device: PIPELINE_DEVICE=cpu oppure cuda
PIPELINE_DEVICE = os.environ.get(
    "PIPELINE_DEVICE",
    "cuda" if os.environ.get("CUDA_VISIBLE_DEVICES") else "cpu"
)

# ---- Analisi linguistica (POS + dipendenze) e vettori statici ----
PARSER_ADAPTER = os.environ.get("PARSER_ADAPTER", "spacy")
PARSER_MODEL = os.environ.get("PARSER_MODEL", "en_core_web_lg")
