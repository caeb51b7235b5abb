"""
Configuración de entorno de smb-bayes
"""
import os

from dotenv import load_dotenv

load_dotenv()

# Entorno / logging (los usa utils.logging_utils)
ENV = os.getenv("ENV", "development").lower()
LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO").upper()
LOG_FILE = os.getenv("LOG_FILE", "smb_bayes_logs.txt")

# Pool de hilos: --threads tiene prioridad; si no, SMBBAYES_THREADS; si no, núcleos disponibles.
THREADS_ENV_VAR = "SMBBAYES_THREADS"

# Directorio de salida por defecto cuando ni la config ni --out lo indican
DEFAULT_OUTPUT_DIR = os.getenv("SMBBAYES_OUT", "smb_runs")

# Preset empaquetado con los datos de la planta de referencia
DEFAULT_PRESET = "klatt-reference"


def default_thread_count() -> int:
    """Hilos por defecto: SMBBAYES_THREADS o el número de núcleos"""
    raw = os.getenv(THREADS_ENV_VAR, "").strip()
    if raw:
        try:
            value = int(raw)
            if value > 0:
                return value
        except ValueError:
            pass
    return os.cpu_count() or 1
