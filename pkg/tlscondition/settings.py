"""
Django settings for the tlscondition project.

The project has no web surface; Django provides configuration, logging and
the management-command CLI (see tlscond/management/commands).
"""

from pathlib import Path
import environ

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

# Initialize environment variables
env = environ.Env(
    DEBUG=(bool, False),
    TLSCOND_TOL_GAP=(float, 1e-12),
    TLSCOND_SEED=(int, 0),
    TLSCOND_SAMPLES=(int, 100),
    TLSCOND_SIZE_CAP_K=(int, 4_000_000),
    TLSCOND_FD_MAX_COLUMNS=(int, 5000),
    TLSCOND_FORMAT=(str, 'human'),
    TLSCOND_WORKERS=(int, 4),
    TLSCOND_LOG_FILE=(str, ''),
)

# Read environment variables from .env file
environ.Env.read_env(BASE_DIR / '.env')

SECRET_KEY = env('SECRET_KEY', default='tlscondition-no-web-surface')

DEBUG = env('DEBUG')

ALLOWED_HOSTS = []

# Application definition

INSTALLED_APPS = [
    'kernel',
    'tls',
    'conditioning',
    'bounds',
    'generators',
    'oracle',
    'report',
    'tlscond',
]

# No models anywhere; the dummy backend keeps Django from touching disk.
DATABASES = {}

USE_TZ = True

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

# Numerical defaults (each mirrors a CLI flag; flags win)
TLSCOND_TOL_GAP = env('TLSCOND_TOL_GAP')
TLSCOND_SEED = env('TLSCOND_SEED')
TLSCOND_SAMPLES = env('TLSCOND_SAMPLES')
TLSCOND_SIZE_CAP_K = env('TLSCOND_SIZE_CAP_K')
TLSCOND_FD_MAX_COLUMNS = env('TLSCOND_FD_MAX_COLUMNS')
TLSCOND_FORMAT = env('TLSCOND_FORMAT')
TLSCOND_WORKERS = env('TLSCOND_WORKERS')
TLSCOND_LOG_FILE = env('TLSCOND_LOG_FILE')

# Define color scheme for different log levels
LOG_COLORS = {
    'DEBUG': 'cyan',
    'INFO': 'green',
    'WARNING': 'yellow',
    'ERROR': 'red',
    'CRITICAL': 'red,bg_white',
}

LOG_LEVEL = 'DEBUG' if DEBUG else 'INFO'

# Results go to stdout; logs go to stderr (StreamHandler default).
LOG_HANDLERS = ['console', 'file'] if TLSCOND_LOG_FILE else ['console']

LOGGING = {
    'version': 1,
    'disable_existing_loggers': True,
    'formatters': {
        'colored': {
            '()': 'colorlog.ColoredFormatter',
            'format': '%(log_color)s%(levelname)-8s%(reset)s %(blue)s%(asctime)s%(reset)s %(white)s%(message)s%(reset)s',
            'log_colors': LOG_COLORS,
        },
        'verbose_colored': {
            '()': 'colorlog.ColoredFormatter',
            'format': '%(log_color)s%(levelname)-8s%(reset)s %(blue)s%(asctime)s%(reset)s %(purple)s%(name)s%(reset)s %(white)s%(message)s%(reset)s',
            'log_colors': LOG_COLORS,
        },
        'file': {
            'format': '%(levelname)s %(asctime)s %(name)s %(message)s',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'verbose_colored',
        },
        **({
            'file': {
                'class': 'logging.FileHandler',
                'filename': TLSCOND_LOG_FILE,
                'formatter': 'file',
            },
        } if TLSCOND_LOG_FILE else {}),
    },
    'loggers': {
        app: {
            'handlers': LOG_HANDLERS,
            'level': LOG_LEVEL,
            'propagate': False,
        }
        for app in INSTALLED_APPS
    },
    # Root logger - set to WARNING to minimize noise
    'root': {
        'handlers': ['console'],
        'level': 'WARNING',
    },
}
