"""
Django settings for the clebsch-top project.
"""

from pathlib import Path
import os
from dotenv import load_dotenv

load_dotenv()

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent


SECRET_KEY = os.getenv('SECRET_KEY', 'django-insecure-dev-key-change-in-production')
DEBUG = os.getenv('DEBUG', 'True') == 'True'
ALLOWED_HOSTS = os.getenv('ALLOWED_HOSTS', 'localhost,127.0.0.1').split(',')


# Application definition
INSTALLED_APPS = [
    # Local apps
    'app.runs',
]

# No models anywhere; commands never touch a database.
DATABASES = {}

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

USE_TZ = True


# Numerical tolerances (override from the environment or .env)
CLEBSCH_TOL_REL = float(os.getenv('CLEBSCH_TOL_REL', '1e-12'))
CLEBSCH_BLOWUP_CAP = float(os.getenv('CLEBSCH_BLOWUP_CAP', '1e12'))
CLEBSCH_QUAD_TOL = float(os.getenv('CLEBSCH_QUAD_TOL', '1e-10'))
CLEBSCH_QUAD_LIMIT = int(os.getenv('CLEBSCH_QUAD_LIMIT', '200'))
CLEBSCH_DEGENERACY_TOL = float(os.getenv('CLEBSCH_DEGENERACY_TOL', '1e-10'))
CLEBSCH_LEAF_TOL = float(os.getenv('CLEBSCH_LEAF_TOL', '1e-6'))
CLEBSCH_TURNING_GUARD = float(os.getenv('CLEBSCH_TURNING_GUARD', '5e-2'))

# Run presets and the versioned config schema
CLEBSCH_CONFIG_DIR = Path(os.getenv('CLEBSCH_CONFIG_DIR', BASE_DIR / 'configs'))
CLEBSCH_SCHEMA_PATH = BASE_DIR / 'app' / 'runs' / 'schema' / 'run_config.v1.json'


LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'plain': {
            'format': '%(levelname)s %(name)s: %(message)s',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'plain',
        },
    },
    'loggers': {
        'app': {
            'handlers': ['console'],
            'level': os.getenv('CLEBSCH_LOG_LEVEL', 'WARNING'),
        },
    },
}
