"""
Django settings for the free_probability_lab project.

The computational code lives in the ``freeprob`` app; this module only wires
the project together and carries the numeric defaults under ``FREEPROB``.
"""

from pathlib import Path
import os

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

# Only the admin pages for experiment records need this.
SECRET_KEY = os.getenv('DJANGO_SECRET_KEY', 'django-insecure-freeprob-local-only')

DEBUG = os.getenv('DJANGO_DEBUG', '0') == '1'

ALLOWED_HOSTS = ['localhost', '127.0.0.1']


# Application definition

INSTALLED_APPS = [
    'django.contrib.admin',
    'django.contrib.auth',
    'django.contrib.contenttypes',
    'django.contrib.sessions',
    'django.contrib.messages',
    'django.contrib.staticfiles',
    'freeprob',
]

MIDDLEWARE = [
    'django.middleware.security.SecurityMiddleware',
    'django.contrib.sessions.middleware.SessionMiddleware',
    'django.middleware.common.CommonMiddleware',
    'django.middleware.csrf.CsrfViewMiddleware',
    'django.contrib.auth.middleware.AuthenticationMiddleware',
    'django.contrib.messages.middleware.MessageMiddleware',
]

ROOT_URLCONF = 'free_probability_lab.urls'

TEMPLATES = [
    {
        'BACKEND': 'django.template.backends.django.DjangoTemplates',
        'DIRS': [],
        'APP_DIRS': True,
        'OPTIONS': {
            'context_processors': [
                'django.template.context_processors.request',
                'django.contrib.auth.context_processors.auth',
                'django.contrib.messages.context_processors.messages',
            ],
        },
    },
]


# Database (experiment records only)

DATABASES = {
    'default': {
        'ENGINE': 'django.db.backends.sqlite3',
        'NAME': os.getenv('FREEPROB_DB', str(BASE_DIR / 'db.sqlite3')),
    }
}

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = False

USE_TZ = True

STATIC_URL = '/static/'

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'


# Logging

FREEPROB_LOG_LEVEL = os.getenv('FREEPROB_LOG_LEVEL', 'INFO').upper()

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{levelname} {asctime} {name} {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'verbose',
        },
    },
    'loggers': {
        'freeprob': {
            'handlers': ['console'],
            'level': FREEPROB_LOG_LEVEL,
            'propagate': False,
        },
    },
}


# Numerics

FREEPROB = {
    'TOLERANCE': 1e-9,
    'NC_MAX_SIZE': 14,
    'NC2_MAX_SIZE': 16,
    'ORDER_CAP_DEFAULT': 6,
    'ORDER_CAP_MAX': 8,
    'WORD_LIMIT': 10 ** 6,
    'PREDICTOR_RESOLUTION': 64,
    'PREDICTOR_MAX_ORDER': 12,
    'REFINEMENT_TOLERANCE': 1e-3,
    'PASS_TOLERANCE': 1e-8,
    'FAIL_THRESHOLD': 1e-3,
    'ORACLE_RANDOM_WORDS': 200,
    'HISTOGRAM_BINS': 60,
    'THREADS': int(os.getenv('FREEPROB_THREADS', '1')),
}
