"""
Django settings for rcp_lab project.

Proyecto para analizar el modelo fluido de RCP (max-min) con buffers pequeños:
equilibrios, condiciones de estabilidad, simulación con retardos y barridos de Hopf.

For more information on this file, see
https://docs.djangoproject.com/en/5.1/topics/settings/
"""

import os
from pathlib import Path

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent


# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = os.environ.get('DJANGO_SECRET_KEY', 'django-insecure-rcp-lab-solo-para-desarrollo')

# SECURITY WARNING: don't run with debug turned on in production!
DEBUG = os.environ.get('DJANGO_DEBUG', '1') == '1'

ALLOWED_HOSTS = os.environ.get('DJANGO_ALLOWED_HOSTS', 'localhost,127.0.0.1').split(',')


# Application definition

INSTALLED_APPS = [
    'django.contrib.contenttypes',
    'django.contrib.auth',
    'rest_framework',
    'drf_spectacular',
    'core',
]

MIDDLEWARE = [
    'django.middleware.security.SecurityMiddleware',
    'django.middleware.common.CommonMiddleware',
]

ROOT_URLCONF = 'rcp_lab.urls'

WSGI_APPLICATION = 'rcp_lab.wsgi.application'


# Database
# No hay modelos persistentes: los escenarios viven en archivos JSON.
DATABASES = {
    'default': {
        'ENGINE': 'django.db.backends.sqlite3',
        'NAME': BASE_DIR / 'db.sqlite3',
    }
}


# Internationalization
LANGUAGE_CODE = 'es'

TIME_ZONE = 'UTC'

USE_I18N = True

USE_TZ = True

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'


# --- CONFIGURACIÓN DE DJANGO REST FRAMEWORK ---
REST_FRAMEWORK = {
    'DEFAULT_SCHEMA_CLASS': 'drf_spectacular.openapi.AutoSchema',
    # La API solo calcula sobre el documento recibido, no guarda nada.
    'DEFAULT_AUTHENTICATION_CLASSES': [],
    'DEFAULT_PERMISSION_CLASSES': [
        'rest_framework.permissions.AllowAny',
    ],
    'UNAUTHENTICATED_USER': None,
}

SPECTACULAR_SETTINGS = {
    'TITLE': 'API del laboratorio RCP',
    'DESCRIPTION': 'Equilibrio max-min, condiciones de estabilidad y parámetros recomendados para escenarios RCP.',
    'VERSION': '1.0.0',
    'SERVE_INCLUDE_SCHEMA': False,
}


# --- CONFIGURACIÓN DEL MODELO FLUIDO ---
# Valores por defecto numéricos; cada corrida los deja escritos en resolved_scenario.json.
RCP_TOOLKIT = {
    'RTT_TOLERANCE': 1e-9,
    'WATER_FILL_TOLERANCE': 1e-12,
    'BISECTION_MAX_ITERATIONS': 200,
    'STEP_DELAY_RATIO': 20,
    'DEFAULT_STEP_DELAY_RATIO': 50,
    'DEFAULT_HORIZON_RTTS': 100,
    'DIVERGENCE_FACTOR': 1e6,
    'CONVERGENCE_TOLERANCE': 1e-6,
    'TRANSIENT_FRACTION': 0.5,
    'CYCLE_AMPLITUDE_FLOOR': 1e-6,
    'CYCLE_DECAY_TOLERANCE': 1e-3,
    'ETA_C_RESOLUTION': 1e-3,
    'HOPF_STEPS_PER_DELAY': 50,
    'HOPF_MIN_PERIODS': 40,
    'HOPF_MAX_HORIZON_DELAYS': 3000,
    'SWEEP_WORKERS': None,
}


# --- LOGGING ---
LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'simple': {
            'format': '{asctime} {levelname} {name}: {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'simple',
        },
    },
    'loggers': {
        'core': {
            'handlers': ['console'],
            'level': os.environ.get('RCP_LOG_LEVEL', 'INFO'),
            'propagate': False,
        },
    },
}
