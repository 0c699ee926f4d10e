"""Configura Django para ejecutar la suite con pytest, como lo hace `manage.py test`."""
import os

import django

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'rcp_lab.settings')
django.setup()

from django.test.utils import setup_test_environment  # noqa: E402

setup_test_environment()
