"""
WSGI config for rcp_lab project.

Expone la API de escenarios (equilibrio, estabilidad) como ``application``.
"""

import os

from django.core.wsgi import get_wsgi_application

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'rcp_lab.settings')

application = get_wsgi_application()
