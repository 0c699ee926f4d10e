from django.conf import settings
from django.core.exceptions import ImproperlyConfigured

# Valores usados cuando settings.RCP_TOOLKIT no define la clave.
DEFAULTS = {
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


def toolkit_setting(name):
    """Devuelve un parámetro numérico de RCP_TOOLKIT (o su valor por defecto)."""
    if name not in DEFAULTS:
        raise KeyError(f"Parámetro desconocido en RCP_TOOLKIT: {name}")
    try:
        overrides = getattr(settings, 'RCP_TOOLKIT', {})
    except ImproperlyConfigured:
        # Procesos del barrido sin settings cargados.
        overrides = {}
    return overrides.get(name, DEFAULTS[name])


def resolved_settings():
    """Todos los parámetros efectivos, para el eco del escenario resuelto."""
    return {name: toolkit_setting(name) for name in DEFAULTS}
