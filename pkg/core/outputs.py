"""Escritura de resultados: JSON, trazas CSV y gráficos SVG."""
import logging
from pathlib import Path

import matplotlib

matplotlib.use('Agg')
# Ids de clip-path estables entre corridas.
matplotlib.rcParams['svg.hashsalt'] = 'rcp-lab'
import matplotlib.pyplot as plt  # noqa: E402
import pandas as pd  # noqa: E402
from rest_framework.renderers import JSONRenderer  # noqa: E402

logger = logging.getLogger(__name__)

FLOAT_FORMAT = '%.12g'
# Sin fecha en los metadatos del SVG: dos corridas iguales producen el mismo archivo.
SVG_METADATA = {'Date': None}


def render_json(document) -> bytes:
    return JSONRenderer().render(document, renderer_context={'indent': 2})


def write_json(path, document):
    path = Path(path)
    path.write_bytes(render_json(document) + b'\n')
    logger.info("Escrito %s", path)
    return path


def write_frame(path, frame: pd.DataFrame):
    path = Path(path)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
    logger.info("Escrito %s (%d filas)", path, len(frame))
    return path


def write_trace(path, trace):
    """CSV con columnas time, R.<enlace>, x.<ruta>, y.<enlace>, q.<enlace>."""
    return write_frame(path, trace.to_frame())


def measurements_frame(measurements) -> pd.DataFrame:
    return pd.DataFrame(
        [(m.eta, m.amplitude, m.period, m.converged) for m in measurements],
        columns=['eta', 'amplitude', 'period', 'converged'],
    )


def plot_trace(path, trace, kinds=('R', 'x')):
    frame = trace.to_frame()
    fig, ax = plt.subplots(figsize=(8, 4.5))
    for column in frame.columns[1:]:
        if column.split('.', 1)[0] in kinds:
            ax.plot(frame['time'], frame[column], label=column, linewidth=1)
    ax.set_xlabel('t')
    ax.set_ylabel('tasa')
    ax.legend(loc='best', fontsize='small')
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, format='svg', metadata=SVG_METADATA)
    plt.close(fig)
    logger.info("Escrito %s", path)
    return Path(path)


def plot_sweep(path, result):
    """amplitud² contra η, con la recta ajustada si existe."""
    frame = measurements_frame(result.measurements)
    fig, ax = plt.subplots(figsize=(6, 4.5))
    ax.plot(frame['eta'], frame['amplitude'] ** 2, 'o', label='medido')
    if result.fit is not None:
        etas = frame['eta'][frame['eta'] >= result.fit.eta_c_estimate]
        ax.plot(etas, result.fit.slope * etas + result.fit.intercept, '-', label='ajuste')
        ax.axvline(result.fit.eta_c_estimate, linestyle=':', color='grey')
    ax.axvline(result.prediction.eta_c, linestyle='--', color='black', label='η_c = π/(2α)')
    ax.set_xlabel('η')
    ax.set_ylabel('amplitud²')
    ax.legend(loc='best', fontsize='small')
    fig.tight_layout()
    fig.savefig(path, format='svg', metadata=SVG_METADATA)
    plt.close(fig)
    logger.info("Escrito %s", path)
    return Path(path)
