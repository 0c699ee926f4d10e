"""Barridos en η sobre el modelo de un enlace: medición de ciclos límite, umbral η_c y ley de amplitud."""
from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .conf import toolkit_setting
from .dde import SimConfig, SimMode, SimTrace, run
from .exceptions import BracketError, InsufficientWindowError
from .network import Link, Network, Route
from .stability import HopfPrediction, hopf_prediction

logger = logging.getLogger(__name__)

# Re λ'(η) en el umbral para u̇(t) = −(ηα/τ)·u(t − τ): (π/2)/(1 + π²/4).
CRITICAL_GROWTH = (math.pi / 2) / (1 + math.pi ** 2 / 4)
DEFAULT_GRID_FACTORS = (0.9, 0.95, 0.98, 1.005, 1.01, 1.02, 1.03, 1.04, 1.05)
MIN_CROSSINGS = 5
FIT_WINDOW = 0.05
MONOTONE_NOISE = 0.02


def single_link_network(alpha, tau, capacity=1.0, routes=1, forward_fraction=0.5, link_id='l'):
    """Un enlace con `routes` rutas de RTT τ; cada una reparte τ en ida y vuelta."""
    link = Link(id=link_id, capacity=float(capacity), alpha=float(alpha))
    members = tuple(
        Route.from_forward_delays(f"r{i + 1}", (link_id,), (forward_fraction * tau,), tau)
        for i in range(routes)
    )
    return Network(links=(link,), routes=members)


def _single_link(network: Network):
    if len(network.links) != 1 or len({route.rtt for route in network.routes}) != 1:
        raise ValueError("Se necesita un enlace con un único retardo τ común a todas sus rutas")
    link = network.links[0]
    tau = network.routes[0].rtt
    return link, tau, link.capacity / len(network.routes)


def predicted(network: Network) -> HopfPrediction:
    link, tau, rbar = _single_link(network)
    return hopf_prediction(link.alpha, tau, rbar)


# --- Medición del ciclo ---

@dataclass(frozen=True)
class CycleMeasurement:
    eta: float
    amplitude: float
    period: float | None
    converged: bool
    decay_ratio: float | None = None
    crossings: int = 0


def _upward_crossings(times, series, level):
    below = series[:-1] < level
    above = series[1:] >= level
    idx = np.flatnonzero(below & above)
    # Interpolación lineal del instante de cruce.
    left, right = series[idx], series[idx + 1]
    return times[idx] + (level - left) / (right - left) * (times[idx + 1] - times[idx])


def measure_cycle(trace: SimTrace, transient_fraction: float | None = None, link: str | None = None,
                  reference: float | None = None, floor: float | None = None,
                  decay_tolerance: float | None = None) -> CycleMeasurement:
    """Amplitud (max − min)/2 y periodo medio entre cruces ascendentes de la media, tras el transitorio.

    Se considera convergida si la amplitud cae bajo floor·R̄ o si la mitad final de la
    ventana oscila menos que la inicial (envolvente que decae).
    """
    if transient_fraction is None:
        transient_fraction = toolkit_setting('TRANSIENT_FRACTION')
    if not 0 < transient_fraction < 1:
        raise ValueError(f"transient_fraction debe estar en (0, 1): {transient_fraction}")
    if floor is None:
        floor = toolkit_setting('CYCLE_AMPLITUDE_FLOOR')
    if decay_tolerance is None:
        decay_tolerance = toolkit_setting('CYCLE_DECAY_TOLERANCE')

    series = trace.link_series(link) if link is not None else trace.R[:, 0]
    start = int(len(series) * transient_fraction)
    times, window = trace.times[start:], series[start:]
    if len(window) < 4:
        raise InsufficientWindowError("La ventana post-transitorio tiene menos de 4 muestras")
    if reference is None:
        reference = float(np.mean(np.abs(window)))

    amplitude = float(window.max() - window.min()) / 2
    half = len(window) // 2
    early = float(window[:half].max() - window[:half].min()) / 2
    late = float(window[half:].max() - window[half:].min()) / 2
    decay_ratio = late / early if early > 0 else None
    converged = amplitude < floor * reference or (decay_ratio is not None and decay_ratio < 1 - decay_tolerance)

    crossings = _upward_crossings(times, window, float(window.mean()))
    period = float(np.mean(np.diff(crossings))) if len(crossings) >= 2 else None
    if not converged:
        if len(crossings) < MIN_CROSSINGS:
            raise InsufficientWindowError(
                f"Solo {len(crossings)} cruces en la ventana; se necesitan {MIN_CROSSINGS}"
            )
        if times[-1] - times[0] < 20 * period:
            logger.warning("Ventana de %.3g menor que 20 periodos de %.3g", times[-1] - times[0], period)

    eta = trace.config.eta if trace.config is not None else math.nan
    return CycleMeasurement(eta=eta, amplitude=amplitude, period=period, converged=converged,
                            decay_ratio=decay_ratio, crossings=len(crossings))


# --- Corridas de un punto ---

def hopf_horizon(alpha, tau, eta, eta_c):
    """2·max(HOPF_MIN_PERIODS periodos, 10/ρ) con ρ = 0.4531·α|η − η_c|/τ, acotado."""
    cap = toolkit_setting('HOPF_MAX_HORIZON_DELAYS') * tau
    growth = CRITICAL_GROWTH * alpha * abs(eta - eta_c) / tau
    periods = toolkit_setting('HOPF_MIN_PERIODS') * 4 * tau
    if growth == 0:
        return cap
    return min(2 * max(periods, 10 / growth), cap)


@dataclass(frozen=True)
class SweepRun:
    """Una corrida en modo de un enlace con R(0⁻) = R̄(1 + perturbación). Se envía a los procesos del barrido."""
    network: Network
    eta: float
    perturbation: float
    horizon: float
    step: float
    stride: int
    transient_fraction: float
    floor: float
    decay_tolerance: float

    def measure(self) -> CycleMeasurement:
        link, _, rbar = _single_link(self.network)
        config = SimConfig(
            step=self.step,
            horizon=self.horizon,
            eta=self.eta,
            initial_rates={link.id: rbar * (1 + self.perturbation)},
            record_stride=self.stride,
            mode=SimMode.SINGLE_LINK,
        )
        trace = run(self.network, {}, config)
        return measure_cycle(trace, self.transient_fraction, reference=rbar,
                             floor=self.floor, decay_tolerance=self.decay_tolerance)


def _measure(sweep_run):
    return sweep_run.measure()


def make_run(network, eta, perturbation=0.01, horizon=None, step=None, transient_fraction=None):
    link, tau, _ = _single_link(network)
    if step is None:
        step = tau / toolkit_setting('HOPF_STEPS_PER_DELAY')
    if horizon is None:
        horizon = hopf_horizon(link.alpha, tau, eta, math.pi / (2 * link.alpha))
    return SweepRun(
        network=network,
        eta=float(eta),
        perturbation=float(perturbation),
        horizon=float(horizon),
        step=float(step),
        # Unas 25 muestras por τ.
        stride=max(1, int(round(tau / step / 25))),
        transient_fraction=transient_fraction or toolkit_setting('TRANSIENT_FRACTION'),
        floor=toolkit_setting('CYCLE_AMPLITUDE_FLOOR'),
        decay_tolerance=toolkit_setting('CYCLE_DECAY_TOLERANCE'),
    )


def measure_all(runs, workers=None):
    """Mide las corridas en paralelo; el orden del resultado es el de `runs`."""
    if workers is None:
        workers = toolkit_setting('SWEEP_WORKERS') or os.cpu_count() or 1
    workers = min(workers, len(runs))
    if workers <= 1:
        return [sweep_run.measure() for sweep_run in runs]
    with ProcessPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(_measure, runs))


# --- Umbral ---

def estimate_eta_c(network: Network, bracket=None, perturbation=0.01, resolution=None, horizon=None,
                   step=None) -> float:
    """η_c por bisección sobre el predicado `converged` de measure_cycle."""
    link, tau, _ = _single_link(network)
    if resolution is None:
        resolution = toolkit_setting('ETA_C_RESOLUTION')
    if bracket is None:
        centre = math.pi / (2 * link.alpha)
        bracket = (0.8 * centre, 1.25 * centre)
    if horizon is None:
        horizon = 300 * tau
    lo, hi = (float(value) for value in bracket)

    def converges(eta):
        measurement = make_run(network, eta, perturbation, horizon=horizon, step=step).measure()
        logger.info("Bisección η = %.6g: %s", eta, 'converge' if measurement.converged else 'oscila')
        return measurement.converged

    if not converges(lo) or converges(hi):
        raise BracketError(f"El intervalo [{lo:g}, {hi:g}] no separa convergencia de oscilación")
    while hi - lo > resolution * lo:
        mid = 0.5 * (lo + hi)
        if converges(mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# --- Histéresis ---

@dataclass(frozen=True)
class HysteresisResult:
    eta: float
    perturbations: tuple
    amplitudes: tuple
    spread: float
    ok: bool


def hysteresis_check(network: Network, eta: float, perturbations=(0.001, 0.05), tolerance=0.05,
                     workers=None) -> HysteresisResult:
    """Amplitudes desde perturbaciones pequeña y grande; sin rama subcrítica deben coincidir."""
    runs = [make_run(network, eta, perturbation) for perturbation in perturbations]
    amplitudes = tuple(m.amplitude for m in measure_all(runs, workers))
    top = max(amplitudes)
    spread = (top - min(amplitudes)) / top if top > 0 else 0.0
    return HysteresisResult(eta=float(eta), perturbations=tuple(perturbations), amplitudes=amplitudes,
                            spread=spread, ok=spread <= tolerance)


# --- Barrido y ajuste ---

@dataclass(frozen=True)
class ScalingFit:
    eta_c_estimate: float
    slope: float
    intercept: float
    r_squared: float
    loglog_slope: float | None
    prefactor_ratio: float
    points: int


@dataclass(frozen=True)
class SweepResult:
    measurements: tuple
    fit: ScalingFit | None
    prediction: HopfPrediction
    monotone: bool
    supercritical: bool | None
    hysteresis: HysteresisResult | None = None


def default_grid(network: Network):
    eta_c = predicted(network).eta_c
    return [factor * eta_c for factor in DEFAULT_GRID_FACTORS]


def fit_amplitude_law(measurements, eta_c_guess, prediction: HopfPrediction) -> ScalingFit | None:
    """Ajuste amplitud² = a·η + b (η_c = −b/a) sobre los puntos oscilantes con 0 < η − η_c ≤ 0.05·η_c."""
    oscillating = [m for m in measurements if not m.converged]
    eta_c, selected, coeffs = eta_c_guess, None, None
    for _ in range(5):
        chosen = tuple(m for m in oscillating if 0 < m.eta - eta_c <= FIT_WINDOW * eta_c)
        if len(chosen) < 2:
            logger.warning("Ajuste descartado: %d puntos en la ventana débilmente no lineal", len(chosen))
            return None
        if chosen == selected:
            break
        selected = chosen
        etas = np.array([m.eta for m in selected])
        squares = np.array([m.amplitude for m in selected]) ** 2
        coeffs = np.polyfit(etas, squares, 1)
        if coeffs[0] <= 0:
            logger.warning("Pendiente no positiva en el ajuste de amplitud²: %.3g", coeffs[0])
            return None
        eta_c = -coeffs[1] / coeffs[0]

    etas = np.array([m.eta for m in selected])
    amplitudes = np.array([m.amplitude for m in selected])
    squares = amplitudes ** 2
    residual = squares - np.polyval(coeffs, etas)
    total = np.sum((squares - squares.mean()) ** 2)
    r_squared = 1 - float(np.sum(residual ** 2)) / float(total) if total > 0 else 1.0

    distance = etas - eta_c
    loglog = None
    if np.all(distance > 0) and len(selected) >= 2:
        loglog = float(np.polyfit(np.log(distance), np.log(amplitudes), 1)[0])
    return ScalingFit(
        eta_c_estimate=float(eta_c),
        slope=float(coeffs[0]),
        intercept=float(coeffs[1]),
        r_squared=r_squared,
        loglog_slope=loglog,
        prefactor_ratio=math.sqrt(coeffs[0]) / prediction.amplitude_coefficient,
        points=len(selected),
    )


def _monotone(measurements):
    amplitudes = [m.amplitude for m in sorted(measurements, key=lambda m: m.eta) if not m.converged]
    return all(b >= a * (1 - MONOTONE_NOISE) for a, b in zip(amplitudes, amplitudes[1:]))


def sweep_and_fit(network: Network, etas=None, perturbation=0.01, workers=None, transient_fraction=None,
                  check_hysteresis=True, hysteresis_perturbations=(0.001, 0.05)) -> SweepResult:
    """Corre la grilla de η en paralelo, ajusta la ley de raíz cuadrada y evalúa la supercriticidad."""
    prediction = predicted(network)
    etas = sorted(float(eta) for eta in (etas or default_grid(network)))
    logger.info("Barrido de %d valores de η (η_c previsto %.6g)", len(etas), prediction.eta_c)
    runs = [make_run(network, eta, perturbation, transient_fraction=transient_fraction) for eta in etas]
    measurements = tuple(measure_all(runs, workers))

    monotone = _monotone(measurements)
    if not monotone:
        logger.warning("La amplitud no crece de forma monótona con η")
    fit = fit_amplitude_law(measurements, prediction.eta_c, prediction)

    supercritical, hysteresis = None, None
    if fit is not None:
        eta_c = fit.eta_c_estimate
        below_ok = all(m.converged for m in measurements if m.eta < eta_c)
        above_ok = all(
            not m.converged and math.isfinite(m.amplitude)
            for m in measurements if eta_c < m.eta <= (1 + FIT_WINDOW) * eta_c
        )
        if check_hysteresis:
            hysteresis = hysteresis_check(network, 1.02 * eta_c, hysteresis_perturbations, workers=workers)
        supercritical = below_ok and above_ok and (hysteresis is None or hysteresis.ok)
    return SweepResult(measurements=measurements, fit=fit, prediction=prediction, monotone=monotone,
                       supercritical=supercritical, hysteresis=hysteresis)
