"""Integración del modelo fluido RCP con retardos por salto (RK4 de paso fijo sobre un historial)."""
from __future__ import annotations

import logging
import math
from collections.abc import Mapping
from dataclasses import dataclass, field, replace

import numpy as np
import pandas as pd
from django.db import models

from .conf import toolkit_setting
from .equilibrium import rate_balance
from .exceptions import HistoryUnderrunError, QueueDomainError, SimulationDiverged, SimulationError
from .network import Network, Violation
from .queues import ZERO_QUEUE, QueueFunction

logger = logging.getLogger(__name__)

# Coeficientes de etapa de RK4 clásico.
RK4_NODES = (0.0, 0.5, 0.5, 1.0)
NEGATIVE_ROUNDOFF = 1e-12


class SimMode(models.TextChoices):
    NETWORK = 'network', 'Red completa'
    SINGLE_LINK = 'single_link_beta0', 'Un enlace, un retardo, β = 0'


# --- Configuración ---

@dataclass(frozen=True)
class SimConfig:
    """Parámetros de una corrida. `step` y `horizon` en None se resuelven contra la red."""
    step: float | None = None
    horizon: float | None = None
    eta: float = 1.0
    initial_rates: Mapping | None = None
    record_stride: int = 1
    mode: str = SimMode.NETWORK
    divergence_factor: float | None = field(default_factory=lambda: toolkit_setting('DIVERGENCE_FACTOR'))

    def resolve(self, network: Network) -> SimConfig:
        """Copia con paso, horizonte y tasas iniciales explícitos."""
        step = self.step
        if step is None:
            shortest = _dynamic_delay(network, self.mode)
            if shortest is None:
                shortest = min(network.gain_rtt(link_id) for link_id in network.link_ids)
            step = shortest / toolkit_setting('DEFAULT_STEP_DELAY_RATIO')
        horizon = self.horizon
        if horizon is None:
            longest = network.max_rtt() or max(network.gain_rtt(link_id) for link_id in network.link_ids)
            horizon = toolkit_setting('DEFAULT_HORIZON_RTTS') * longest
        rates = {link.id: float(link.capacity) for link in network.links}
        rates.update({link_id: float(rate) for link_id, rate in (self.initial_rates or {}).items()})
        return replace(self, step=float(step), horizon=float(horizon), initial_rates=rates)


def _dynamic_delay(network, mode):
    """Retardo que limita el paso: τ común en el modo de un enlace, el menor retardo positivo si no."""
    if mode == SimMode.SINGLE_LINK and network.routes:
        return network.routes[0].rtt or None
    return network.min_positive_delay()


def check_config(network: Network, config: SimConfig) -> list:
    """Violaciones de la configuración de simulación (lista vacía si es usable)."""
    found = []
    shortest = _dynamic_delay(network, config.mode)
    if config.step is not None:
        if not config.step > 0:
            found.append(Violation('step', f"El paso h debe ser > 0: {config.step:g}"))
        elif shortest is not None:
            limit = shortest / toolkit_setting('STEP_DELAY_RATIO')
            if config.step > limit * (1 + 1e-12):
                found.append(Violation('step', f"El paso h = {config.step:g} supera el retardo mínimo / "
                                               f"{toolkit_setting('STEP_DELAY_RATIO')} = {limit:g}"))
    if config.horizon is not None and not config.horizon > 0:
        found.append(Violation('horizon', f"El horizonte T debe ser > 0: {config.horizon:g}"))
    if not config.eta > 0:
        found.append(Violation('eta', f"η debe ser > 0: {config.eta:g}"))
    if not (isinstance(config.record_stride, int) and config.record_stride >= 1):
        found.append(Violation('record_stride', f"record_stride debe ser un entero ≥ 1: {config.record_stride}"))
    if config.divergence_factor is not None and not config.divergence_factor > 0:
        found.append(Violation('divergence_factor', "divergence_factor debe ser > 0 o null"))
    for link_id, rate in (config.initial_rates or {}).items():
        if link_id not in network.link_index:
            found.append(Violation('initial_rates', f"Tasa inicial para un enlace desconocido: {link_id}",
                                   link=link_id))
        elif not (math.isfinite(rate) and rate >= 0):
            found.append(Violation('initial_rates', f"R_l(0) debe ser finita y ≥ 0 en {link_id}", link=link_id))
    if config.mode not in SimMode.values:
        found.append(Violation('mode', f"Modo desconocido: {config.mode}"))
    elif config.mode == SimMode.SINGLE_LINK:
        if len(network.links) != 1:
            found.append(Violation('mode', "single_link_beta0 necesita exactamente un enlace"))
        if len({route.rtt for route in network.routes}) != 1 or network.max_rtt() <= 0:
            found.append(Violation('mode', "single_link_beta0 necesita un único τ > 0 común a todas las rutas"))
        if any(link.beta > 0 for link in network.links):
            found.append(Violation('mode', "single_link_beta0 necesita β = 0: el término de cola no se integra"))
    return found


# --- Historial ---

class History:
    """Buffer circular de R_l y Ṙ_l en la grilla t_n = n·h, con interpolación cúbica de Hermite.

    Para t ≤ 0 el historial es constante e igual a R(0⁻). Las posiciones se dan en
    unidades de paso (t/h). La pendiente de un punto vale 0 hasta que se fija con
    `set_latest_slope`.
    """

    def __init__(self, initial, step, max_lag):
        self.initial = np.atleast_1d(np.asarray(initial, dtype=float)).copy()
        self.step = float(step)
        self.depth = int(math.ceil(max_lag / self.step)) + 3
        self._buffer = np.empty((self.depth, self.initial.size))
        self._slopes = np.zeros((self.depth, self.initial.size))
        self.count = 0
        self.append(self.initial)

    def append(self, values):
        row = self.count % self.depth
        self._buffer[row] = values
        self._slopes[row] = 0.0
        self.count += 1

    def set_latest_slope(self, slopes):
        """Ṙ en el último punto guardado, por unidad de tiempo."""
        self._slopes[(self.count - 1) % self.depth] = slopes

    @property
    def latest(self):
        return self._buffer[(self.count - 1) % self.depth]

    def _check(self, oldest):
        if oldest < self.count - self.depth:
            raise HistoryUnderrunError(
                f"Posición {oldest} fuera del historial (quedan {self.depth} de {self.count} puntos)"
            )

    def _hermite(self, lo, u, columns):
        below, above = lo % self.depth, (lo + 1) % self.depth
        u2 = u * u
        u3 = u2 * u
        return ((2 * u3 - 3 * u2 + 1) * self._buffer[below, columns]
                + (3 * u2 - 2 * u3) * self._buffer[above, columns]
                + self.step * ((u3 - 2 * u2 + u) * self._slopes[below, columns]
                               + (u3 - u2) * self._slopes[above, columns]))

    def lookup(self, positions, columns):
        """Valores interpolados en `positions` (arreglo) para las columnas dadas."""
        positions = np.maximum(np.asarray(positions, dtype=float), 0.0)
        columns = np.asarray(columns)
        if self.count == 1:
            return self._buffer[0, columns].copy()
        lo = np.minimum(np.floor(positions).astype(np.int64), self.count - 2)
        self._check(int(lo.min()) if lo.size else self.count)
        # R ≥ 0: se recorta el sobretiro de la cúbica.
        return np.maximum(self._hermite(lo, positions - lo, columns), 0.0)

    def value(self, position, column=0):
        """Versión escalar de `lookup`."""
        if position <= 0 or self.count == 1:
            return float(self._buffer[0, column]) if position > 0 else float(self.initial[column])
        lo = min(int(position), self.count - 2)
        self._check(lo)
        return max(float(self._hermite(lo, position - lo, column)), 0.0)

    def at(self, time, column=0):
        return self.value(time / self.step, column)


# --- Ecuaciones del modelo ---

def source_rate(network: Network, route_id: str, history: History, time: float) -> float:
    """x_r(t) = min_{l∈r} R_l(t − τ_lr)."""
    route = network.route(route_id)
    return min(
        history.at(time - backward, network.link_index[link_id])
        for link_id, _, backward in route.hops()
    )


def aggregate_flow(network: Network, link_id: str, history: History, time: float) -> float:
    """y_l(t) = Σ_{r: l∈r} x_r(t − τ_rl)."""
    return math.fsum(
        source_rate(network, route.id, history, time - route.forward_delay(link_id))
        for route in network.routes_through(link_id)
    )


def rate_derivative(link, queue: QueueFunction, rtt: float, y: float, rate: float, eta: float = 1.0) -> float:
    """Ṙ_l = η·R_l·g(y_l), con la proyección Ṙ_l = 0 cuando g < 0 y R_l ≤ 0."""
    balance = rate_balance(link, queue, rtt, y)
    if balance < 0 and rate <= 0:
        return 0.0
    return eta * rate * balance


class _Terms:
    """Términos min_{j∈r} R_j(t − lag) agrupados; cada grupo es un mínimo."""

    def __init__(self, columns, lags, starts, step):
        self.columns = np.asarray(columns, dtype=np.int64)
        lags = np.asarray(lags, dtype=float)
        self.starts = np.asarray(starts, dtype=np.int64)
        self.zero = lags == 0
        self.delayed = ~self.zero
        self.delayed_columns = self.columns[self.delayed]
        self.delayed_steps = lags[self.delayed] / step
        self.zero_columns = self.columns[self.zero]
        self.max_lag = float(lags.max()) if lags.size else 0.0

    def minima(self, history, position, state):
        values = np.empty(self.columns.size)
        values[self.zero] = state[self.zero_columns]
        if self.delayed_columns.size:
            values[self.delayed] = history.lookup(position - self.delayed_steps, self.delayed_columns)
        return np.minimum.reduceat(values, self.starts)


class _NetworkModel:
    """Lado derecho vectorizado de la red completa."""

    def __init__(self, network: Network, queues: Mapping[str, QueueFunction], step: float, eta: float):
        index = network.link_index
        source_cols, source_lags, source_starts = [], [], []
        flow_cols, flow_lags, flow_starts, flow_links = [], [], [], []
        for route in network.routes:
            source_starts.append(len(source_cols))
            for link_id, _, backward in route.hops():
                source_cols.append(index[link_id])
                source_lags.append(backward)
            for link_id, forward, _ in route.hops():
                flow_starts.append(len(flow_cols))
                flow_links.append(index[link_id])
                for other, _, backward in route.hops():
                    flow_cols.append(index[other])
                    flow_lags.append(forward + backward)
        self.source = _Terms(source_cols, source_lags, source_starts, step)
        self.flow = _Terms(flow_cols, flow_lags, flow_starts, step)
        self.flow_links = np.asarray(flow_links, dtype=np.int64)
        self.size = len(network.links)
        self.max_lag = max(self.source.max_lag, self.flow.max_lag)

        rtts = np.array([network.gain_rtt(link.id) for link in network.links])
        self.capacity = np.array([link.capacity for link in network.links], dtype=float)
        self.gain = np.array([link.alpha for link in network.links]) / (rtts * self.capacity)
        self.eta = eta
        self.queues = [queues.get(link.id, ZERO_QUEUE) for link in network.links]
        self.queued = [
            (i, self.queues[i], link.beta / (rtts[i] ** 2 * link.capacity))
            for i, link in enumerate(network.links)
            if link.beta > 0 and not self.queues[i].is_zero
        ]

    def flows(self, history, position, state):
        minima = self.flow.minima(history, position, state)
        return np.bincount(self.flow_links, weights=minima, minlength=self.size)

    def rates(self, history, position, state):
        return self.source.minima(history, position, state)

    def derivative(self, state, y):
        balance = self.gain * (self.capacity - y)
        for i, queue, weight in self.queued:
            balance[i] -= weight * queue.value(y[i])
        out = self.eta * state * balance
        out[(balance < 0) & (state <= 0)] = 0.0
        return out

    def queue_lengths(self, y):
        out = np.zeros(self.size)
        for i, queue in enumerate(self.queues):
            if queue.is_zero:
                continue
            try:
                out[i] = queue.value(y[i])
            except QueueDomainError:
                out[i] = math.inf
        return out


# --- Traza ---

@dataclass(eq=False)
class SimTrace:
    """Series muestreadas cada `record_stride` pasos; la última muestra es el estado final."""
    times: np.ndarray
    R: np.ndarray
    x: np.ndarray
    y: np.ndarray
    q: np.ndarray
    link_ids: tuple
    route_ids: tuple
    config: SimConfig | None = None

    def __len__(self):
        return len(self.times)

    def link_series(self, link_id):
        return self.R[:, self.link_ids.index(link_id)]

    def route_series(self, route_id):
        return self.x[:, self.route_ids.index(route_id)]

    def final(self, kind='R'):
        ids = self.route_ids if kind == 'x' else self.link_ids
        values = getattr(self, kind)[-1]
        return {key: float(value) for key, value in zip(ids, values)}

    def to_frame(self) -> pd.DataFrame:
        columns = {'time': self.times}
        for kind, ids in (('R', self.link_ids), ('x', self.route_ids), ('y', self.link_ids), ('q', self.link_ids)):
            data = getattr(self, kind)
            for i, key in enumerate(ids):
                columns[f"{kind}.{key}"] = data[:, i]
        return pd.DataFrame(columns)


class _Recorder:
    def __init__(self, network, config):
        self.network = network
        self.config = config
        self.rows = {'times': [], 'R': [], 'x': [], 'y': [], 'q': []}

    def add(self, time, R, x, y, q):
        for key, value in (('times', time), ('R', R), ('x', x), ('y', y), ('q', q)):
            self.rows[key].append(np.array(value, dtype=float, copy=True))

    def trace(self):
        shape = {'R': len(self.network.links), 'x': len(self.network.routes)}
        arrays = {
            key: np.array(values) if values else np.empty((0, shape.get(key, len(self.network.links))))
            for key, values in self.rows.items()
        }
        arrays['times'] = arrays['times'].reshape(-1)
        return SimTrace(link_ids=self.network.link_ids, route_ids=self.network.route_ids,
                        config=self.config, **arrays)


# --- Integración ---

def _step_count(config):
    return max(1, int(math.ceil(config.horizon / config.step - 1e-9)))


def _bound(network, config):
    if config.divergence_factor is None:
        return math.inf
    return config.divergence_factor * network.max_capacity()


def _settle(network, state, recorder, bound, time):
    """Recorta negativos de redondeo y aborta ante estados no finitos o divergentes."""
    scale = NEGATIVE_ROUNDOFF * network.max_capacity()
    if not np.all(np.isfinite(state)):
        bad = [network.link_ids[i] for i in np.flatnonzero(~np.isfinite(state))]
        raise SimulationDiverged(f"Estado no finito en t = {time:g} ({', '.join(bad)})",
                                 trace=recorder.trace(), growing_links=bad)
    if np.any(state < -scale):
        i = int(np.argmin(state))
        raise SimulationError(f"R negativo en {network.link_ids[i]} en t = {time:g}: {state[i]:g}",
                              trace=recorder.trace())
    np.maximum(state, 0.0, out=state)
    if np.any(state > bound):
        growing = [network.link_ids[i] for i in np.flatnonzero(state > bound)]
        return growing
    return None


def _diverged(network, growing, recorder, time):
    trace = recorder.trace()
    signature = growth_signature(trace, network)
    no_equilibrium = bool(signature) and all(link_id in signature for link_id in growing)
    message = f"R_l supera la cota de divergencia en t = {time:g}: {', '.join(growing)}"
    if no_equilibrium:
        message += " (sin punto de equilibrio: el enlace no es el mínimo de ninguna de sus rutas)"
    return SimulationDiverged(message, trace=trace, growing_links=growing,
                              no_equilibrium=no_equilibrium)


def _run_network(network, queues, config):
    h = config.step
    model = _NetworkModel(network, queues, h, config.eta)
    state = np.array([config.initial_rates[link_id] for link_id in network.link_ids], dtype=float)
    history = History(state, h, model.max_lag)
    recorder = _Recorder(network, config)
    bound = _bound(network, config)
    steps = _step_count(config)

    def record(n, state, y):
        recorder.add(n * h, state, model.rates(history, n, state), y, model.queue_lengths(y))

    try:
        for n in range(steps):
            y = model.flows(history, n, state)
            if n % config.record_stride == 0:
                record(n, state, y)
            k1 = model.derivative(state, y)
            history.set_latest_slope(k1)
            slopes = [k1]
            for node, weight in zip(RK4_NODES[1:], (0.5, 0.5, 1.0)):
                stage = np.maximum(state + weight * h * slopes[-1], 0.0)
                slopes.append(model.derivative(stage, model.flows(history, n + node, stage)))
            state = state + h / 6 * (slopes[0] + 2 * slopes[1] + 2 * slopes[2] + slopes[3])
            growing = _settle(network, state, recorder, bound, (n + 1) * h)
            history.append(state)
            if growing:
                raise _diverged(network, growing, recorder, (n + 1) * h)
        record(steps, state, model.flows(history, steps, state))
    except QueueDomainError as err:
        raise SimulationError(f"Cola fuera de dominio: {err}", trace=recorder.trace()) from err
    return recorder.trace()


def _run_single_link(network, queues, config):
    """Un enlace con retardo común τ: Ṙ(t) = η α/(τC) R(t)(C − N·R(t − τ)); la cola se ignora."""
    h = config.step
    link = network.links[0]
    tau = network.routes[0].rtt
    count = len(network.routes)
    gain = link.alpha / (tau * link.capacity)
    capacity = float(link.capacity)
    eta = config.eta
    lag = tau / h
    returns = [route.return_delays[0] / h for route in network.routes]
    state = float(config.initial_rates[link.id])
    history = History([state], h, tau)
    recorder = _Recorder(network, config)
    bound = _bound(network, config)
    steps = _step_count(config)

    def slope(position, rate):
        balance = gain * (capacity - count * history.value(position - lag))
        if balance < 0 and rate <= 0:
            return 0.0
        return eta * rate * balance

    def record(n, rate):
        y = count * history.value(n - lag)
        recorder.add(n * h, [rate], [history.value(n - back) for back in returns], [y], [0.0])

    for n in range(steps):
        if n % config.record_stride == 0:
            record(n, state)
        k1 = slope(n, state)
        history.set_latest_slope(k1)
        k2 = slope(n + 0.5, max(state + 0.5 * h * k1, 0.0))
        k3 = slope(n + 0.5, max(state + 0.5 * h * k2, 0.0))
        k4 = slope(n + 1.0, max(state + h * k3, 0.0))
        state = state + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        current = np.array([state])
        growing = _settle(network, current, recorder, bound, (n + 1) * h)
        state = float(current[0])
        history.append(current)
        if growing:
            raise SimulationDiverged(f"R supera la cota de divergencia en t = {(n + 1) * h:g}",
                                     trace=recorder.trace(), growing_links=growing)
    record(steps, state)
    return recorder.trace()


def run(network: Network, queues: Mapping[str, QueueFunction], config: SimConfig) -> SimTrace:
    """Integra el modelo desde un historial constante R_l(t) = R_l(0⁻), t ≤ 0.

    Los retardos se leen del historial con interpolación de Hermite sobre R y Ṙ en la
    grilla; las etapas de RK4 se evalúan en t, t + h/2, t + h/2 y t + h. Los términos sin retardo usan el
    estado de la etapa.
    """
    problems = check_config(network, config)
    if problems:
        raise ValueError("; ".join(str(problem) for problem in problems))
    config = config.resolve(network)
    if config.horizon < 10 * network.max_rtt():
        logger.warning("Horizonte T = %g menor que 10·max τ_r = %g", config.horizon, 10 * network.max_rtt())
    logger.info("Simulando %d enlaces, %d rutas: h = %g, T = %g, η = %g, modo %s",
                len(network.links), len(network.routes), config.step, config.horizon, config.eta, config.mode)
    if config.mode == SimMode.SINGLE_LINK:
        trace = _run_single_link(network, queues, config)
    else:
        trace = _run_network(network, queues, config)
    logger.info("Simulación terminada: %d muestras", len(trace))
    return trace


# --- Diagnóstico de la traza ---

def growth_signature(trace: SimTrace, network: Network) -> tuple:
    """Enlaces cuyo R_l crece de forma monótona en la segunda mitad sin ser nunca el mínimo de sus rutas."""
    half = trace.R[len(trace) // 2:]
    if len(half) < 2:
        return ()
    index = network.link_index
    growing = []
    for link_id in network.link_ids:
        series = half[:, index[link_id]]
        if not (np.all(np.diff(series) >= 0) and series[-1] > series[0]):
            continue
        dominated = True
        for route in network.routes_through(link_id):
            others = [index[other] for other in route.links if other != link_id]
            if not others or not np.all(half[:, others].min(axis=1) < series):
                dominated = False
                break
        if dominated:
            growing.append(link_id)
    return tuple(growing)


@dataclass(frozen=True)
class RunSummary:
    final_rates: dict
    final_route_rates: dict
    final_flows: dict
    final_queues: dict
    converged: bool
    growing_links: tuple
    oscillation: dict
    horizon: float
    samples: int


def summarize(trace: SimTrace, network: Network, tolerance: float | None = None,
              transient_fraction: float | None = None) -> RunSummary:
    """Valores finales, convergencia de x en el último 10 % y amplitud post-transitorio de cada R_l."""
    if tolerance is None:
        tolerance = toolkit_setting('CONVERGENCE_TOLERANCE')
    if transient_fraction is None:
        transient_fraction = toolkit_setting('TRANSIENT_FRACTION')
    tail = trace.x[-max(2, len(trace) // 10):]
    spread = tail.max(axis=0) - tail.min(axis=0) if len(tail) else np.zeros(0)
    scale = np.maximum(np.abs(tail[-1]), 1e-300) if len(tail) else np.zeros(0)
    converged = bool(len(tail) >= 2 and np.all(spread <= tolerance * scale))

    window = trace.R[int(len(trace) * transient_fraction):]
    oscillation = {
        link_id: {
            'amplitude': float((window[:, i].max() - window[:, i].min()) / 2) if len(window) else 0.0,
            'mean': float(window[:, i].mean()) if len(window) else 0.0,
        }
        for i, link_id in enumerate(trace.link_ids)
    }
    return RunSummary(
        final_rates=trace.final('R'),
        final_route_rates=trace.final('x'),
        final_flows=trace.final('y'),
        final_queues=trace.final('q'),
        converged=converged,
        growing_links=growth_signature(trace, network),
        oscillation=oscillation,
        horizon=float(trace.times[-1]) if len(trace) else 0.0,
        samples=len(trace),
    )
