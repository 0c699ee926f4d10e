"""Vector límite x̄: capacidades efectivas ȳ_l, llenado progresivo max-min y cuellos de botella."""
from __future__ import annotations

import logging
from collections.abc import Mapping
from dataclasses import dataclass

import numpy as np

from .conf import toolkit_setting
from .network import Link, Network
from .queues import ZERO_QUEUE, QueueFunction

logger = logging.getLogger(__name__)


# --- Capacidad efectiva ---

def rate_balance(link: Link, queue: QueueFunction, rtt: float, y):
    """g(y) = α_l/(d_l C_l)(C_l − y) − β_l p_l(y)/(d_l² C_l); Ṙ_l = R_l·g(y_l)."""
    gain = link.alpha / (rtt * link.capacity) * (link.capacity - y)
    if link.beta == 0 or queue.is_zero:
        return gain
    return gain - link.beta * queue.value(y) / (rtt ** 2 * link.capacity)


def effective_capacity(link: Link, queue: QueueFunction, rtt: float, max_iterations: int | None = None) -> float:
    """ȳ_l: raíz única de g(y) = 0 en [0, C_l], por bisección.

    g es estrictamente decreciente, positiva en 0 y negativa en C_l (o cerca del polo
    de mm1_scaled), así que el intervalo siempre contiene la raíz.
    """
    if link.beta == 0 or queue.is_zero:
        return float(link.capacity)
    if max_iterations is None:
        max_iterations = toolkit_setting('BISECTION_MAX_ITERATIONS')

    lo, hi = 0.0, float(link.capacity)
    pole = queue.upper_bound()
    if pole is not None:
        hi = float(np.nextafter(min(hi, pole), 0.0))
    for _ in range(max_iterations):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if rate_balance(link, queue, rtt, mid) > 0:
            lo = mid
        else:
            hi = mid
    root = min((lo, hi), key=lambda y: abs(rate_balance(link, queue, rtt, y)))

    residual = abs(rate_balance(link, queue, rtt, root))
    if residual > 1e-12 * link.alpha / rtt:
        logger.warning("Residuo de bisección alto en %s: %.3g", link.id, residual)
    return root


# --- Llenado progresivo ---

@dataclass(frozen=True)
class WaterLevel:
    level: float
    links: tuple[str, ...]
    routes: tuple[str, ...]


@dataclass(frozen=True, eq=False)
class Equilibrium:
    """x̄ por ruta, R̄ y ȳ por enlace, cuello de botella por ruta y niveles del llenado."""
    network: Network
    rates: dict
    link_rates: dict
    effective_capacity: dict
    bottleneck: dict
    tied_routes: frozenset
    saturated: frozenset
    levels: tuple
    tolerance: float = 1e-12

    def load(self, link_id):
        """Σ_{r: l∈r} x̄_r."""
        return sum(self.rates[route.id] for route in self.network.routes_through(link_id))

    def utilization(self, link_id):
        """ȳ_l/C_l: fracción de la capacidad que usa el enlace en equilibrio."""
        return self.effective_capacity[link_id] / self.network.link(link_id).capacity

    def _same(self, a, b):
        return abs(a - b) <= self.tolerance * max(abs(a), abs(b), 1e-300)

    def bottlenecked_routes(self, link_id):
        """Rutas con l ∈ r y x̄_r = R̄_l, contando solo enlaces saturados."""
        if link_id not in self.saturated:
            return ()
        top = self.link_rates[link_id]
        return tuple(
            route for route in self.network.routes_through(link_id)
            if self._same(self.rates[route.id], top)
        )

    @property
    def unconstrained_links(self):
        """Enlaces que nunca se saturan: su R_l crece sin límite y no afecta a x."""
        return tuple(l for l in self.network.link_ids if l not in self.saturated)


def water_fill(network: Network, capacities: Mapping[str, float], tolerance: float | None = None) -> Equilibrium:
    """Llenado progresivo max-min contra las capacidades ȳ_l.

    En cada vuelta se busca la menor cuota residual, se congelan las rutas de los
    enlaces que la alcanzan y se descuenta su tasa. Si una ruta se congela en varios
    enlaces a la vez, el cuello registrado es el de menor id y la ruta queda marcada.
    """
    if tolerance is None:
        tolerance = toolkit_setting('WATER_FILL_TOLERANCE')
    link_ids = sorted(network.link_ids)
    residual = {link_id: float(capacities[link_id]) for link_id in link_ids}
    active = set(network.route_ids)
    rates, bottleneck, tied, saturated, levels = {}, {}, set(), set(), []

    while active:
        shares = {}
        for link_id in link_ids:
            count = sum(1 for route in network.routes_through(link_id) if route.id in active)
            if count:
                shares[link_id] = residual[link_id] / count
        if not shares:
            break
        level = min(shares.values())
        slack = tolerance * max(abs(level), 1e-300)
        hits = sorted(link_id for link_id, share in shares.items() if share - level <= slack)
        frozen = sorted({
            route.id for link_id in hits for route in network.routes_through(link_id) if route.id in active
        })
        for route_id in frozen:
            route = network.route(route_id)
            rates[route_id] = level
            binding = [link_id for link_id in hits if link_id in route.links]
            bottleneck[route_id] = binding[0]
            if len(binding) > 1:
                tied.add(route_id)
            for link_id in route.links:
                residual[link_id] -= level
        active.difference_update(frozen)
        saturated.update(hits)
        levels.append(WaterLevel(level=level, links=tuple(hits), routes=tuple(frozen)))

    if tied:
        logger.warning("Cuellos de botella empatados en las rutas: %s", ", ".join(sorted(tied)))
    link_rates = {
        link_id: max(rates[route.id] for route in network.routes_through(link_id))
        for link_id in network.link_ids
    }
    return Equilibrium(
        network=network,
        rates={route_id: rates[route_id] for route_id in network.route_ids},
        link_rates=link_rates,
        effective_capacity={link_id: float(capacities[link_id]) for link_id in network.link_ids},
        bottleneck={route_id: bottleneck[route_id] for route_id in network.route_ids},
        tied_routes=frozenset(tied),
        saturated=frozenset(saturated),
        levels=tuple(levels),
        tolerance=tolerance,
    )


def effective_capacities(network: Network, queues: Mapping[str, QueueFunction]) -> dict:
    return {
        link.id: effective_capacity(link, queues.get(link.id, ZERO_QUEUE), network.gain_rtt(link.id))
        for link in network.links
    }


def solve_equilibrium(network: Network, queues: Mapping[str, QueueFunction]) -> Equilibrium:
    """ȳ_l para cada enlace y luego el llenado progresivo."""
    return water_fill(network, effective_capacities(network, queues))


# --- Un solo cuello de botella por ruta ---

@dataclass(frozen=True)
class BottleneckReport:
    counts: dict
    violating_routes: tuple
    unconstrained_links: tuple

    @property
    def ok(self):
        return not self.violating_routes


def check_single_bottleneck(eq: Equilibrium) -> BottleneckReport:
    """Cuenta, para cada ruta, los enlaces l ∈ r (saturados) con x̄_r = R̄_l."""
    counts = {route.id: 0 for route in eq.network.routes}
    for link_id in eq.network.link_ids:
        for route in eq.bottlenecked_routes(link_id):
            counts[route.id] += 1
    violating = tuple(route_id for route_id, count in counts.items() if count != 1)
    return BottleneckReport(counts=counts, violating_routes=violating, unconstrained_links=eq.unconstrained_links)


def break_ties(network: Network, queues: Mapping[str, QueueFunction], epsilon: float = 1e-3):
    """Sube β_l en el cuello registrado de cada ruta empatada para que quede solo.

    Es una operación explícita: devuelve una red nueva y los enlaces tocados. Los
    enlaces con cola nula no cambian su ȳ_l con β, así que se dejan igual.
    """
    eq = solve_equilibrium(network, queues)
    report = check_single_bottleneck(eq)
    betas = {}
    for route_id in report.violating_routes:
        link_id = eq.bottleneck[route_id]
        if queues.get(link_id, ZERO_QUEUE).is_zero:
            logger.warning("No se puede desempatar %s vía β: cola nula en %s", route_id, link_id)
            continue
        link = network.link(link_id)
        betas[link_id] = link.beta + epsilon * max(link.beta, 1.0)
    return network.with_betas(betas), tuple(sorted(betas))
