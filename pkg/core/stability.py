"""Condiciones locales de estabilidad por enlace, α recomendado y predicción de Hopf en un enlace."""
from __future__ import annotations

import logging
import math
from collections.abc import Mapping
from dataclasses import dataclass

from .equilibrium import BottleneckReport, Equilibrium, check_single_bottleneck
from .exceptions import ElasticityUndefinedError
from .network import Network, per_packet_rtt
from .queues import ZERO_QUEUE, QueueFunction

logger = logging.getLogger(__name__)

ASSUMPTION_NOTE = "supuesto de un solo cuello de botella violado: la condición no garantiza estabilidad"
BETA_ZERO_FLAG = "γ indefinido, variante β = 0"

# Cociente 20π/(3π − 2) del factor de amplitud del ciclo límite.
HOPF_AMPLITUDE_RATIO = 20 * math.pi / (3 * math.pi - 2)


def _queue_slope(link, queue, ybar):
    if link.beta == 0 or queue.is_zero:
        return 0.0
    return queue.derivative(ybar)


def link_gain(network: Network, link_id: str, eq: Equilibrium, queue: QueueFunction, alpha: float | None = None):
    """α_l/(d_l C_l) + β_l p'_l(ȳ_l)/(d_l² C_l)."""
    link = network.link(link_id)
    rtt = network.gain_rtt(link_id)
    alpha = link.alpha if alpha is None else alpha
    ybar = eq.effective_capacity[link_id]
    return alpha / (rtt * link.capacity) + link.beta * _queue_slope(link, queue, ybar) / (rtt ** 2 * link.capacity)


# --- Condiciones ---

def _weighted_rtt(eq, routes):
    """Σ x̄_r τ_r, redondeado una sola vez."""
    return math.fsum(eq.rates[route.id] * route.rtt for route in routes)


def theorem3_condition(network: Network, eq: Equilibrium, queues: Mapping[str, QueueFunction]) -> dict:
    """LHS por enlace: ganancia · R̄_l · Σ τ_r sobre las rutas cuyo cuello es l.

    En esas rutas x̄_r = R̄_l, así que se evalúa como ganancia · Σ x̄_r τ_r.
    """
    lhs = {}
    for link_id in network.link_ids:
        routes = eq.bottlenecked_routes(link_id)
        if not routes:
            lhs[link_id] = 0.0
            continue
        gain = link_gain(network, link_id, eq, queues.get(link_id, ZERO_QUEUE))
        lhs[link_id] = gain * _weighted_rtt(eq, routes)
    return lhs


def decentralized_lhs(network, link_id, eq, queue, alpha=None):
    # (α/d + β p'/d²)(ȳ/C) d^p = ganancia · ȳ · d^p
    gain = link_gain(network, link_id, eq, queue, alpha)
    if link_id in eq.saturated:
        # Saturado: ȳ_l = Σ x̄_r, y ȳ_l d_l^p = Σ x̄_r τ_r sobre todas las rutas de l.
        return gain * _weighted_rtt(eq, network.routes_through(link_id))
    return gain * eq.effective_capacity[link_id] * per_packet_rtt(network, link_id, eq.rates)


def decentralized_condition(network: Network, eq: Equilibrium, queues: Mapping[str, QueueFunction]) -> dict:
    """LHS local: (α_l/d_l + β_l p'_l(ȳ_l)/d_l²)(ȳ_l/C_l) d_l^p, con d_l^p sobre todas las rutas de l."""
    return {
        link_id: decentralized_lhs(network, link_id, eq, queues.get(link_id, ZERO_QUEUE))
        for link_id in network.link_ids
    }


# --- Parámetro recomendado ---

@dataclass(frozen=True)
class AlphaRecommendation:
    alpha: float
    per_packet_rtt: float
    elasticity: float | None
    flag: str | None
    lhs_at_recommended: float


def recommend_alpha(network: Network, link_id: str, eq: Equilibrium, queue: QueueFunction) -> AlphaRecommendation:
    """α_l = d_l^p / (d_l (1 + γ_l)).

    Con β_l = 0 (o cola nula) γ_l no existe y se usa α_l = d_l^p/d_l, marcado.
    ȳ_l depende de α_l, así que la comprobación completa exige volver a resolver el
    equilibrio con el α nuevo; `lhs_at_recommended` es la condición local evaluada
    sobre el equilibrio actual.
    """
    link = network.link(link_id)
    rtt = network.gain_rtt(link_id)
    packet_rtt = per_packet_rtt(network, link_id, eq.rates)
    if link.beta == 0 or queue.is_zero:
        alpha, gamma, flag = packet_rtt / rtt, None, BETA_ZERO_FLAG
        logger.info("α recomendado para %s sin término de cola (%s)", link_id, flag)
    else:
        ybar = eq.effective_capacity[link_id]
        if queue.value(ybar) <= 0:
            raise ElasticityUndefinedError(f"Cola nula en equilibrio con β > 0 en {link_id}")
        gamma = queue.elasticity(ybar)
        alpha, flag = packet_rtt / (rtt * (1 + gamma)), None
    return AlphaRecommendation(
        alpha=alpha,
        per_packet_rtt=packet_rtt,
        elasticity=gamma,
        flag=flag,
        lhs_at_recommended=decentralized_lhs(network, link_id, eq, queue, alpha=alpha),
    )


# --- Reporte ---

@dataclass(frozen=True)
class LinkStability:
    link: str
    theorem3_lhs: float
    theorem3_ok: bool
    decentralized_lhs: float
    decentralized_ok: bool
    recommended_alpha: float
    alpha_flag: str | None
    per_packet_rtt: float
    lhs_at_recommended: float
    bottlenecked_routes: tuple


@dataclass(frozen=True)
class StabilityReport:
    links: dict
    assumption_ok: bool
    violating_routes: tuple
    timescale_ratio: float

    @property
    def all_ok(self):
        return all(link.theorem3_ok for link in self.links.values())

    @property
    def decentralized_all_ok(self):
        return all(link.decentralized_ok for link in self.links.values())

    @property
    def note(self):
        return None if self.assumption_ok else ASSUMPTION_NOTE


def timescale_separation(network: Network, eq: Equilibrium, queues: Mapping[str, QueueFunction]) -> float:
    """max_l (ganancia_l · ȳ_l) · min_r τ_r; el modelo sin retardos es razonable si es ≪ 1."""
    shortest = min((route.rtt for route in network.routes), default=0.0)
    fastest = max(
        link_gain(network, link_id, eq, queues.get(link_id, ZERO_QUEUE)) * eq.effective_capacity[link_id]
        for link_id in network.link_ids
    )
    return fastest * shortest


def stability_report(network: Network, eq: Equilibrium, queues: Mapping[str, QueueFunction],
                     bottlenecks: BottleneckReport | None = None) -> StabilityReport:
    if bottlenecks is None:
        bottlenecks = check_single_bottleneck(eq)
    if not bottlenecks.ok:
        logger.warning("Rutas con más de un cuello de botella: %s", ", ".join(bottlenecks.violating_routes))
    t3 = theorem3_condition(network, eq, queues)
    local = decentralized_condition(network, eq, queues)
    links = {}
    for link_id in network.link_ids:
        recommendation = recommend_alpha(network, link_id, eq, queues.get(link_id, ZERO_QUEUE))
        links[link_id] = LinkStability(
            link=link_id,
            theorem3_lhs=t3[link_id],
            theorem3_ok=t3[link_id] < 1,
            decentralized_lhs=local[link_id],
            decentralized_ok=local[link_id] < 1,
            recommended_alpha=recommendation.alpha,
            alpha_flag=recommendation.flag,
            per_packet_rtt=recommendation.per_packet_rtt,
            lhs_at_recommended=recommendation.lhs_at_recommended,
            bottlenecked_routes=tuple(route.id for route in eq.bottlenecked_routes(link_id)),
        )
    return StabilityReport(
        links=links,
        assumption_ok=bottlenecks.ok,
        violating_routes=bottlenecks.violating_routes,
        timescale_ratio=timescale_separation(network, eq, queues),
    )


# --- Predicción de Hopf (un enlace, un retardo, β = 0) ---

@dataclass(frozen=True)
class HopfPrediction:
    eta_c: float
    period: float
    amplitude_coefficient: float


def hopf_prediction(alpha: float, tau: float, rbar: float) -> HopfPrediction:
    """η_c = π/(2α), periodo 4τ y coeficiente R̄·√(20π/(3π − 2)) de √(η − η_c)."""
    if not alpha > 0 or not tau > 0:
        raise ValueError("α y τ deben ser positivos")
    return HopfPrediction(
        eta_c=math.pi / (2 * alpha),
        period=4 * tau,
        amplitude_coefficient=rbar * math.sqrt(HOPF_AMPLITUDE_RATIO),
    )
