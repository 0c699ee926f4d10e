"""Topología de la red: enlaces, rutas con retardos por salto y parámetros RCP por enlace."""
from __future__ import annotations

import logging
import math
from collections.abc import Mapping
from dataclasses import dataclass, replace
from functools import cached_property

from .conf import toolkit_setting
from .exceptions import EmptyLinkError, UnknownLinkError, ZeroFlowError

logger = logging.getLogger(__name__)


# --- Tipos del dominio ---

@dataclass(frozen=True)
class Link:
    """Enlace l con capacidad C_l, ganancias α_l, β_l y un d_l opcional fijado a mano."""
    id: str
    capacity: float
    alpha: float
    beta: float = 0.0
    rtt: float | None = None

    def __str__(self):
        return self.id


@dataclass(frozen=True)
class Route:
    """Ruta r: enlaces en orden, retardo de ida τ_rl y de vuelta τ_lr por enlace, y RTT τ_r."""
    id: str
    links: tuple[str, ...]
    forward_delays: tuple[float, ...]
    return_delays: tuple[float, ...]
    rtt: float

    @classmethod
    def from_forward_delays(cls, id, links, forward_delays, rtt, return_delays=None):
        """Construye la ruta derivando τ_lr = τ_r − τ_rl cuando no se dan los de vuelta."""
        forward = tuple(float(f) for f in forward_delays)
        if return_delays is None:
            backward = tuple(float(rtt) - f for f in forward)
        else:
            backward = tuple(float(b) for b in return_delays)
        return cls(id=id, links=tuple(links), forward_delays=forward, return_delays=backward, rtt=float(rtt))

    def hops(self):
        """Tripletas (enlace, τ_rl, τ_lr)."""
        return zip(self.links, self.forward_delays, self.return_delays)

    def forward_delay(self, link_id):
        return self.forward_delays[self.links.index(link_id)]

    def return_delay(self, link_id):
        return self.return_delays[self.links.index(link_id)]

    def __str__(self):
        return self.id


@dataclass(frozen=True)
class Network:
    """Conjunto de enlaces J y rutas S. Inmutable: se puede compartir entre hilos y procesos."""
    links: tuple[Link, ...]
    routes: tuple[Route, ...]

    @cached_property
    def link_ids(self):
        return tuple(link.id for link in self.links)

    @cached_property
    def route_ids(self):
        return tuple(route.id for route in self.routes)

    @cached_property
    def link_index(self):
        return {link.id: i for i, link in enumerate(self.links)}

    @cached_property
    def route_index(self):
        return {route.id: i for i, route in enumerate(self.routes)}

    @cached_property
    def _links_by_id(self):
        return {link.id: link for link in self.links}

    @cached_property
    def _routes_by_link(self):
        through = {link.id: [] for link in self.links}
        for route in self.routes:
            for link_id in route.links:
                if link_id in through:
                    through[link_id].append(route)
        return {link_id: tuple(routes) for link_id, routes in through.items()}

    def link(self, link_id):
        try:
            return self._links_by_id[link_id]
        except KeyError:
            raise UnknownLinkError(link_id) from None

    def route(self, route_id):
        return self.routes[self.route_index[route_id]]

    def routes_through(self, link_id):
        """Rutas r con l ∈ r."""
        self.link(link_id)
        return self._routes_by_link[link_id]

    def route_count(self, link_id):
        """N_l."""
        return len(self.routes_through(link_id))

    def gain_rtt(self, link_id):
        """d_l usado en las ganancias: el valor fijado en el enlace o, si no hay, mean_rtt."""
        link = self.link(link_id)
        if link.rtt is not None:
            return link.rtt
        return mean_rtt(self, link_id)

    @property
    def is_delay_free(self):
        return bool(self.routes) and all(route.rtt == 0 for route in self.routes)

    def min_positive_delay(self):
        """Menor retardo por salto (ida o vuelta) estrictamente positivo; None sin retardos."""
        delays = [
            d for route in self.routes
            for d in (*route.forward_delays, *route.return_delays, route.rtt)
            if d > 0
        ]
        return min(delays) if delays else None

    def max_rtt(self):
        return max((route.rtt for route in self.routes), default=0.0)

    def max_capacity(self):
        return max(link.capacity for link in self.links)

    def with_alphas(self, alphas: Mapping[str, float]):
        """Copia de la red con α_l reemplazados (los enlaces no mencionados quedan igual)."""
        for link_id in alphas:
            self.link(link_id)
        links = tuple(
            replace(link, alpha=float(alphas[link.id])) if link.id in alphas else link
            for link in self.links
        )
        return Network(links=links, routes=self.routes)

    def with_betas(self, betas: Mapping[str, float]):
        for link_id in betas:
            self.link(link_id)
        links = tuple(
            replace(link, beta=float(betas[link.id])) if link.id in betas else link
            for link in self.links
        )
        return Network(links=links, routes=self.routes)


# --- Promedios de RTT ---

def mean_rtt(network: Network, link_id: str) -> float:
    """d_l por defecto: (1/N_l) Σ_{r: l∈r} τ_r."""
    routes = network.routes_through(link_id)
    if not routes:
        raise EmptyLinkError(f"El enlace {link_id} no lleva rutas")
    return math.fsum(route.rtt for route in routes) / len(routes)


def per_packet_rtt(network: Network, link_id: str, rates: Mapping[str, float]) -> float:
    """d_l^p = (1/ȳ_l) Σ_{r: l∈r} x̄_r τ_r con ȳ_l = Σ_{r: l∈r} x̄_r."""
    routes = network.routes_through(link_id)
    total = math.fsum(rates[route.id] for route in routes)
    if total <= 0:
        raise ZeroFlowError(f"Flujo agregado nulo en el enlace {link_id}")
    return math.fsum(rates[route.id] * route.rtt for route in routes) / total


# --- Validación ---

@dataclass(frozen=True)
class Violation:
    code: str
    message: str
    route: str | None = None
    link: str | None = None

    def __str__(self):
        return self.message


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def is_valid(self):
        return not self.violations

    def codes(self):
        return [violation.code for violation in self.violations]


def validate(network: Network, tolerance: float | None = None) -> ValidationReport:
    """Revisa los invariantes de enlaces, rutas y red. No lanza excepciones: devuelve la lista."""
    if tolerance is None:
        tolerance = toolkit_setting('RTT_TOLERANCE')
    found = []

    seen_links = set()
    for link in network.links:
        if link.id in seen_links:
            found.append(Violation('duplicate_link', f"Enlace repetido: {link.id}", link=link.id))
        seen_links.add(link.id)
        if not link.capacity > 0:
            found.append(Violation('capacity', f"C_l debe ser > 0 en {link.id}: {link.capacity:g}", link=link.id))
        if not link.alpha > 0:
            found.append(Violation('alpha', f"α_l debe ser > 0 en {link.id}: {link.alpha:g}", link=link.id))
        if not link.beta >= 0:
            found.append(Violation('beta', f"β_l debe ser ≥ 0 en {link.id}: {link.beta:g}", link=link.id))
        if link.rtt is not None and not link.rtt > 0:
            found.append(Violation('rtt', f"d_l debe ser > 0 en {link.id}: {link.rtt:g}", link=link.id))

    delay_free = network.is_delay_free
    seen_routes = set()
    for route in network.routes:
        if route.id in seen_routes:
            found.append(Violation('duplicate_route', f"Ruta repetida: {route.id}", route=route.id))
        seen_routes.add(route.id)
        if not route.links:
            found.append(Violation('empty_route', f"La ruta {route.id} no atraviesa enlaces", route=route.id))
        if not (len(route.links) == len(route.forward_delays) == len(route.return_delays)):
            found.append(Violation('delay_shape', f"La ruta {route.id} no tiene un retardo por enlace", route=route.id))
            continue
        if len(set(route.links)) != len(route.links):
            found.append(Violation('repeated_link', f"La ruta {route.id} repite un enlace", route=route.id))
        if route.rtt < 0 or (route.rtt == 0 and not delay_free):
            found.append(Violation(
                'zero_rtt', f"τ_r debe ser > 0 en {route.id} (τ_r = 0 solo si toda la red es sin retardos)",
                route=route.id,
            ))
        for link_id, forward, backward in route.hops():
            if link_id not in seen_links:
                found.append(Violation('unknown_link', f"La ruta {route.id} usa un enlace desconocido: {link_id}",
                                       route=route.id, link=link_id))
            if forward < 0 or backward < 0:
                found.append(Violation('negative_delay', f"Retardo negativo en ({route.id}, {link_id})",
                                       route=route.id, link=link_id))
            total = forward + backward
            if abs(total - route.rtt) > tolerance:
                found.append(Violation('rtt_mismatch',
                                       f"Desajuste de RTT en ({route.id}, {link_id}): {total:g} ≠ {route.rtt:g}",
                                       route=route.id, link=link_id))

    for link in network.links:
        routes = network._routes_by_link.get(link.id, ())
        if not routes:
            found.append(Violation('empty_link', f"El enlace {link.id} no lleva rutas", link=link.id))
        elif link.rtt is None and mean_rtt(network, link.id) <= 0:
            found.append(Violation('rtt_unresolved',
                                   f"d_l de {link.id} resulta 0: configure 'rtt' en rutas sin retardo",
                                   link=link.id))

    if found:
        logger.debug("Red con %d violaciones", len(found))
    return ValidationReport(tuple(found))
