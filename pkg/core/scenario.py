"""Escenario: red, colas por enlace, configuración de simulación y barrido, leídos de un documento JSON."""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path

from .conf import resolved_settings
from .dde import SimConfig, check_config
from .exceptions import ScenarioInvalidError, ScenarioParseError
from .network import Network, ValidationReport, Violation, validate
from .queues import ZERO_QUEUE, QueueFamily, QueueFunction

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class QueueModel:
    """Función de cola declarada para un enlace (forma del documento)."""
    link: str
    family: str = QueueFamily.ZERO
    k: float = 1.0
    m: float = 2.0


@dataclass(frozen=True)
class SweepSpec:
    etas: tuple | None = None
    eta_factors: tuple | None = None
    bracket: tuple | None = None
    perturbation: float = 0.01
    perturbations: tuple = (0.001, 0.05)
    transient_fraction: float | None = None
    workers: int | None = None

    def grid(self, eta_c):
        """η explícitos, o factores multiplicados por η_c, o None para la grilla por defecto."""
        if self.etas:
            return list(self.etas)
        if self.eta_factors:
            return [factor * eta_c for factor in self.eta_factors]
        return None


@dataclass(frozen=True)
class Scenario:
    network: Network
    queues: dict = field(default_factory=dict)
    sim: SimConfig = field(default_factory=SimConfig)
    sweep: SweepSpec | None = None
    name: str = ''
    problems: tuple = ()

    @property
    def queue_models(self):
        """Un modelo por enlace; los no declarados quedan explícitos como `zero`."""
        return [
            QueueModel(link=link_id, family=queue.family, k=queue.k, m=queue.m)
            for link_id, queue in ((l, self.queues.get(l, ZERO_QUEUE)) for l in self.network.link_ids)
        ]

    def with_network(self, network: Network) -> Scenario:
        return replace(self, network=network)

    def resolved(self) -> Scenario:
        return replace(self, sim=self.sim.resolve(self.network))


def build_queues(network: Network, models) -> tuple[dict, list]:
    """Construye QueueFunction por enlace; los problemas de valores se devuelven como violaciones."""
    queues, problems = {}, []
    known = set(network.link_ids)
    for model in models:
        if model.link not in known:
            problems.append(Violation('unknown_link', f"Modelo de cola para un enlace desconocido: {model.link}",
                                      link=model.link))
            continue
        if model.link in queues:
            problems.append(Violation('duplicate_queue', f"Modelo de cola repetido para {model.link}", link=model.link))
            continue
        capacity = network.link(model.link).capacity if model.family == QueueFamily.MM1_SCALED else None
        try:
            queues[model.link] = QueueFunction(family=model.family, k=model.k, m=model.m, capacity=capacity)
        except ValueError as err:
            problems.append(Violation('queue', f"Cola inválida en {model.link}: {err}", link=model.link))
    return queues, problems


def validate_scenario(scenario: Scenario) -> ValidationReport:
    """Invariantes de la red, de las colas y de la configuración de simulación."""
    report = validate(scenario.network)
    found = list(report.violations) + list(scenario.problems)
    if report.is_valid:
        found.extend(check_config(scenario.network, scenario.sim))
    return ValidationReport(tuple(found))


def parse_scenario(data) -> Scenario:
    """Documento ya decodificado → Scenario. Errores de estructura o de tipos: ScenarioParseError."""
    from .serializers import ScenarioSerializer

    serializer = ScenarioSerializer(data=data)
    if not serializer.is_valid():
        raise ScenarioParseError("Estructura de escenario inválida", errors=serializer.errors)
    return serializer.save()


def load_scenario(path) -> Scenario:
    try:
        data = json.loads(Path(path).read_text(encoding='utf-8'))
    except (OSError, UnicodeDecodeError) as err:
        raise ScenarioParseError(f"No se puede leer {path}: {err}") from err
    except json.JSONDecodeError as err:
        raise ScenarioParseError(f"JSON mal formado en {path}: {err}") from err
    scenario = parse_scenario(data)
    logger.info("Escenario '%s' leído: %d enlaces, %d rutas", scenario.name or path,
                len(scenario.network.links), len(scenario.network.routes))
    return scenario


def load_valid_scenario(path) -> Scenario:
    """load_scenario seguido de validate_scenario; las violaciones se lanzan como ScenarioInvalidError."""
    scenario = load_scenario(path)
    report = validate_scenario(scenario)
    if not report.is_valid:
        raise ScenarioInvalidError(report)
    return scenario


def resolved_document(scenario: Scenario) -> dict:
    """Eco del escenario con todos los valores por defecto explícitos."""
    from .serializers import ScenarioSerializer

    resolved = scenario.resolved()
    document = dict(ScenarioSerializer(resolved).data)
    document['gain_rtt'] = {link_id: scenario.network.gain_rtt(link_id) for link_id in scenario.network.link_ids}
    document['settings'] = resolved_settings()
    return document
