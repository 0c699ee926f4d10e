"""Casos de uso compartidos por los comandos de manage.py y la API."""
import logging
from dataclasses import replace

from .bifurcation import estimate_eta_c, predicted, sweep_and_fit
from .dde import run, summarize
from .equilibrium import check_single_bottleneck, solve_equilibrium
from .scenario import Scenario, SweepSpec
from .serializers import (
    BottleneckReportSerializer, EquilibriumSerializer, HopfPredictionSerializer, StabilityReportSerializer,
)
from .stability import stability_report

logger = logging.getLogger(__name__)


def with_overrides(scenario: Scenario, **overrides) -> Scenario:
    """Reemplaza campos de la configuración de simulación; los valores None se ignoran."""
    values = {key: value for key, value in overrides.items() if value is not None}
    if not values:
        return scenario
    return replace(scenario, sim=replace(scenario.sim, **values))


def is_single_delay_link(network):
    return len(network.links) == 1 and len({route.rtt for route in network.routes}) == 1 \
        and network.max_rtt() > 0


def analyse(scenario: Scenario):
    """Equilibrio, chequeo de cuello único y reporte de estabilidad."""
    eq = solve_equilibrium(scenario.network, scenario.queues)
    bottlenecks = check_single_bottleneck(eq)
    report = stability_report(scenario.network, eq, scenario.queues, bottlenecks)
    return eq, bottlenecks, report


def equilibrium_document(scenario: Scenario) -> dict:
    eq = solve_equilibrium(scenario.network, scenario.queues)
    return {
        'equilibrium': EquilibriumSerializer(eq).data,
        'bottlenecks': BottleneckReportSerializer(check_single_bottleneck(eq)).data,
    }


def build_report(scenario: Scenario, round_trip: bool = False) -> dict:
    """Equilibrio, estabilidad, α recomendado y supuestos en un solo documento.

    Con `round_trip` se vuelve a resolver con los α recomendados y se reporta la
    segunda pasada.
    """
    eq, bottlenecks, report = analyse(scenario)
    recommended = {link_id: link.recommended_alpha for link_id, link in report.links.items()}
    document = {
        'scenario': scenario.name,
        'equilibrium': EquilibriumSerializer(eq).data,
        'bottlenecks': BottleneckReportSerializer(bottlenecks).data,
        'stability': StabilityReportSerializer(report).data,
        'recommended_alpha': recommended,
        'assumption_ok': report.assumption_ok,
        'hopf_prediction': None,
    }
    network = scenario.network
    if is_single_delay_link(network) and network.links[0].beta == 0:
        document['hopf_prediction'] = HopfPredictionSerializer(predicted(network)).data

    if round_trip:
        second = scenario.with_network(network.with_alphas(recommended))
        eq2, _, report2 = analyse(second)
        logger.info("Segunda pasada con α recomendado: decentralized_all_ok = %s", report2.decentralized_all_ok)
        document['round_trip'] = {
            'alphas': recommended,
            'equilibrium': EquilibriumSerializer(eq2).data,
            'stability': StabilityReportSerializer(report2).data,
        }
    return document


def simulate(scenario: Scenario):
    """Corre la simulación configurada y devuelve la traza y su resumen."""
    trace = run(scenario.network, scenario.queues, scenario.sim)
    return trace, summarize(trace, scenario.network)


def hopf_sweep(scenario: Scenario, bisect: bool = False):
    """Barrido en η con la grilla del escenario (o la de por defecto) y, si se pide, bisección de η_c."""
    sweep = scenario.sweep or SweepSpec()
    network = scenario.network
    etas = sweep.grid(predicted(network).eta_c)
    result = sweep_and_fit(network, etas=etas, perturbation=sweep.perturbation, workers=sweep.workers,
                           transient_fraction=sweep.transient_fraction,
                           hysteresis_perturbations=sweep.perturbations)
    eta_c = None
    if bisect:
        eta_c = estimate_eta_c(network, bracket=sweep.bracket, perturbation=sweep.perturbation)
    return result, eta_c
