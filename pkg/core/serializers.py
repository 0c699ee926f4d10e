import math
from collections.abc import Mapping

from rest_framework import serializers

from .dde import SimConfig, SimMode
from .network import Link, Network, Route
from .queues import QueueFamily
from .scenario import QueueModel, Scenario, SweepSpec, build_queues


class FiniteFloatField(serializers.FloatField):
    """Float que se emite como null cuando no es finito (JSON estricto no admite inf ni nan)."""

    def to_representation(self, value):
        value = float(value)
        return value if math.isfinite(value) else None


# --- Serializadores del escenario (entrada y eco) ---

class StrictSerializer(serializers.Serializer):
    """Rechaza las claves que el serializer no declara."""
    extra_keys = ()

    def to_internal_value(self, data):
        if isinstance(data, Mapping):
            unknown = sorted(set(data) - set(self.fields) - set(self.extra_keys))
            if unknown:
                raise serializers.ValidationError({key: ["Clave desconocida."] for key in unknown})
        return super().to_internal_value(data)


class LinkSerializer(StrictSerializer):
    id = serializers.CharField()
    capacity = serializers.FloatField(help_text="Capacidad C_l.")
    alpha = serializers.FloatField(help_text="Ganancia α_l.")
    beta = serializers.FloatField(default=0.0, help_text="Ganancia de cola β_l.")
    rtt = serializers.FloatField(required=False, allow_null=True, default=None,
                                 help_text="d_l fijo; si falta se usa el RTT medio de las rutas del enlace.")


class RouteSerializer(StrictSerializer):
    id = serializers.CharField()
    links = serializers.ListField(child=serializers.CharField(), allow_empty=True)
    forward_delays = serializers.ListField(child=serializers.FloatField(), allow_empty=True,
                                           help_text="τ_rl por enlace, en el orden de `links`.")
    rtt = serializers.FloatField(help_text="τ_r.")
    return_delays = serializers.ListField(child=serializers.FloatField(), required=False, allow_null=True,
                                          default=None, help_text="τ_lr; si faltan se derivan como τ_r − τ_rl.")


class QueueModelSerializer(StrictSerializer):
    link = serializers.CharField()
    family = serializers.ChoiceField(choices=QueueFamily.choices, default=QueueFamily.ZERO)
    k = serializers.FloatField(default=1.0)
    m = serializers.FloatField(default=2.0)


class SimConfigSerializer(StrictSerializer):
    step = serializers.FloatField(required=False, allow_null=True, default=None)
    horizon = serializers.FloatField(required=False, allow_null=True, default=None)
    eta = serializers.FloatField(default=1.0)
    initial_rates = serializers.DictField(child=serializers.FloatField(), required=False, allow_null=True,
                                          default=None)
    record_stride = serializers.IntegerField(default=1)
    mode = serializers.ChoiceField(choices=SimMode.choices, default=SimMode.NETWORK)
    divergence_factor = serializers.FloatField(required=False, allow_null=True,
                                               help_text="Cota de divergencia en múltiplos de max C_l; null la desactiva.")


class SweepSerializer(StrictSerializer):
    etas = serializers.ListField(child=serializers.FloatField(), required=False, allow_null=True, default=None)
    eta_factors = serializers.ListField(child=serializers.FloatField(), required=False, allow_null=True,
                                        default=None, help_text="Grilla como múltiplos de η_c previsto.")
    bracket = serializers.ListField(child=serializers.FloatField(), min_length=2, max_length=2, required=False,
                                    allow_null=True, default=None)
    perturbation = serializers.FloatField(default=0.01)
    perturbations = serializers.ListField(child=serializers.FloatField(), default=lambda: [0.001, 0.05])
    transient_fraction = serializers.FloatField(required=False, allow_null=True, default=None)
    workers = serializers.IntegerField(required=False, allow_null=True, default=None, min_value=1)


class ScenarioSerializer(StrictSerializer):
    """Documento de escenario. `save()` devuelve un Scenario del dominio."""
    # Claves del eco del escenario resuelto.
    extra_keys = ('gain_rtt', 'settings')

    name = serializers.CharField(required=False, allow_blank=True, default='')
    links = LinkSerializer(many=True, source='network.links')
    routes = RouteSerializer(many=True, source='network.routes')
    queue_models = QueueModelSerializer(many=True, required=False)
    sim = SimConfigSerializer(required=False)
    sweep = SweepSerializer(required=False, allow_null=True)

    def create(self, validated_data):
        network_data = validated_data['network']
        network = Network(
            links=tuple(Link(**link) for link in network_data['links']),
            routes=tuple(Route.from_forward_delays(**route) for route in network_data['routes']),
        )
        models = [QueueModel(**model) for model in validated_data.get('queue_models', [])]
        queues, problems = build_queues(network, models)

        sim_data = dict(validated_data.get('sim') or {})
        sim = SimConfig(**sim_data)

        sweep = None
        if validated_data.get('sweep') is not None:
            sweep_data = dict(validated_data['sweep'])
            for key in ('etas', 'eta_factors', 'bracket', 'perturbations'):
                if sweep_data.get(key) is not None:
                    sweep_data[key] = tuple(sweep_data[key])
            sweep = SweepSpec(**sweep_data)

        return Scenario(network=network, queues=queues, sim=sim, sweep=sweep,
                        name=validated_data.get('name', ''), problems=tuple(problems))


# --- Serializadores de resultados ---

class ViolationSerializer(serializers.Serializer):
    code = serializers.CharField()
    message = serializers.CharField()
    route = serializers.CharField(allow_null=True)
    link = serializers.CharField(allow_null=True)


class ValidationReportSerializer(serializers.Serializer):
    valid = serializers.BooleanField(source='is_valid')
    violations = ViolationSerializer(many=True)


class WaterLevelSerializer(serializers.Serializer):
    level = serializers.FloatField()
    links = serializers.ListField(child=serializers.CharField())
    routes = serializers.ListField(child=serializers.CharField())


class EquilibriumSerializer(serializers.Serializer):
    rates = serializers.DictField(child=serializers.FloatField(), help_text="x̄_r por ruta.")
    link_rates = serializers.DictField(child=serializers.FloatField(), help_text="R̄_l por enlace.")
    effective_capacity = serializers.DictField(child=serializers.FloatField(), help_text="ȳ_l por enlace.")
    bottleneck = serializers.DictField(child=serializers.CharField())
    tied_routes = serializers.SerializerMethodField()
    saturated = serializers.SerializerMethodField()
    unconstrained_links = serializers.ListField(child=serializers.CharField())
    utilization = serializers.SerializerMethodField()
    levels = WaterLevelSerializer(many=True)

    def get_tied_routes(self, obj) -> list[str]:
        return sorted(obj.tied_routes)

    def get_saturated(self, obj) -> list[str]:
        return sorted(obj.saturated)

    def get_utilization(self, obj) -> dict[str, float]:
        return {link_id: obj.utilization(link_id) for link_id in obj.network.link_ids}


class BottleneckReportSerializer(serializers.Serializer):
    ok = serializers.BooleanField()
    counts = serializers.DictField(child=serializers.IntegerField())
    violating_routes = serializers.ListField(child=serializers.CharField())
    unconstrained_links = serializers.ListField(child=serializers.CharField())


class LinkStabilitySerializer(serializers.Serializer):
    link = serializers.CharField()
    theorem3_lhs = FiniteFloatField()
    theorem3_ok = serializers.BooleanField()
    decentralized_lhs = FiniteFloatField()
    decentralized_ok = serializers.BooleanField()
    recommended_alpha = FiniteFloatField()
    alpha_flag = serializers.CharField(allow_null=True)
    per_packet_rtt = FiniteFloatField()
    lhs_at_recommended = FiniteFloatField()
    bottlenecked_routes = serializers.ListField(child=serializers.CharField())


class StabilityReportSerializer(serializers.Serializer):
    links = serializers.SerializerMethodField()
    all_ok = serializers.BooleanField()
    decentralized_all_ok = serializers.BooleanField()
    assumption_ok = serializers.BooleanField()
    violating_routes = serializers.ListField(child=serializers.CharField())
    note = serializers.CharField(allow_null=True)
    timescale_ratio = FiniteFloatField()

    def get_links(self, obj) -> dict:
        return {link_id: LinkStabilitySerializer(link).data for link_id, link in obj.links.items()}


class HopfPredictionSerializer(serializers.Serializer):
    eta_c = serializers.FloatField()
    period = serializers.FloatField()
    amplitude_coefficient = serializers.FloatField()


class CycleMeasurementSerializer(serializers.Serializer):
    eta = serializers.FloatField()
    amplitude = FiniteFloatField()
    period = FiniteFloatField(allow_null=True)
    converged = serializers.BooleanField()
    decay_ratio = FiniteFloatField(allow_null=True)
    crossings = serializers.IntegerField()


class ScalingFitSerializer(serializers.Serializer):
    eta_c_estimate = serializers.FloatField()
    slope = serializers.FloatField()
    intercept = serializers.FloatField()
    r_squared = serializers.FloatField()
    loglog_slope = serializers.FloatField(allow_null=True)
    prefactor_ratio = serializers.FloatField()
    points = serializers.IntegerField()


class HysteresisSerializer(serializers.Serializer):
    eta = serializers.FloatField()
    perturbations = serializers.ListField(child=serializers.FloatField())
    amplitudes = serializers.ListField(child=serializers.FloatField())
    spread = serializers.FloatField()
    ok = serializers.BooleanField()


class SweepResultSerializer(serializers.Serializer):
    prediction = HopfPredictionSerializer()
    fit = ScalingFitSerializer(allow_null=True)
    measurements = CycleMeasurementSerializer(many=True)
    monotone = serializers.BooleanField()
    supercritical = serializers.BooleanField(allow_null=True)
    hysteresis = HysteresisSerializer(allow_null=True)


class RunSummarySerializer(serializers.Serializer):
    converged = serializers.BooleanField()
    growing_links = serializers.ListField(child=serializers.CharField())
    final_rates = serializers.DictField(child=FiniteFloatField())
    final_route_rates = serializers.DictField(child=FiniteFloatField())
    final_flows = serializers.DictField(child=FiniteFloatField())
    final_queues = serializers.DictField(child=FiniteFloatField())
    oscillation = serializers.DictField(child=serializers.DictField(child=FiniteFloatField()))
    horizon = serializers.FloatField()
    samples = serializers.IntegerField()
