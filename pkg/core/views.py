# core/views.py

from rest_framework import serializers, status, viewsets
from rest_framework.decorators import action
from rest_framework.response import Response

# --- Importaciones para drf-spectacular ---
from drf_spectacular.utils import extend_schema

from .exceptions import FluidModelError, ScenarioParseError
from .scenario import parse_scenario, validate_scenario
from .serializers import ScenarioSerializer, ValidationReportSerializer, ViolationSerializer
from .services import build_report, equilibrium_document


# --- Serializers inline para documentación ---
class ReportQuerySerializer(serializers.Serializer):
    round_trip = serializers.BooleanField(default=False, help_text="Repite el análisis con los α recomendados.")


class ScenarioViewSet(viewsets.ViewSet):
    """API para analizar escenarios RCP. No guarda nada: cada pedido trae su escenario completo."""
    serializer_class = ScenarioSerializer

    def _load(self, request, require_valid=True):
        """Devuelve (scenario, None) o (None, Response de error)."""
        try:
            scenario = parse_scenario(request.data)
        except ScenarioParseError as err:
            return None, Response({"error": str(err), "details": err.errors}, status=status.HTTP_400_BAD_REQUEST)
        if require_valid:
            report = validate_scenario(scenario)
            if not report.is_valid:
                violations = ViolationSerializer(report.violations, many=True).data
                return None, Response({"violations": violations}, status=status.HTTP_400_BAD_REQUEST)
        return scenario, None

    @extend_schema(summary="Validar un escenario", request=ScenarioSerializer,
                   responses={200: ValidationReportSerializer})
    @action(detail=False, methods=['post'], url_path='validate')
    def validate(self, request):
        """Lista las violaciones de invariantes del escenario (vacía si es válido)."""
        scenario, error = self._load(request, require_valid=False)
        if error:
            return error
        return Response(ValidationReportSerializer(validate_scenario(scenario)).data)

    @extend_schema(summary="Equilibrio max-min", request=ScenarioSerializer)
    @action(detail=False, methods=['post'], url_path='equilibrium')
    def equilibrium(self, request):
        """Capacidades efectivas, vector x̄ y cuellos de botella."""
        scenario, error = self._load(request)
        if error:
            return error
        try:
            return Response(equilibrium_document(scenario))
        except FluidModelError as err:
            return Response({"error": str(err)}, status=status.HTTP_400_BAD_REQUEST)

    @extend_schema(summary="Reporte de estabilidad", request=ScenarioSerializer, parameters=[ReportQuerySerializer])
    @action(detail=False, methods=['post'], url_path='report')
    def report(self, request):
        """Equilibrio, condiciones de estabilidad y α recomendado por enlace."""
        scenario, error = self._load(request)
        if error:
            return error
        query = ReportQuerySerializer(data=request.query_params)
        query.is_valid(raise_exception=True)
        try:
            return Response(build_report(scenario, round_trip=query.validated_data['round_trip']))
        except FluidModelError as err:
            return Response({"error": str(err)}, status=status.HTTP_400_BAD_REQUEST)
