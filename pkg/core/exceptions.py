# --- Errores del modelo fluido ---


class FluidModelError(Exception):
    """Base de todos los errores del laboratorio."""


class UnknownLinkError(FluidModelError, KeyError):
    """Se pidió un enlace que no existe en la red."""

    def __str__(self):
        return f"Enlace desconocido: {self.args[0]}"


class EmptyLinkError(FluidModelError):
    """El enlace no lleva ninguna ruta (N_l = 0)."""


class QueueDomainError(FluidModelError, ValueError):
    """Función de cola evaluada fuera de su dominio (p. ej. mm1 con y >= C)."""


class ZeroFlowError(FluidModelError, ZeroDivisionError):
    """Flujo agregado nulo donde se necesita un promedio ponderado."""


class ElasticityUndefinedError(FluidModelError, ValueError):
    """γ = y p'(y)/p(y) no está definido (familia zero o p(y) = 0)."""


class HistoryUnderrunError(FluidModelError):
    """Se pidió un valor más antiguo que lo guardado en el historial."""


class SimulationError(FluidModelError):
    """La integración se abortó; `trace` guarda lo simulado hasta el último paso válido."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class SimulationDiverged(SimulationError):
    """Algún R_l superó la cota de divergencia o dejó de ser finito."""

    def __init__(self, message, trace=None, growing_links=(), no_equilibrium=False):
        super().__init__(message, trace)
        self.growing_links = tuple(growing_links)
        self.no_equilibrium = no_equilibrium


class BracketError(FluidModelError, ValueError):
    """Los extremos del intervalo de η no quedan a distinto lado del umbral."""


class InsufficientWindowError(FluidModelError):
    """La ventana post-transitorio no tiene cruces suficientes para medir el periodo."""


class ScenarioParseError(FluidModelError):
    """El documento del escenario no se puede leer o no tiene la estructura esperada."""

    def __init__(self, message, errors=None):
        super().__init__(message)
        self.errors = errors or {}


class ScenarioInvalidError(FluidModelError):
    """El escenario se leyó pero viola invariantes del modelo."""

    def __init__(self, report):
        super().__init__(f"Escenario inválido: {len(report.violations)} violación(es)")
        self.report = report
