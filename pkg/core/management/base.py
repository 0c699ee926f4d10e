import logging
from pathlib import Path

from django.core.management.base import BaseCommand, CommandError

from core.exceptions import FluidModelError, ScenarioInvalidError, ScenarioParseError, SimulationError
from core.outputs import render_json, write_json, write_trace
from core.scenario import load_scenario, resolved_document, validate_scenario

logger = logging.getLogger(__name__)

# --- Códigos de salida ---
EXIT_INVALID = 1
EXIT_PARSE = 2
EXIT_SIMULATION = 3
EXIT_MODEL = 4

EXIT_HELP = (
    "Códigos de salida: 0 éxito; 1 escenario inválido; 2 documento ilegible o mal formado; "
    "3 simulación abortada (divergencia o dominio de cola); 4 otro error del modelo."
)


class ScenarioCommand(BaseCommand):
    """Base de los comandos que leen un escenario y escriben sus resultados en --out."""
    formats = ('json',)

    def create_parser(self, prog_name, subcommand, **kwargs):
        kwargs.setdefault('epilog', EXIT_HELP)
        return super().create_parser(prog_name, subcommand, **kwargs)

    def add_arguments(self, parser):
        parser.add_argument('--scenario', required=True, help="Ruta del escenario JSON.")
        parser.add_argument('--out', default='out', help="Directorio de salida (se crea si no existe).")
        parser.add_argument('--seed', type=int, default=None, help="Reservado; el núcleo no usa azar.")
        parser.add_argument('--format', choices=self.formats, default=self.formats[0], dest='output_format')

    def adjust(self, scenario, options):
        """Punto de extensión para aplicar banderas al escenario antes de validarlo."""
        return scenario

    def run(self, scenario, out, options):
        raise NotImplementedError

    def emit(self, document):
        self.stdout.write(render_json(document).decode('utf-8'))

    def warn_unused_seed(self, options):
        if options['seed'] is not None:
            logger.warning("--seed=%s ignorado: el núcleo no usa números aleatorios", options['seed'])

    def handle(self, *args, **options):
        self.warn_unused_seed(options)
        out = Path(options['out'])
        try:
            scenario = self.adjust(load_scenario(options['scenario']), options)
            report = validate_scenario(scenario)
            if not report.is_valid:
                raise ScenarioInvalidError(report)
            out.mkdir(parents=True, exist_ok=True)
            write_json(out / 'resolved_scenario.json', resolved_document(scenario))
            self.run(scenario, out, options)
        except ScenarioParseError as err:
            for field, problems in err.errors.items():
                self.stderr.write(f"  {field}: {problems}")
            raise CommandError(str(err), returncode=EXIT_PARSE) from err
        except ScenarioInvalidError as err:
            for violation in err.report.violations:
                self.stderr.write(f"  [{violation.code}] {violation.message}")
            raise CommandError(str(err), returncode=EXIT_INVALID) from err
        except SimulationError as err:
            if err.trace is not None and len(err.trace):
                out.mkdir(parents=True, exist_ok=True)
                write_trace(out / 'trace_partial.csv', err.trace)
            raise CommandError(str(err), returncode=EXIT_SIMULATION) from err
        except FluidModelError as err:
            raise CommandError(str(err), returncode=EXIT_MODEL) from err
