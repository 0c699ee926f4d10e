from core.management.base import ScenarioCommand
from core.outputs import write_json
from core.services import build_report


class Command(ScenarioCommand):
    help = "Reporte completo: equilibrio, condiciones de estabilidad, α recomendado y supuestos."

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--round-trip', action='store_true',
                            help="Vuelve a resolver con los α recomendados y reporta la segunda pasada.")

    def run(self, scenario, out, options):
        document = build_report(scenario, round_trip=options['round_trip'])
        write_json(out / 'report.json', document)
        self.emit(document)
