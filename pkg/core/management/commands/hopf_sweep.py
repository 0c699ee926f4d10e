from core.exceptions import ScenarioInvalidError
from core.management.base import ScenarioCommand
from core.network import ValidationReport, Violation
from core.outputs import measurements_frame, plot_sweep, write_frame, write_json
from core.serializers import SweepResultSerializer
from core.services import hopf_sweep, is_single_delay_link


class Command(ScenarioCommand):
    help = ("Barrido en η sobre un enlace con retardo único y β = 0: amplitud y periodo del ciclo límite, "
            "ajuste amplitud² ∝ (η − η_c) y chequeo de supercriticidad "
            "(subcomando hopf-sweep; Django lo nombra hopf_sweep).")
    formats = ('csv', 'json')

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--bisect', action='store_true', help="Estima además η_c por bisección.")
        parser.add_argument('--plot', action='store_true', help="Escribe sweep.svg (amplitud² contra η).")

    def run(self, scenario, out, options):
        network = scenario.network
        if not is_single_delay_link(network) or network.links[0].beta != 0:
            raise ScenarioInvalidError(ValidationReport((
                Violation('mode', "El barrido de Hopf necesita un enlace, un τ común y β = 0"),
            )))
        result, eta_c = hopf_sweep(scenario, bisect=options['bisect'])
        document = dict(SweepResultSerializer(result).data)
        document['eta_c_bisection'] = eta_c
        frame = measurements_frame(result.measurements)
        if options['output_format'] == 'json':
            write_json(out / 'sweep.json', document)
        else:
            write_frame(out / 'sweep.csv', frame)
            write_json(out / 'fit.json', document)
        if options['plot']:
            plot_sweep(out / 'sweep.svg', result)
        self.emit(document)
