from core.management.base import ScenarioCommand
from core.outputs import plot_trace, write_json, write_trace
from core.serializers import RunSummarySerializer
from core.services import simulate, with_overrides


class Command(ScenarioCommand):
    help = "Integra el modelo fluido con retardos y escribe la traza, el resumen y opcionalmente un SVG."
    formats = ('csv', 'json')

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--eta', type=float, default=None, help="Multiplicador η de las ganancias.")
        parser.add_argument('--step', type=float, default=None, help="Paso h del integrador.")
        parser.add_argument('--horizon', type=float, default=None, help="Horizonte T.")
        parser.add_argument('--plot', action='store_true', help="Escribe trace.svg con R y x.")

    def adjust(self, scenario, options):
        return with_overrides(scenario, eta=options['eta'], step=options['step'], horizon=options['horizon'])

    def run(self, scenario, out, options):
        trace, summary = simulate(scenario)
        if options['output_format'] == 'json':
            frame = trace.to_frame()
            (out / 'trace.json').write_text(frame.to_json(orient='split', index=False, double_precision=12) + '\n',
                                            encoding='utf-8')
        else:
            write_trace(out / 'trace.csv', trace)
        document = RunSummarySerializer(summary).data
        write_json(out / 'summary.json', document)
        if options['plot']:
            plot_trace(out / 'trace.svg', trace)
        if summary.growing_links:
            self.stderr.write(self.style.WARNING(
                f"Sin equilibrio: R crece sin límite en {', '.join(summary.growing_links)}"
            ))
        self.emit(document)
