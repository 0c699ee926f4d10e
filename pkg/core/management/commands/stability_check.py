import pandas as pd

from core.management.base import ScenarioCommand
from core.outputs import write_json
from core.serializers import StabilityReportSerializer
from core.services import analyse

COLUMNS = ['theorem3_lhs', 'theorem3_ok', 'decentralized_lhs', 'decentralized_ok', 'recommended_alpha']


class Command(ScenarioCommand):
    help = ("Evalúa por enlace la condición de estabilidad con retardos y su versión descentralizada "
            "(subcomando stability-check; Django lo nombra stability_check).")
    formats = ('table', 'json')

    def run(self, scenario, out, options):
        _, _, report = analyse(scenario)
        document = StabilityReportSerializer(report).data
        write_json(out / 'stability.json', document)
        if options['output_format'] == 'json':
            self.emit(document)
            return

        table = pd.DataFrame.from_dict(document['links'], orient='index')[COLUMNS]
        self.stdout.write(table.to_string(float_format=lambda value: f"{value:.4g}"))
        self.stdout.write(f"all_ok={document['all_ok']}  assumption_ok={document['assumption_ok']}  "
                          f"timescale_ratio={document['timescale_ratio']}")
        if document['note']:
            self.stdout.write(self.style.WARNING(document['note']))
