import pandas as pd

from core.management.base import ScenarioCommand
from core.outputs import write_frame, write_json
from core.services import equilibrium_document


class Command(ScenarioCommand):
    help = "Calcula ȳ_l, el vector max-min x̄ y los cuellos de botella del escenario."
    formats = ('json', 'csv')

    def run(self, scenario, out, options):
        document = equilibrium_document(scenario)
        write_json(out / 'equilibrium.json', document)
        if options['output_format'] == 'csv':
            eq = document['equilibrium']
            routes = pd.DataFrame({
                'route': list(eq['rates']),
                'rate': list(eq['rates'].values()),
                'bottleneck': [eq['bottleneck'][route] for route in eq['rates']],
            })
            links = pd.DataFrame({
                'link': list(eq['link_rates']),
                'link_rate': list(eq['link_rates'].values()),
                'effective_capacity': [eq['effective_capacity'][link] for link in eq['link_rates']],
                'utilization': [eq['utilization'][link] for link in eq['link_rates']],
            })
            write_frame(out / 'equilibrium_routes.csv', routes)
            write_frame(out / 'equilibrium_links.csv', links)
        self.emit(document)
