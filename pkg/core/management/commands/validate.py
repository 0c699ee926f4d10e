from pathlib import Path

from django.core.management.base import CommandError

from core.exceptions import ScenarioParseError
from core.management.base import EXIT_INVALID, EXIT_PARSE, ScenarioCommand
from core.outputs import write_json
from core.scenario import load_scenario, resolved_document, validate_scenario
from core.serializers import ValidationReportSerializer


class Command(ScenarioCommand):
    help = "Valida un escenario: estado 0 si es válido, 1 si viola invariantes, 2 si no se puede leer."
    formats = ('text', 'json')

    def handle(self, *args, **options):
        self.warn_unused_seed(options)
        try:
            scenario = load_scenario(options['scenario'])
        except ScenarioParseError as err:
            for field, problems in err.errors.items():
                self.stderr.write(f"  {field}: {problems}")
            raise CommandError(str(err), returncode=EXIT_PARSE) from err

        report = validate_scenario(scenario)
        if options['output_format'] == 'json':
            self.emit(ValidationReportSerializer(report).data)
        elif report.is_valid:
            self.stdout.write(self.style.SUCCESS("Escenario válido"))
        else:
            for violation in report.violations:
                self.stdout.write(f"[{violation.code}] {violation.message}")

        if not report.is_valid:
            raise CommandError(f"Escenario inválido: {len(report.violations)} violación(es)", returncode=EXIT_INVALID)
        out = Path(options['out'])
        out.mkdir(parents=True, exist_ok=True)
        write_json(out / 'resolved_scenario.json', resolved_document(scenario))
