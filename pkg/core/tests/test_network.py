from django.test import SimpleTestCase

from core.exceptions import EmptyLinkError, UnknownLinkError, ZeroFlowError
from core.network import Link, Network, Route, mean_rtt, per_packet_rtt, validate

from .factories import route, single_link, three_links


class RouteTests(SimpleTestCase):
    def test_return_delays_are_derived_from_rtt(self):
        r = Route.from_forward_delays('r', ['A', 'B'], [0.4, 1.0], 2.0)
        self.assertEqual(r.return_delays, (1.6, 1.0))
        self.assertEqual(r.forward_delay('B'), 1.0)
        self.assertEqual(r.return_delay('A'), 1.6)

    def test_explicit_return_delays_are_kept(self):
        r = Route.from_forward_delays('r', ['l'], [0.6], 1.0, return_delays=[0.5])
        self.assertEqual(r.return_delays, (0.5,))


class NetworkQueryTests(SimpleTestCase):
    def test_routes_through_and_counts(self):
        network = three_links()
        self.assertEqual([r.id for r in network.routes_through('B')], ['r2', 'r3'])
        self.assertEqual(network.route_count('A'), 2)

    def test_unknown_link_raises(self):
        with self.assertRaises(UnknownLinkError):
            three_links().routes_through('Z')

    def test_mean_rtt(self):
        network = three_links()
        self.assertAlmostEqual(mean_rtt(network, 'A'), 1.5)
        self.assertAlmostEqual(mean_rtt(network, 'B'), 1.75)
        self.assertAlmostEqual(mean_rtt(network, 'C'), 1.15)

    def test_mean_rtt_of_empty_link(self):
        network = Network(links=(Link('l', 1, 1), Link('k', 1, 1)), routes=(route('r', ['l'], 1.0),))
        with self.assertRaises(EmptyLinkError):
            mean_rtt(network, 'k')

    def test_gain_rtt_prefers_override(self):
        network = single_link(rtts=(1.0, 3.0), rtt=5.0)
        self.assertEqual(network.gain_rtt('l'), 5.0)
        self.assertEqual(single_link(rtts=(1.0, 3.0)).gain_rtt('l'), 2.0)

    def test_per_packet_rtt_weights_by_rate(self):
        network = single_link(rtts=(1.0, 3.0))
        self.assertAlmostEqual(per_packet_rtt(network, 'l', {'r1': 3.0, 'r2': 1.0}), 1.5)
        # Con tasas iguales coincide con el promedio simple.
        self.assertAlmostEqual(per_packet_rtt(network, 'l', {'r1': 1.0, 'r2': 1.0}), mean_rtt(network, 'l'))

    def test_per_packet_rtt_without_flow(self):
        with self.assertRaises(ZeroFlowError):
            per_packet_rtt(single_link(), 'l', {'r1': 0.0, 'r2': 0.0})

    def test_with_alphas_replaces_only_named_links(self):
        network = three_links().with_alphas({'A': 2.5})
        self.assertEqual(network.link('A').alpha, 2.5)
        self.assertEqual(network.link('B').alpha, 0.5)
        with self.assertRaises(UnknownLinkError):
            network.with_alphas({'Z': 1.0})

    def test_delay_helpers(self):
        network = three_links()
        self.assertAlmostEqual(network.min_positive_delay(), 0.3)
        self.assertEqual(network.max_rtt(), 2.0)
        self.assertFalse(network.is_delay_free)


class ValidateTests(SimpleTestCase):
    def test_valid_network(self):
        report = validate(three_links())
        self.assertTrue(report.is_valid, report.codes())

    def test_rtt_mismatch_names_route_and_link(self):
        network = Network(
            links=(Link('l', 1, 1),),
            routes=(Route.from_forward_delays('r', ['l'], [0.6], 1.0, return_delays=[0.5]),),
        )
        report = validate(network)
        self.assertEqual(report.codes(), ['rtt_mismatch'])
        violation = report.violations[0]
        self.assertEqual((violation.route, violation.link), ('r', 'l'))
        self.assertIn('(r, l)', violation.message)

    def test_bad_link_parameters(self):
        network = Network(links=(Link('l', 0.0, -1.0, -0.5),), routes=(route('r', ['l'], 1.0),))
        self.assertEqual(sorted(validate(network).codes()), ['alpha', 'beta', 'capacity'])

    def test_unknown_link_in_route(self):
        network = Network(links=(Link('l', 1, 1),), routes=(route('r', ['l', 'x'], 1.0),))
        self.assertIn('unknown_link', validate(network).codes())

    def test_empty_route_and_empty_link(self):
        network = Network(
            links=(Link('l', 1, 1), Link('k', 1, 1)),
            routes=(route('r', ['l'], 1.0), Route('e', (), (), (), 1.0)),
        )
        codes = validate(network).codes()
        self.assertIn('empty_route', codes)
        self.assertIn('empty_link', codes)

    def test_zero_rtt_only_when_whole_network_is_delay_free(self):
        mixed = Network(links=(Link('l', 1, 1, rtt=1.0),),
                        routes=(route('r1', ['l'], 0.0, [0.0]), route('r2', ['l'], 1.0)))
        self.assertIn('zero_rtt', validate(mixed).codes())
        delay_free = Network(links=(Link('l', 1, 1, rtt=1.0),), routes=(route('r1', ['l'], 0.0, [0.0]),))
        self.assertTrue(validate(delay_free).is_valid)

    def test_delay_free_without_rtt_override(self):
        network = Network(links=(Link('l', 1, 1),), routes=(route('r1', ['l'], 0.0, [0.0]),))
        self.assertEqual(validate(network).codes(), ['rtt_unresolved'])

    def test_duplicates_and_repeated_link(self):
        network = Network(
            links=(Link('l', 1, 1), Link('l', 2, 1)),
            routes=(route('r', ['l', 'l'], 1.0), route('r', ['l'], 1.0)),
        )
        codes = validate(network).codes()
        self.assertIn('duplicate_link', codes)
        self.assertIn('duplicate_route', codes)
        self.assertIn('repeated_link', codes)

    def test_negative_delay(self):
        network = Network(links=(Link('l', 1, 1),),
                          routes=(Route('r', ('l',), (-0.1,), (1.1,), 1.0),))
        self.assertIn('negative_delay', validate(network).codes())
