import json
import math

from django.urls import reverse
from rest_framework import status
from rest_framework.test import APISimpleTestCase

from .factories import scenario_path


def load(name):
    return json.loads(scenario_path(name).read_text(encoding='utf-8'))


class ScenarioAPITests(APISimpleTestCase):
    def test_validate_valid(self):
        response = self.client.post(reverse('scenario-validate'), load('three_links'), format='json')
        self.assertEqual(response.status_code, status.HTTP_200_OK)
        self.assertEqual(response.data, {'valid': True, 'violations': []})

    def test_validate_lists_violations(self):
        response = self.client.post(reverse('scenario-validate'), load('invalid_rtt_mismatch'), format='json')
        self.assertEqual(response.status_code, status.HTTP_200_OK)
        self.assertFalse(response.data['valid'])
        violation = response.data['violations'][0]
        self.assertEqual((violation['code'], violation['route'], violation['link']), ('rtt_mismatch', 'r', 'l'))

    def test_malformed_document(self):
        response = self.client.post(reverse('scenario-validate'), {'links': 3}, format='json')
        self.assertEqual(response.status_code, status.HTTP_400_BAD_REQUEST)
        self.assertIn('links', response.data['details'])

    def test_equilibrium(self):
        response = self.client.post(reverse('scenario-equilibrium'), load('three_links'), format='json')
        self.assertEqual(response.status_code, status.HTTP_200_OK)
        self.assertEqual(response.data['equilibrium']['link_rates'], {'A': 1.0, 'B': 3.0, 'C': 4.0})
        self.assertEqual(response.data['equilibrium']['bottleneck']['r3'], 'B')

    def test_equilibrium_rejects_invalid_scenario(self):
        response = self.client.post(reverse('scenario-equilibrium'), load('invalid_rtt_mismatch'), format='json')
        self.assertEqual(response.status_code, status.HTTP_400_BAD_REQUEST)
        self.assertEqual(response.data['violations'][0]['code'], 'rtt_mismatch')

    def test_report(self):
        response = self.client.post(reverse('scenario-report'), load('single_link'), format='json')
        self.assertEqual(response.status_code, status.HTTP_200_OK)
        self.assertAlmostEqual(response.data['stability']['links']['l']['theorem3_lhs'], 0.5)
        self.assertAlmostEqual(response.data['hopf_prediction']['eta_c'], math.pi)
        self.assertNotIn('round_trip', response.data)

    def test_report_round_trip(self):
        url = reverse('scenario-report') + '?round_trip=true'
        response = self.client.post(url, load('single_link_linear_queue'), format='json')
        self.assertEqual(response.status_code, status.HTTP_200_OK)
        self.assertEqual(response.data['round_trip']['alphas'], {'l': 0.5})
        self.assertTrue(response.data['round_trip']['stability']['decentralized_all_ok'])
