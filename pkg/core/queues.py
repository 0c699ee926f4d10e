"""Funciones de cola media p_l(·) para el régimen de buffers pequeños (q_l = p_l(y_l))."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from django.db import models

from .exceptions import ElasticityUndefinedError, QueueDomainError


class QueueFamily(models.TextChoices):
    ZERO = 'zero', 'Sin cola (p ≡ 0)'
    LINEAR = 'linear', 'Lineal k·y'
    POWER = 'power', 'Potencia k·y^m'
    MM1_SCALED = 'mm1_scaled', 'M/M/1 escalada k·y/(C − y)'


@dataclass(frozen=True)
class QueueFunction:
    """p(y) continuamente diferenciable y creciente, con p(0) = 0.

    `capacity` es el polo de la familia mm1_scaled; las demás lo ignoran.
    Los métodos aceptan escalares o arreglos de numpy.
    """
    family: str = QueueFamily.ZERO
    k: float = 1.0
    m: float = 2.0
    capacity: float | None = None

    def __post_init__(self):
        if self.family not in QueueFamily.values:
            raise ValueError(f"Familia de cola desconocida: {self.family}")
        if self.family != QueueFamily.ZERO and not self.k > 0:
            raise ValueError(f"La escala k debe ser > 0: {self.k}")
        if self.family == QueueFamily.POWER and not self.m >= 1:
            raise ValueError(f"El exponente m debe ser ≥ 1: {self.m}")
        if self.family == QueueFamily.MM1_SCALED and not (self.capacity and self.capacity > 0):
            raise ValueError("mm1_scaled necesita la capacidad del enlace")

    @property
    def is_zero(self):
        return self.family == QueueFamily.ZERO

    def upper_bound(self):
        """Extremo (abierto) del dominio en y; None si no hay polo."""
        return self.capacity if self.family == QueueFamily.MM1_SCALED else None

    def _check_domain(self, y):
        y = np.asarray(y, dtype=float)
        if np.any(y < 0):
            raise QueueDomainError(f"Tasa agregada negativa: {np.min(y):g}")
        if self.family == QueueFamily.MM1_SCALED and np.any(y >= self.capacity):
            raise QueueDomainError(
                f"mm1_scaled evaluada en y = {np.max(y):g} ≥ C = {self.capacity:g}"
            )
        return y

    def _result(self, value):
        return float(value) if np.ndim(value) == 0 else value

    def value(self, y):
        """p(y)."""
        y = self._check_domain(y)
        if self.family == QueueFamily.ZERO:
            out = np.zeros_like(y)
        elif self.family == QueueFamily.LINEAR:
            out = self.k * y
        elif self.family == QueueFamily.POWER:
            out = self.k * y ** self.m
        else:
            out = self.k * y / (self.capacity - y)
        return self._result(out)

    def derivative(self, y):
        """p'(y)."""
        y = self._check_domain(y)
        if self.family == QueueFamily.ZERO:
            out = np.zeros_like(y)
        elif self.family == QueueFamily.LINEAR:
            out = np.full_like(y, self.k)
        elif self.family == QueueFamily.POWER:
            out = self.k * self.m * y ** (self.m - 1)
        else:
            out = self.k * self.capacity / (self.capacity - y) ** 2
        return self._result(out)

    def elasticity(self, y):
        """γ = y·p'(y)/p(y); exacto por familia (1 lineal, m potencia, C/(C − y) mm1)."""
        y = self._check_domain(y)
        if self.family == QueueFamily.ZERO:
            raise ElasticityUndefinedError("γ no está definido para la familia zero")
        if np.any(y <= 0):
            raise ElasticityUndefinedError("γ no está definido donde p(y) = 0")
        if self.family == QueueFamily.LINEAR:
            out = np.ones_like(y)
        elif self.family == QueueFamily.POWER:
            out = np.full_like(y, float(self.m))
        else:
            out = self.capacity / (self.capacity - y)
        return self._result(out)


ZERO_QUEUE = QueueFunction()
