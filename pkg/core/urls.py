# core/urls.py
from django.urls import path, include
from rest_framework.routers import DefaultRouter
from . import views

router = DefaultRouter()
router.register(r'scenarios', views.ScenarioViewSet, basename='scenario')

urlpatterns = [
    path('', include(router.urls)),
]
