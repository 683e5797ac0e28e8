"""
URL configuration for free_probability_lab.

Only the admin is served; it lists recorded experiment runs.
"""
from django.contrib import admin
from django.urls import path

urlpatterns = [
    path('admin/', admin.site.urls),
]
