from django.apps import AppConfig


class TlsConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'tls'
