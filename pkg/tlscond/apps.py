from django.apps import AppConfig


class TlscondConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'tlscond'
