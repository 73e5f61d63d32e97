from dishka import Provider, Scope, provide

from experiments.services import ExperimentService


class ExperimentProvider(Provider):
    service = provide(ExperimentService, scope=Scope.APP)
