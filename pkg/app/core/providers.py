from dishka import Provider, Scope, provide

from core.settings import Settings
from core.tables import TableWriter


class CoreProvider(Provider):
    table_writer = provide(TableWriter, scope=Scope.APP)

    def __init__(self, settings: Settings):
        super().__init__()
        self._settings = settings

    @provide(scope=Scope.APP)
    def settings(self) -> Settings:
        return self._settings
