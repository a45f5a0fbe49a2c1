__all__ = ["Globals", "get_config", "get_console", "set_console"]

from rich.console import Console


class Globals:
    _CONFIG = {
        "config_loaded": False,
        "log_verbosity": "INFO",
        "log_file_enabled": False,
        "log_file_path": "sing2ep.log",
    }
    _CONSOLE = None

    @classmethod
    def get_config(cls):
        if cls._CONFIG is None:
            raise RuntimeError("CONFIG is not initialised")
        return cls._CONFIG

    @classmethod
    def set_console(cls, console):
        if cls._CONSOLE is not None:
            raise RuntimeError("Console is already set")
        cls._CONSOLE = console

    @classmethod
    def get_console(cls):
        # diagnostics go to stderr; stdout carries command output only
        if cls._CONSOLE is None:
            cls._CONSOLE = Console(stderr=True, highlight=False, soft_wrap=True)
        return cls._CONSOLE


# Optional: Shortcut functions for convenience
def get_config():
    return Globals.get_config()

def set_console(console):
    Globals.set_console(console)

def get_console():
    return Globals.get_console()
