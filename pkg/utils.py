# external module imports
from imports import Any, datetime, escape, json, os, Path, Text, traceback
# get global state objects (CONFIG and console)
from globals import get_config, get_console
CONFIG = get_config()
SCRIPT_DIR = Path(__file__).resolve().parent

# ── Config & Logging ────────────────────────────────────────────────
LEVEL_ORDER = ["DEBUG", "INFO", "WARN", "ERROR"]
TOLERANCE_ENV_VAR = "SING2EP_TOL"


class Aborting(Exception):
    pass


def load_config(config_path: str | Path = f"{SCRIPT_DIR}/sing2ep_config.json"):
    config_path = Path(config_path)
    defaults_path = SCRIPT_DIR / "sing2ep_config.example.json"
    local_override_path = Path(f"{config_path}.local")

    try:
        with open(defaults_path, 'r', encoding='utf-8') as f:
            default_config = json.load(f)
            deep_merge_config(CONFIG, default_config)
            CONFIG["config_loaded"] = True
            CONFIG["script_dir"] = str(SCRIPT_DIR)
            log('DEBUG', f'Loaded default config from: {defaults_path}', prefix="UTILS")
    except FileNotFoundError:
        log('ERROR', f'No default config file found at: {defaults_path}', prefix="UTILS")
    except Exception as e:
        log('ERROR', f"Failed to load default config from {defaults_path}: {e}", prefix="UTILS")

    try:
        with open(config_path, 'r', encoding='utf-8') as f:
            user_config = json.load(f)
            deep_merge_config(CONFIG, user_config)
            CONFIG["config_loaded"] = True
            log('DEBUG', f'Loaded config from: {config_path}', prefix="UTILS")
    except FileNotFoundError:
        log('DEBUG', f'No config file found at: {config_path}', prefix="UTILS")
    except Exception as e:
        log('ERROR', f"Failed to load config from {config_path}: {e}", prefix="UTILS")

    # ".local" overrides stay out of version control
    try:
        with open(local_override_path, 'r', encoding='utf-8') as f:
            user_config = json.load(f)
            deep_merge_config(CONFIG, user_config)
            log('DEBUG', f'Loaded config from: {local_override_path}', prefix="UTILS")
    except FileNotFoundError:
        log('DEBUG', f'No ".local" config file found at: {local_override_path}', prefix="UTILS")
    except Exception as e:
        log('ERROR', f"Failed to load config from {local_override_path}: {e}", prefix="UTILS")

    apply_env_overrides()


def deep_merge_config(base: dict[str, Any], override: dict[str, Any]) -> dict[str, Any]:
    """Merge nested config dictionaries so `.local` files can override single keys."""
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(base.get(key), dict):
            deep_merge_config(base[key], value)
        else:
            base[key] = value
    return base


def apply_env_overrides(environ: dict[str, str] | None = None) -> None:
    """Apply SING2EP_TOL on top of the merged config files."""
    environ = os.environ if environ is None else environ
    raw_value = environ.get(TOLERANCE_ENV_VAR)
    if raw_value is None or raw_value.strip() == "":
        return
    try:
        value = float(raw_value)
    except ValueError:
        log("WARN", f"Ignoring {TOLERANCE_ENV_VAR}={raw_value!r}: not a number", prefix="UTILS")
        return
    if not (value > 0.0) or value != value or value == float("inf"):
        log("WARN", f"Ignoring {TOLERANCE_ENV_VAR}={raw_value!r}: must be a finite positive number", prefix="UTILS")
        return
    CONFIG["rank_tol"] = value
    log("DEBUG", f"rank_tol set to {value} from {TOLERANCE_ENV_VAR}", prefix="UTILS")


def is_path_writable(path: str | Path) -> bool:
    """Return True if the given file path is writable (or can be created)."""
    path_as_Path = Path(path)
    try:
        if path_as_Path.exists() and path_as_Path.is_file():
            return os.access(path_as_Path, os.W_OK)
        return os.access(path_as_Path.parent, os.W_OK)
    except OSError:
        return False


def log(level: str, msg: str, prefix: str = '', exception: Exception = None):
    # set defaults
    log_to_file = False
    log_file_path = 'sing2ep.log'
    verbosity_decision_log_enabled = False
    verbosity_default = LEVEL_ORDER.index(str(CONFIG.get("log_verbosity", "INFO")).upper())
    verbosity_subject_key = None
    level = level.upper()
    level_map = {
        "DEBUG": "[dim cyan][DEBUG][/dim cyan]",
        "INFO": "[bold green][INFO ][/bold green]",
        "WARN": "[bold yellow][WARN ][/bold yellow]",
        "ERROR": "[bold red][ERROR][/bold red]",
    }

    if CONFIG.get("config_loaded"):
        try:
            verbosity_subject_key = CONFIG["log_verbosity_" + prefix.lower()]
            verbosity = LEVEL_ORDER.index(verbosity_subject_key)
            verbosity_decision_log_enabled = CONFIG.get("verbosity_decision_log_enabled", False)
        except (KeyError, ValueError):
            # unknown prefix falls back to the overall verbosity level
            try:
                verbosity_subject_key = CONFIG["log_verbosity"]
                verbosity = LEVEL_ORDER.index(verbosity_subject_key)
            except (KeyError, ValueError):
                verbosity_subject_key = "DEBUG"
                verbosity = LEVEL_ORDER.index("DEBUG")
            prefix = f"PREFIX not found: {prefix}!" if prefix != '' else "NO PREFIX!"

        log_to_file = bool(CONFIG.get("log_file_enabled", False))
        log_file_path = CONFIG.get("log_file_path", log_file_path)
    else:
        # no config yet
        verbosity = verbosity_default

    if verbosity_decision_log_enabled and is_path_writable(log_file_path):
        verbosity_decision_msg = (f'\n'
                                  f'Verbosity decision based on:\n'
                                  f'verbosity_overall = {str(CONFIG.get("log_verbosity")).upper()} = {verbosity_default}\n'
                                  f'verbosity_subject = {verbosity_subject_key} = {verbosity}\n'
                                  f'message level = {level} = {LEVEL_ORDER.index(level)}\n')
        with Path(log_file_path).open("a", encoding="utf-8") as f:
            f.write(verbosity_decision_msg)

    if LEVEL_ORDER.index(level) < verbosity:
        # if the message level is lower than the required level, just return
        return

    if exception:
        exception_text = f"{type(exception).__name__}: {exception}\n{traceback.format_exc()}"
    else:
        exception_text = None

    tag = level_map.get(level, "[white][LOG][/white]")
    full_prefix = escape(f"[{prefix.center(11)}] ") if prefix else ""
    plain_msg = _plain_text(msg)

    if log_to_file and is_path_writable(log_file_path):
        timestamp = datetime.datetime.now().strftime("%Y-%m-%d %H:%M:%S")
        plain_prefix = f"{prefix:<11} " if prefix else ""
        file_msg = f"{timestamp} | {level:<5} | {plain_prefix}{plain_msg}\n"
        if exception_text:
            file_msg += exception_text + "\n"
        with Path(log_file_path).open("a", encoding="utf-8") as f:
            f.write(file_msg)

    console = get_console()
    console.print(f"{tag} {full_prefix}{escape(plain_msg)}")
    if exception_text:
        console.print(f"[red]{escape(exception_text)}[/red]")

    if level == 'ERROR':
        raise Aborting(plain_msg)


def _plain_text(msg: Any) -> str:
    try:
        return Text.from_markup(str(msg)).plain
    except Exception:
        # not valid markup, e.g. a structure string with brackets
        return str(msg)


# ── IO Utilities ────────────────────────────────────────────────────
def load_json(json_path: str | Path | None = None, json_string: str | None = None) -> Any:
    if json_path:
        try:
            with open(json_path, 'r', encoding='utf-8') as json_file_handle:
                json_string = json_file_handle.read()
        except Exception as e:
            log("ERROR", f"Failed to read {json_path}", prefix="UTILS", exception=e)
            raise

    try:
        data = json.loads(json_string, parse_constant=_reject_json_constant)
        log("DEBUG", f"Loaded JSON document ({len(json_string)} characters)", prefix="UTILS")
        return data
    except Exception as e:
        log("ERROR", f"Failed to parse JSON input ({len(json_string or '')} characters): {e}", prefix="UTILS")
        raise


def _reject_json_constant(name: str):
    raise ValueError(f"non-finite JSON constant {name} is not allowed")


def dumps_json(data: Any) -> str:
    """Canonical JSON text: sorted keys, fixed indentation, no trailing whitespace."""
    return json.dumps(data, indent=2, sort_keys=True, ensure_ascii=False, allow_nan=False)

