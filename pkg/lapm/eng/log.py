from .config import LOG_HOME, DEBUG_MODE
from typing import TypeVar, Callable, Optional
from concurrent.futures import ThreadPoolExecutor
from functools import wraps
import logging, pathlib, time
from logging import handlers

class BCOLORS:
    OKCYAN = '\033[96m'
    OKGREEN = '\033[92m'
    WARNING = '\033[93m'
    FAIL = '\033[91m'
    ENDC = '\033[0m'
    LIGHTMAGENTA = '\033[95m'

# log records are emitted off the numerical threads
_thread_pool = ThreadPoolExecutor(max_workers=1)
def thread_wrap(func):
    def wrapper(*args, **kwargs):
        _thread_pool.submit(func, *args, **kwargs)
    return wrapper

class BaseLogger(logging.Logger):
    @thread_wrap
    def debug(self, *args, **kwargs): super().debug(*args, **kwargs)
    @thread_wrap
    def info(self, *args, **kwargs): super().info(*args, **kwargs)
    @thread_wrap
    def warning(self, *args, **kwargs): super().warning(*args, **kwargs)
    @thread_wrap
    def error(self, *args, **kwargs): super().error(*args, **kwargs)

def _strip_colors(s: str) -> str:
    for color in vars(BCOLORS).values():
        if isinstance(color, str) and color.startswith('\033'):
            s = s.replace(color, '')
    return s

__g_logger_dict: dict[str, BaseLogger] = {}
def get_logger(
    name = 'lapm',
    log_home = pathlib.Path(LOG_HOME),
    level = 'DEBUG',
    term_level: Optional[str] = None,
    )->BaseLogger:
    """
    One logger per channel ('lapm', 'resolvent', 'solver', 'sweep'): colored console output,
    and a rotating plain-text file `<log_home>/<name>.log`.
    The terminal level defaults to INFO, or DEBUG when LAPM_DEBUG=1. Console records go
    to stderr, the CLI's reports to stdout.
    """
    if name in __g_logger_dict:
        return __g_logger_dict[name]
    if term_level is None:
        term_level = 'DEBUG' if DEBUG_MODE else 'INFO'

    logger = BaseLogger(name)
    logger.setLevel(level)

    format_str = BCOLORS.LIGHTMAGENTA + ' %(asctime)s ' +BCOLORS.OKCYAN + '[%(name)s][%(levelname)s] ' + BCOLORS.ENDC + ' %(message)s'
    console_handler = logging.StreamHandler()
    console_handler.setFormatter(logging.Formatter(format_str))
    console_handler.setLevel(term_level)
    logger.addHandler(console_handler)

    log_home.mkdir(parents=True, exist_ok=True)
    file_handler = handlers.RotatingFileHandler(log_home / f'{name}.log', maxBytes=1024*1024, backupCount=5)
    file_handler.setFormatter(logging.Formatter(_strip_colors(format_str)))
    logger.addHandler(file_handler)

    __g_logger_dict[name] = logger
    return logger

def _summary(res) -> Optional[str]:
    # solvers return (state, report), sweeps return a report
    report = res[-1] if isinstance(res, tuple) and res else res
    if hasattr(report, 'converged') or hasattr(report, 'partial'):
        return str(report) if hasattr(report, 'converged') else f"partial={report.partial}, rate={report.rate:.4g}"
    return None

FUNCTION_T = TypeVar('FUNCTION_T', bound=Callable)
def log_access(
    include_args: bool = True,
    logger: Optional[BaseLogger] = None,
):
    """ Log entry, wall time and the report summary of a long running numerical entry point. """
    def _log_access(fn: FUNCTION_T) -> FUNCTION_T:
        @wraps(fn)
        def wrapper(*args, **kwargs):
            _logger = logger if logger is not None else get_logger()
            if include_args:
                _logger.debug(f'[func] <{fn.__name__}> called with: {args}, {kwargs}')
            else:
                _logger.debug(f'[func] <{fn.__name__}>')
            t0 = time.perf_counter()
            res = fn(*args, **kwargs)
            summary = _summary(res)
            _logger.info(
                f'[func] <{fn.__name__}> done in {time.perf_counter() - t0:.3f}s' +
                (f': {summary}' if summary else '')
            )
            return res
        return wrapper          # type: ignore
    return _log_access

__ALL__ = [
    'get_logger', 'log_access', 'BCOLORS'
]
