from functools import wraps
from typing import Callable
import argparse, sys

from ..eng.error import AdmissibilityError, USER_ERRORS, NUMERICAL_ERRORS
from ..eng.log import get_logger, BCOLORS

EXIT_OK = 0
EXIT_USER = 1
EXIT_NUMERICAL = 2

def print_ok(msg: str):
    print(f"{BCOLORS.OKGREEN}{msg}{BCOLORS.ENDC}")

def print_warn(msg: str):
    print(f"{BCOLORS.WARNING}{msg}{BCOLORS.ENDC}")

def print_err(label: str, e: BaseException | str):
    print(f"{BCOLORS.FAIL}[{label}]: {e}{BCOLORS.ENDC}", file=sys.stderr)

def handle_exception(fn: Callable[..., int]) -> Callable[..., int]:
    """ Map the library's exceptions to exit codes: 1 for user errors, 2 for numerical failures. """
    @wraps(fn)
    def wrapper(*args, **kwargs) -> int:
        try:
            return fn(*args, **kwargs)
        except Exception as e:
            if isinstance(e, AdmissibilityError): print_err("Not admissible", e); return EXIT_USER
            if isinstance(e, USER_ERRORS): print_err(type(e).__name__, e); return EXIT_USER
            if isinstance(e, (FileNotFoundError, IsADirectoryError, PermissionError)): print_err("File error", e); return EXIT_USER
            if isinstance(e, NUMERICAL_ERRORS): print_err(type(e).__name__, e); return EXIT_NUMERICAL
            get_logger().error(f"Uncaptured error in {fn.__name__}: {e}")
            raise
    return wrapper

class ArgumentParser(argparse.ArgumentParser):
    """ Usage errors exit with code 1. """
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USER, f"{self.prog}: error: {message}\n")
