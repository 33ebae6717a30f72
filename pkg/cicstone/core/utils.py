# -*- coding: utf-8 -*-
""" Utils module.

"""

import json

__all__ = ["TerminalColors", "set_verbosity", "display", "split_route", "dumps_line"]


class TerminalColors:
    """
        Terminal Colors class.

        Source:
            - https://svn.blender.org/svnroot/bf-blender/trunk/blender/build_files/scons/tools/bcolors.py

        Example:
            display(TerminalColors.WARNING + "Warning: replay buffer not ready" + TerminalColors.ENDC)

    """
    HEADER = '\033[95m'
    OKBLUE = '\033[94m'
    OKGREEN = '\033[92m'
    WARNING = '\033[93m'
    FAIL = '\033[91m'
    ENDC = '\033[0m'
    BOLD = '\033[1m'
    UNDERLINE = '\033[4m'


_verbose = False


def set_verbosity(verbose: bool):
    """ sets the verbosity of console output. """
    global _verbose
    _verbose = verbose


def display(*args, **kwargs):
    if _verbose:
        print(*args, **kwargs)


def split_route(route: str, delimiter: str = ".") -> tuple:
    """ Split a dotted route like 'train.seed' into its section and key.

    :param route: The dotted route.
    :param delimiter: Route delimiter.
    :return: Tuple of (section, key).
    """
    parts = route.split(delimiter)
    if len(parts) != 2 or not all(parts):
        raise ValueError("Route '{}' must have the form 'section{}key'".format(route, delimiter))
    return parts[0], parts[1]


def dumps_line(record: dict) -> str:
    """ Encode a record as one deterministic JSON line (sorted keys, no trailing spaces). """
    return json.dumps(record, sort_keys=True, separators=(",", ":")) + "\n"
