#!/usr/bin/env python
""" cicstone command line starter.

"""

import sys

from cicstone import commands


if __name__ == '__main__':
    sys.exit(commands.main())
