"""Run the command-line interface with ``python -m xifunc``."""

import sys

from .cli import main

sys.exit(main())
