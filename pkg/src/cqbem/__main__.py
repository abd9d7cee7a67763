"""python -m cqbem behaves exactly like the cqbem console script."""

import sys

from cqbem.cli import cli_main

if __name__ == "__main__":
    sys.exit(cli_main())
