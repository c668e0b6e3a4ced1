"""dilframe entry point - runs one CLI command."""

import sys

from dilframe.cli import main

if __name__ == "__main__":
    sys.exit(main())
