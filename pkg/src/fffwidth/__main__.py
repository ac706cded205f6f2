"""Allow `python3 -m fffwidth` as an alias for the `fffwidth` script."""

import sys

from .cli import main

sys.exit(main())
