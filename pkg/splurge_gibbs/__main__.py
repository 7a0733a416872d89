"""
Entry point for ``python -m splurge_gibbs``.
"""

import sys

from splurge_gibbs.cli import main

sys.exit(main())
