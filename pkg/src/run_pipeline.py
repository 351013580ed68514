#!/usr/bin/env python3
"""
Script to run the figurative-language RLVR pipeline from a config file.
This is a thin wrapper around the figrlvr package.
"""

import sys
from figrlvr.cli import main

if __name__ == '__main__':
    sys.exit(main())
