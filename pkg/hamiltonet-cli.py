#!/usr/bin/env python3
"""
Hamiltonet CLI - run experiments without installing the package
"""
import sys

from hamiltonet.cli import main

if __name__ == '__main__':
    sys.exit(main())
