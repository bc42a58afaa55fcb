# SPDX-License-Identifier: MIT
# Copyright 2026 The qrnet Authors

import sys

from qrnet.cli import main

if __name__ == "__main__":
    sys.exit(main())
