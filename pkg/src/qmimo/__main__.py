import sys

from qmimo.cli import main

sys.exit(main())
