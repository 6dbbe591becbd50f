import sys

from moduli_py.cli import main

sys.exit(main())
