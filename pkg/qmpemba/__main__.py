import sys

from qmpemba.cli import main

sys.exit(main())
