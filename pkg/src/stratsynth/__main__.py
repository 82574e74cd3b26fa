import sys

from stratsynth.cli import main

sys.exit(main())
