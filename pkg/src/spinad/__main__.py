import sys

from spinad.cli import main

sys.exit(main())
