import sys

from pvqd.cli import main

sys.exit(main())
