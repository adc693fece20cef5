import sys

from ctreserve.cli import main

sys.exit(main())
