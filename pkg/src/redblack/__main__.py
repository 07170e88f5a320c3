import sys

from redblack.cli import main

sys.exit(main())
