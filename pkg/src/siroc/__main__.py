import sys

from siroc.cli import main

sys.exit(main())
