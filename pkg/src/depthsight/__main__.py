import sys

from depthsight.cli import main

sys.exit(main())
