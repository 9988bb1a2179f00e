import sys

from gmmd.cli import main

sys.exit(main())
