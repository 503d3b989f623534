import sys

from semmap.cli import main

sys.exit(main())
