import sys

from dhif.cli import main

sys.exit(main())
