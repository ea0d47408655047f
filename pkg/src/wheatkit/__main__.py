import sys

from wheatkit.cli import main

sys.exit(main())
