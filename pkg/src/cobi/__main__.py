import sys

from cobi.cli import main

sys.exit(main())
