import sys

from lockspring.cli import main

sys.exit(main())
