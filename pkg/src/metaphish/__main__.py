import sys

from metaphish.cli import main

sys.exit(main())
