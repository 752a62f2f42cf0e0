import sys

from tinylfu.cli import main

sys.exit(main())
