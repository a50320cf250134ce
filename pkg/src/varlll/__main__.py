import sys

from varlll.cli import main

sys.exit(main())
