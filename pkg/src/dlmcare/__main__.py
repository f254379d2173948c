import sys

from dlmcare.cli import main

sys.exit(main())
