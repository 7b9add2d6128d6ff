import sys

from drlqr_plot.cli import main

if __name__ == "__main__":
    sys.exit(main())
