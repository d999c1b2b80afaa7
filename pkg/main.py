# Entry point
import sys

from src.scripts.graph_sketch import main

if __name__ == "__main__":
    sys.exit(main())
