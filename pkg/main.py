import os
import sys

# Add src to Python path so we can import mudkit without installing it
sys.path.insert(0, os.path.join(os.path.dirname(__file__), 'src'))

from mudkit.ui.cli import main

if __name__ == "__main__":
    sys.exit(main())
