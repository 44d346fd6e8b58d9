"""
Script principal pour lancer le laboratoire d'extensions lipschitziennes
"""

import sys

from lipext.lab_cli import main

if __name__ == "__main__":
    sys.exit(main())
