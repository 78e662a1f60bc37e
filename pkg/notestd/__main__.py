"""Запуск CLI: python -m notestd <команда>"""
import sys

from notestd.commands.main import main

if __name__ == "__main__":
    sys.exit(main())
