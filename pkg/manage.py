#!/usr/bin/env python
import os
import sys

def main():
    os.environ.setdefault("DJANGO_SETTINGS_MODULE", "decomp_qa.settings")
    try:
        from django.core.management import execute_from_command_line
    except ImportError as exc:
        raise ImportError(
            "Django non trovato: installa requirements.txt nell'ambiente attivo."
        ) from exc
    execute_from_command_line(sys.argv)

if __name__ == "__main__":
    main()
