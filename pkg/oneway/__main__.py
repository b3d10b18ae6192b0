"""
Entry point for running oneway as a module:

    python -m oneway rotate --alpha pi/4
"""

from .cli import cli

if __name__ == "__main__":
    cli()
