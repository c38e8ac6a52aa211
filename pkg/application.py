"""Newton Resistance Solver - Main Application."""
import sys
from typing import Optional, Sequence

from app.cli import create_parser
from app.commands import register_commands
from app.utils import setup_logging


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser, commands = create_parser()

    # Register all command handlers
    register_commands(commands)

    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    setup_logging(bool(args.verbose))
    return args.handler(args)


if __name__ == "__main__":
    sys.exit(main())
