"""Run services behind the command-line interface."""
