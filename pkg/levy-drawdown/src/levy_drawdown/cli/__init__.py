"""Command-line front end: presets, run configs and result writers."""
