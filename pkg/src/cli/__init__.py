"""Command-line interface: ``mecp-sim run | compare | validate``."""
