"""Runtime settings and table I/O for the CLI."""
