"""File formats, configuration and experiment commands behind the CLI."""
