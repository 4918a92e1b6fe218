"""Run plumbing: config files, CSV metrics, experiment recipes, CLI."""
