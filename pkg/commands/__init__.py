"""Command implementations for the octmix CLI."""
