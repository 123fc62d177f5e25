"""Core modules for the octmix toolkit."""
