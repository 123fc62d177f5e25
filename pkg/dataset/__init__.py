"""Dataset module for the octmix toolkit."""
