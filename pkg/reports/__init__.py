"""Reports module for the octmix toolkit."""
