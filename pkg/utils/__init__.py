"""Utilities module for the octmix toolkit."""
