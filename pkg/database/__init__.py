"""Persistence module for the octmix toolkit."""
