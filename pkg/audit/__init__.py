"""Audit module for the octmix toolkit."""
