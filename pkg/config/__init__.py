"""Configuration module for the octmix toolkit."""
