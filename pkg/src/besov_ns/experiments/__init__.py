"""Configuration, rate fitting and the ``besov-ns`` command line."""
