"""Entry points: command line and chat bot."""
