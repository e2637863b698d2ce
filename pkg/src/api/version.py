"""
Version Information

This module provides the code version and is
automatically updated by commitizen on version bumps.

DO NOT EDIT IT MANUALLY.
"""

__version__ = "0.1.0"
