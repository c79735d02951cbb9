"""
Vercel serverless entry point for the estimation service.
"""
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.dirname(__file__)))

from grenander.main import app  # noqa: E402,F401
