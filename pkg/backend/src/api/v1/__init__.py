"""Versioned API routes — /api/v1/."""
