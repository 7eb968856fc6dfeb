"""living-arch: living UML component diagrams recovered from Docker Compose files."""

__version__ = "0.1.0"
