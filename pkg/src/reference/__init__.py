"""In-process reference controller used as a measurement oracle."""
