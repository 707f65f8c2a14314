class ConfigError(ValueError):
    """Raised when a configuration value is missing, malformed, or out of range."""
