# Configuration and error types
