"""Stand-in models for exercising the harness without a container runtime."""
