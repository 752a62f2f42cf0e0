"""TinyLFU admission, classic eviction policies and a trace-driven simulator."""
