"""Software renderer."""
