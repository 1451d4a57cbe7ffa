"""Neural synthesis of restricted C list programs from input-output examples."""

__version__ = "0.1.0"
