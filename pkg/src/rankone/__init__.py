"""Order-flavoured finite structures, Fraisse-class tools and small-group enumerations."""

__version__ = "0.1.0"
