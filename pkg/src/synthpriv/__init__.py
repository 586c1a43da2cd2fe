"""Privacy metrics for synthetic tabular data and CAIR rubric aggregation."""

__version__ = "0.1.0"
