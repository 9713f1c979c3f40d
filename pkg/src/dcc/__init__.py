"""Delivery-cost-control toolchain for a dimension-tagged code base."""

__version__ = "0.1.0"
